#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "replisim/jobqueue.hpp"
#include "replisim/locks.hpp"
#include "replisim/proxy.hpp"
#include "replisim/scheduler.hpp"
#include "replisim/world.hpp"

namespace replisim {

// The replication engine: periodic channel sync plus the four-stage flow
// (download, metadata, creation, upload). Lives inside the service process;
// every continuation it schedules is tied to the service scope.
class PipelineEngine {
 public:
  PipelineEngine(World& w, EventScope& scope, LockManager& locks,
                 JobQueue& queue, ProxyPool& proxy, SeededRng rng);

  // First cycle immediately, then one every cfg.pollIntervalMs.
  void startPolling();

  // One full sync cycle: channel scan, token/stats phase, ingestion,
  // backlog recalculation, then a dispatcher pass.
  void runSyncCycle(std::function<void()> done = {});

  // Fills per-stage capacity from the ready queues.
  void pump();

  // Admission (tier caps, per-video ceilings) plus priority computation.
  // Returns false when the video was rejected or already in flight.
  bool enqueueVideo(const ChannelRecord& ch, const VideoRecord& v, Stage first);

  // Closes leaked platform connections; the crash path calls this because
  // the platform outlives the process that opened them.
  void emergencyCloseConnections();

  std::int64_t cyclesCompleted() const { return cycles_; }
  const PriorityConstants& priorityConstants() const { return prio_; }
  void setPriorityConstants(const PriorityConstants& c) { prio_ = c; }

 private:
  struct CreationSession;

  void processChannel(const ChannelRecord& snapshot);
  void statsPhase(ChannelRecord& ch);
  void ingestChannel(const ChannelRecord& ch);
  void refreshBacklog(const std::string& channelId);
  void optOutChannel(ChannelRecord ch);
  Stage lastFlowStage() const {
    return w_.cfg.uploadsEnabled ? Stage::Upload : Stage::Creation;
  }

  // False when the job could not be started (bind queue full); the job is
  // already requeued and a deferred pump is pending.
  bool startDownload(std::uint64_t jobId);
  void schedulePumpRetry(VirtualMs delay);
  void downloadWithEndpoint(std::uint64_t jobId, const std::string& endpoint);
  void finishDownloadFailure(std::uint64_t jobId, const std::string& endpoint,
                             VideoState mark, const std::string& reason);
  void startMetadata(std::uint64_t jobId);
  void maybeRunCreationBatch();
  void runCreationBlock(const std::shared_ptr<CreationSession>& s);
  void handleCreationReceipt(const std::shared_ptr<CreationSession>& s,
                             const std::vector<std::uint64_t>& jobIds,
                             const BatchReceipt& r);
  void startUpload(std::uint64_t jobId);
  void uploadAttempt(std::uint64_t jobId, int attempt);

  // Durable write with a 1s retry loop for throttled writes; the retry is
  // scope-bound so a crash abandons it.
  void putVideoRetrying(VideoRecord v);
  void markUnavailable(VideoRecord v, VideoState mark, const std::string& why);

  World& w_;
  EventScope& scope_;
  LockManager& locks_;
  JobQueue& queue_;
  ProxyPool& proxy_;
  SeededRng rng_;
  PriorityConstants prio_{};

  bool cycleActive_ = false;
  bool creationSessionActive_ = false;
  bool pumpRetryScheduled_ = false;
  std::int64_t cycles_ = 0;
  int maxBatchBlocks_ = 10;
  VirtualMs leaseRenewMs_ = secondsMs(30);
  std::multiset<std::string> openConnections_;
};

}  // namespace replisim
