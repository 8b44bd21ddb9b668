#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace replisim {

enum class Stage : std::uint8_t { Download, Metadata, Creation, Upload };
inline constexpr int kStageCount = 4;
std::string_view toString(Stage s);

enum class JobStatus : std::uint8_t { Queued, Active, Completed, Failed };

// One node of a per-video flow. The flow chains download -> metadata ->
// creation -> upload; each job's parent is the next stage, and a parent only
// becomes runnable once its child completed. failParentOnFailure marks every
// ancestor failed when a child fails.
struct FlowJob {
  std::uint64_t id = 0;
  std::string videoId;
  std::string channelId;
  Stage stage = Stage::Download;
  std::int64_t priority = 0;
  std::uint64_t enqueueSeq = 0;  // tie-break: ascending ingestion order
  std::optional<std::uint64_t> parentId;
  std::optional<std::uint64_t> childId;
  bool failParentOnFailure = true;
  int attempts = 0;
  bool parked = false;
  JobStatus status = JobStatus::Queued;
};

// In-memory queue state: jobs, priorities, leases live here and nowhere
// else. Nothing survives a process restart; startup reconciliation flushes
// the queue wholesale and rebuilds it from the durable store.
class JobQueue {
 public:
  // Builds the chained jobs from firstStage through lastStage. One live flow
  // per video at a time.
  std::uint64_t enqueueFlow(const std::string& videoId,
                            const std::string& channelId,
                            std::int64_t priority, Stage firstStage,
                            Stage lastStage = Stage::Upload);

  // True while any job of the video is Queued or Active.
  bool hasLiveFlow(const std::string& videoId) const;

  // Distinct videos of the channel with a live flow.
  std::size_t liveFlowCount(const std::string& channelId) const;

  // Pops the best ready job (lowest priority value, then lowest enqueue
  // sequence) and marks it Active.
  std::optional<std::uint64_t> takeNextReady(Stage s);

  const FlowJob* job(std::uint64_t id) const;

  void complete(std::uint64_t id);
  void fail(std::uint64_t id);
  // Active -> Queued, keeping priority and sequence; used when a shared
  // transient condition (bot challenge, proxy exhaustion, throttled store)
  // postpones a job through no fault of its own.
  void requeue(std::uint64_t id);
  // Active -> Queued but parked: invisible to takeNextReady and holding no
  // slot. resumeParked makes it eligible again with a fresh sequence, behind
  // its equal-priority peers, so a persistently failing job cannot starve
  // the jobs queued after it.
  void parkActive(std::uint64_t id);
  void resumeParked(std::uint64_t id);
  void bumpAttempts(std::uint64_t id);

  // Applies fn(videoId) to every Queued job of the channel. Active jobs are
  // left untouched. Returns the number of jobs updated.
  int updateQueuedPriorities(const std::string& channelId,
                             const std::function<std::int64_t(const std::string&)>& fn);

  std::size_t readyCount(Stage s) const;
  std::int64_t queuedCount(Stage s) const { return queued_[idx(s)]; }
  std::int64_t activeCount(Stage s) const { return active_[idx(s)]; }
  std::int64_t completedTotal(Stage s) const { return completed_[idx(s)]; }
  std::int64_t failedTotal(Stage s) const { return failed_[idx(s)]; }
  std::int64_t retriedTotal(Stage s) const { return retried_[idx(s)]; }

  // Drops every job. Returns how many non-terminal jobs were discarded.
  std::size_t flush();

 private:
  static std::size_t idx(Stage s) { return static_cast<std::size_t>(s); }
  void insertReady(const FlowJob& j);
  void eraseReady(const FlowJob& j);
  void markFailed(FlowJob& j);

  using ReadyKey = std::tuple<std::int64_t, std::uint64_t, std::uint64_t>;

  std::map<std::uint64_t, FlowJob> jobs_;
  std::array<std::set<ReadyKey>, kStageCount> ready_;
  std::map<std::string, std::vector<std::uint64_t>> byVideo_;
  std::map<std::string, std::set<std::uint64_t>> byChannel_;
  std::uint64_t nextId_ = 1;
  std::uint64_t nextSeq_ = 1;
  std::array<std::int64_t, kStageCount> queued_{};
  std::array<std::int64_t, kStageCount> active_{};
  std::array<std::int64_t, kStageCount> completed_{};
  std::array<std::int64_t, kStageCount> failed_{};
  std::array<std::int64_t, kStageCount> retried_{};
};

}  // namespace replisim
