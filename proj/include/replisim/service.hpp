#pragma once

#include <memory>

#include "replisim/clock.hpp"
#include "replisim/jobqueue.hpp"
#include "replisim/locks.hpp"
#include "replisim/pipeline.hpp"
#include "replisim/proxy.hpp"
#include "replisim/time.hpp"
#include "replisim/world.hpp"

namespace replisim {

// The replicator process. Everything owned here dies with the process:
// queue, lock table, proxy bindings, in-flight continuations. The world
// (clock, store, platform, sink, disk) is the host and survives a crash.
class ServiceProcess {
 public:
  explicit ServiceProcess(World& w);

  // Startup reconciliation, then steady-state polling. Reconciliation
  // resolves durable intents against the sink before any worker runs;
  // while the sink is unreachable it backs off and retries, workers held.
  void start();

  // Hard stop. In-flight continuations become no-ops, leases and bindings
  // evaporate, and leaked platform connections are closed by the host so
  // the detector does not keep counting them.
  void crash();

  // crash() now, start() after delayMs on the world scope.
  void restart(VirtualMs delayMs);

  bool running() const { return running_; }
  int incarnation() const { return incarnation_; }

  PipelineEngine& pipeline() { return *pipeline_; }
  JobQueue& jobs() { return *queue_; }
  ProxyPool& proxy() { return *proxy_; }
  LockManager& locks() { return locks_; }
  EventScope& scope() { return scope_; }

 private:
  // Phase 3: rows parked at the creation intent. Queries the sink for every
  // row first, then writes; a SinkUnreachable before the first write leaves
  // the store untouched and schedules a retry.
  void reconcileCreationIntents(std::function<void()> done);
  // Phase 4: rows parked at the upload intent.
  void reconcileUploadIntents();

  World& w_;
  EventScope scope_;
  LockManager locks_;
  std::unique_ptr<JobQueue> queue_;
  std::unique_ptr<ProxyPool> proxy_;
  std::unique_ptr<PipelineEngine> pipeline_;
  bool running_ = false;
  int incarnation_ = 0;
};

}  // namespace replisim
