#include "replisim/service.hpp"

#include <string>
#include <utility>
#include <vector>

#include "replisim/errors.hpp"
#include "replisim/records.hpp"
#include "replisim/states.hpp"

namespace replisim {

namespace {
constexpr VirtualMs kReconcileBackoffMs = secondsMs(5);
}

ServiceProcess::ServiceProcess(World& w) : w_(w), locks_(w.clock) {}

void ServiceProcess::start() {
  ++incarnation_;
  const std::string inc = std::to_string(incarnation_);
  queue_ = std::make_unique<JobQueue>();
  proxy_ = std::make_unique<ProxyPool>(w_.clock, scope_,
                                       w_.rootRng.fork("proxy-" + inc),
                                       w_.cfg.proxy);
  pipeline_ = std::make_unique<PipelineEngine>(
      w_, scope_, locks_, *queue_, *proxy_,
      w_.rootRng.fork("service-" + inc));
  running_ = true;
  w_.metrics.incr("serviceStarts");
  w_.metrics.note("serviceStart", "incarnation " + inc);

  // Phase 1: the in-memory queue is trivially empty for a fresh process; the
  // flush states the invariant rather than trusting it.
  const std::size_t dropped = queue_->flush();
  if (dropped != 0) w_.metrics.incr("staleJobsFlushed", dropped);

  // Phase 2: media already on disk is kept; downloads are resumable by
  // content identity, so a rescan is enough.
  w_.metrics.note("diskRescan",
                  std::to_string(w_.disk.fileCount()) + " cached files");

  // Phases 3 and 4, then workers.
  reconcileCreationIntents([this] {
    reconcileUploadIntents();
    w_.metrics.note("reconcileDone", "workers released");
    pipeline_->startPolling();
  });
}

void ServiceProcess::reconcileCreationIntents(std::function<void()> done) {
  const auto rows = w_.store.videosByState(VideoState::CreatingVideo);
  // Query everything before writing anything: an unreachable sink must not
  // leave the repair half-applied.
  std::vector<std::pair<VideoRecord, std::vector<std::string>>> resolved;
  resolved.reserve(rows.size());
  try {
    for (const auto& row : rows)
      resolved.emplace_back(row, w_.sink.chain.queryObjects(row.id));
  } catch (const SinkUnreachable&) {
    w_.metrics.incr("reconcileRetries");
    w_.metrics.note("reconcileBlocked", "sink unreachable, backing off");
    w_.clock.scheduleAfter(
        kReconcileBackoffMs,
        scope_.wrap([this, done] { reconcileCreationIntents(done); }));
    return;
  }
  for (auto& [row, objects] : resolved) {
    if (!objects.empty()) {
      // The batch landed before the crash; adopt the newest object.
      VideoRecord next =
          transition(std::move(row), VideoState::VideoCreated, w_.clock.now());
      next.sinkObjectId = objects.back();
      w_.store.putVideo(next);
      w_.metrics.incr("reconciledCreated");
    } else {
      // Intent without effect: reset to New so the flow restarts cleanly.
      // Deliberately a raw write; CreatingVideo -> New is not a lifecycle
      // edge, it is recovery erasing an unfulfilled intent.
      VideoRecord next = std::move(row);
      next.state = VideoState::New;
      next.sinkObjectId.reset();
      next.history.push_back(
          {w_.clock.now(), VideoState::CreatingVideo, VideoState::New});
      w_.store.putVideo(next);
      w_.metrics.incr("reconciledReset");
    }
  }
  done();
}

void ServiceProcess::reconcileUploadIntents() {
  const auto rows = w_.store.videosByState(VideoState::UploadStarted);
  for (const auto& row : rows) {
    if (!row.sinkObjectId) continue;  // cannot happen via lifecycle writes
    const auto [media, thumb] = w_.sink.acceptance(*row.sinkObjectId);
    if (media && thumb) {
      VideoRecord next =
          transition(row, VideoState::UploadSucceeded, w_.clock.now());
      w_.store.putVideo(next);
      w_.disk.erase(row.id);
      w_.metrics.incr("reconciledUploaded");
      continue;
    }
    // Unfinished upload: hand it back to the pipeline.
    if (!w_.cfg.uploadsEnabled) continue;
    const auto ch = w_.store.channelById(row.channelId);
    if (!ch) continue;
    if (pipeline_->enqueueVideo(*ch, row, Stage::Upload))
      w_.metrics.incr("reconciledRequeued");
  }
}

void ServiceProcess::crash() {
  if (!running_) return;
  w_.metrics.incr("crashes");
  w_.metrics.note("crash", "incarnation " + std::to_string(incarnation_));
  // Sockets the process held are torn down by the host kernel; without this
  // the detector would keep counting connections forever.
  pipeline_->emergencyCloseConnections();
  scope_.reset();
  locks_.resetAll();
  pipeline_.reset();
  proxy_.reset();
  queue_.reset();
  running_ = false;
}

void ServiceProcess::restart(VirtualMs delayMs) {
  crash();
  w_.clock.scheduleAfter(delayMs,
                         w_.worldScope.wrap([this] { start(); }));
}

}  // namespace replisim
