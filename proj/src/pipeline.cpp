#include "replisim/pipeline.hpp"

#include <algorithm>

#include "replisim/errors.hpp"

namespace replisim {

namespace {
constexpr std::size_t kStorePageSize = 100;  // durable scan page
constexpr std::size_t kApiBatchSize = 50;    // channel refresh batch
constexpr VirtualMs kInterBatchSleepMs = 100;
constexpr VirtualMs kMetadataRetryGapMs = minutesMs(30);
}  // namespace

PipelineEngine::PipelineEngine(World& w, EventScope& scope, LockManager& locks,
                               JobQueue& queue, ProxyPool& proxy, SeededRng rng)
    : w_(w),
      scope_(scope),
      locks_(locks),
      queue_(queue),
      proxy_(proxy),
      rng_(std::move(rng)) {}

void PipelineEngine::startPolling() {
  auto loop = std::make_shared<std::function<void()>>();
  *loop = [this, loop] {
    w_.clock.scheduleAfter(w_.cfg.pollIntervalMs, scope_.wrap(*loop));
    runSyncCycle();
  };
  w_.clock.scheduleAfter(0, scope_.wrap(*loop));
}

void PipelineEngine::runSyncCycle(std::function<void()> done) {
  if (cycleActive_) {
    w_.metrics.incr("cyclesSkipped");
    if (done) done();
    return;
  }
  cycleActive_ = true;
  w_.metrics.note("cycleStart", std::to_string(cycles_ + 1));

  auto channels = w_.store.allChannels();
  const std::size_t n = channels.size();
  const std::size_t storePages = n == 0 ? 1 : (n + kStorePageSize - 1) / kStorePageSize;
  const std::size_t apiBatches = n == 0 ? 0 : (n + kApiBatchSize - 1) / kApiBatchSize;
  const std::size_t totalBatches = storePages + apiBatches;

  auto chans = std::make_shared<std::vector<ChannelRecord>>(std::move(channels));
  auto step = std::make_shared<std::function<void(std::size_t)>>();
  *step = [this, chans, storePages, totalBatches, step,
           done = std::move(done)](std::size_t i) {
    if (i >= storePages) {
      // Channel refresh batch: one metered list call per 50 channels.
      ApiResult r = w_.platform.apiCall(ApiOp::ChannelsList, CallService::Sync);
      if (!r.ok) w_.metrics.incr("apiErrors");
    }
    if (i + 1 < totalBatches) {
      w_.clock.scheduleAfter(kInterBatchSleepMs,
                             scope_.wrap([step, i] { (*step)(i + 1); }));
      return;
    }
    // Per-channel work starts at the last batch instant.
    for (const auto& ch : *chans) processChannel(ch);
    ++cycles_;
    w_.metrics.incr("cyclesCompleted");
    cycleActive_ = false;
    pump();
    if (done) done();
  };
  // First batch runs at the cycle start instant; every later batch is
  // preceded by the pacing sleep.
  (*step)(0);
}

void PipelineEngine::optOutChannel(ChannelRecord ch) {
  ch.preOptOutStatus = ch.status;
  ch.preOptOutTier = ch.tier;
  ch.status = ChannelStatus::OptedOut;
  try {
    w_.store.putChannel(ch);
  } catch (const ThroughputExceeded&) {
    w_.metrics.incr("channelWriteThrottled");
    return;  // next cycle retries the same verdict
  }
  w_.metrics.incr("channelsOptedOut");
  w_.metrics.note("optOut", ch.id);
}

void PipelineEngine::processChannel(const ChannelRecord& snapshot) {
  auto fresh = w_.store.channelById(snapshot.id);
  if (!fresh) return;
  ChannelRecord ch = *fresh;
  if (ch.status == ChannelStatus::OptedOut ||
      ch.status == ChannelStatus::Suspended)
    return;

  if (w_.cfg.authMode == AuthMode::Token) {
    if (ch.status != ChannelStatus::Verified) return;
    if (!w_.cfg.apiUp) {
      // Authorization endpoint unreachable: no verdict, no sync.
      w_.metrics.incr("channelsSkippedApiDown");
      return;
    }
    if (!ch.token) {
      optOutChannel(ch);
      return;
    }
    switch (w_.platform.tokenLifecycle(*ch.token)) {
      case TokenStatus::Revoked:
      case TokenStatus::ExpiredRefresh: {
        // The refresh attempt is what surfaces the dead credential.
        w_.platform.apiCall(ApiOp::TokenExchange, CallService::Sync);
        optOutChannel(ch);
        return;
      }
      case TokenStatus::ExpiredAccess: {
        ApiResult r = w_.platform.apiCall(ApiOp::TokenExchange, CallService::Sync);
        if (!r.ok) {
          w_.metrics.incr("apiErrors");
          return;
        }
        TokenBundle t = *ch.token;
        w_.platform.refreshAccess(t);
        ch.token = t;
        try {
          w_.store.putChannel(ch);
        } catch (const ThroughputExceeded&) {
          w_.metrics.incr("channelWriteThrottled");
        }
        break;
      }
      case TokenStatus::Valid:
        break;
    }
  } else if (ch.status != ChannelStatus::Verified) {
    return;
  }

  // Counter refresh rides the same metered listing as discovery; without
  // the API there is nothing fresh to record.
  if (w_.cfg.apiUp) statsPhase(ch);
  ingestChannel(ch);
  refreshBacklog(ch.id);
}

void PipelineEngine::statsPhase(ChannelRecord& ch) {
  const CorpusChannel* cc = w_.platform.corpusChannel(ch.id);
  if (!cc) return;
  if (ch.subscriberCount != cc->subscriberCount ||
      ch.videoCount != cc->videoCount) {
    ch.subscriberCount = cc->subscriberCount;
    ch.videoCount = cc->videoCount;
    try {
      w_.store.putChannel(ch);
    } catch (const ThroughputExceeded&) {
      w_.metrics.incr("channelWriteThrottled");
    }
  }
  StatsRecord s;
  s.partition = "channel#" + ch.id;
  s.date = std::to_string(w_.clock.now() / kDayMs);
  s.counters["subscribers"] = ch.subscriberCount;
  s.counters["videos"] = ch.videoCount;
  auto existing = w_.store.getStats(s.partition, s.date);
  if (!existing || !(*existing == s)) {
    try {
      w_.store.putStats(s);
    } catch (const ThroughputExceeded&) {
      w_.metrics.incr("statsWriteThrottled");
    }
  }
}

void PipelineEngine::ingestChannel(const ChannelRecord& ch) {
  if (w_.cfg.apiUp) {
    const auto ids = w_.platform.listVideoIds(ch.id);
    const std::size_t pages =
        std::max<std::size_t>(1, (ids.size() + kApiBatchSize - 1) / kApiBatchSize);
    bool listed = true;
    for (std::size_t p = 0; p < pages; ++p) {
      ApiResult r =
          w_.platform.apiCall(ApiOp::PlaylistItemsList, CallService::Sync);
      if (!r.ok) {
        w_.metrics.incr(r.error == "quotaExceeded" ? "quotaRejections"
                                                   : "apiErrors");
        listed = false;
        break;
      }
    }
    if (listed) {
      for (const auto& id : ids) {
        if (w_.store.getVideo(ch.id, id)) continue;
        const CorpusVideo* cv = w_.platform.corpusVideo(id);
        if (!cv) continue;
        VideoRecord nv;
        nv.id = id;
        nv.channelId = ch.id;
        nv.publishedAtS = cv->publishedAtS;
        nv.durationS = cv->durationS;
        nv.sizeBytes = cv->sizeBytes;
        nv.state = VideoState::New;
        nv.isNew = cv->publishedAtS >= w_.cfg.epochUnixS;
        try {
          w_.store.putVideo(nv);
          w_.metrics.incr("videosDiscovered");
        } catch (const ThroughputExceeded&) {
          w_.metrics.incr("ingestWriteThrottled");
        }
      }
    }
  }

  for (const auto& row : w_.store.videosOfChannel(ch.id)) {
    if (queue_.hasLiveFlow(row.id)) continue;
    switch (row.state) {
      case VideoState::New: {
        if (w_.cfg.preDownloadChecks) {
          const CorpusVideo* cv = w_.platform.corpusVideo(row.id);
          if (!cv) { markUnavailable(row, VideoState::Deleted, "missing upstream"); break; }
          if (cv->deleted) { markUnavailable(row, VideoState::Deleted, "deleted"); break; }
          if (cv->isPrivate) { markUnavailable(row, VideoState::Private, "private"); break; }
          if (cv->ageRestricted) { markUnavailable(row, VideoState::AgeRestricted, "age restricted"); break; }
          if (cv->membersOnly) { markUnavailable(row, VideoState::MembersOnly, "members only"); break; }
          if (cv->live) { markUnavailable(row, VideoState::LiveOffline, "live"); break; }
          if (cv->regionRestricted) { markUnavailable(row, VideoState::Skipped, "region restricted"); break; }
          if (row.durationS > kMaxVideoDurationS) { markUnavailable(row, VideoState::Skipped, "duration cap"); break; }
          if (row.sizeBytes > kMaxVideoSizeBytes) { markUnavailable(row, VideoState::Skipped, "size cap"); break; }
        }
        enqueueVideo(ch, row, Stage::Download);
        break;
      }
      case VideoState::CreationFailed:
        enqueueVideo(ch, row, Stage::Creation);
        break;
      case VideoState::UploadFailed:
        if (w_.cfg.uploadsEnabled) enqueueVideo(ch, row, Stage::Upload);
        break;
      case VideoState::VideoCreated:
        if (w_.cfg.uploadsEnabled && row.sinkObjectId)
          enqueueVideo(ch, row, Stage::Upload);
        break;
      default:
        break;
    }
  }
}

void PipelineEngine::refreshBacklog(const std::string& channelId) {
  auto chOpt = w_.store.channelById(channelId);
  if (!chOpt) return;
  ChannelRecord ch = *chOpt;
  const auto rows = w_.store.videosOfChannel(channelId);
  int pct = 0;
  if (!rows.empty()) {
    std::int64_t open = 0;
    for (const auto& r : rows)
      if (!isTerminal(r.state)) ++open;
    pct = static_cast<int>(open * 100 / static_cast<std::int64_t>(rows.size()));
  }
  if (pct != ch.backlogPct) {
    ch.backlogPct = pct;
    try {
      w_.store.putChannel(ch);
    } catch (const ThroughputExceeded&) {
      w_.metrics.incr("channelWriteThrottled");
    }
  }
  locks_.acquire(LockDomain::QueueRecalc, [this, channelId](LockManager::Holder h) {
    const int updated =
        recalculateChannelPriorities(queue_, w_.store, channelId, prio_);
    if (updated > 0) w_.metrics.incr("prioritiesRecalculated", updated);
    h->release();
  });
}

bool PipelineEngine::enqueueVideo(const ChannelRecord& ch, const VideoRecord& v,
                                  Stage first) {
  if (queue_.hasLiveFlow(v.id)) return false;
  if (isTerminal(v.state)) return false;
  if (first == Stage::Download) {
    const TierSpec& ts = tierSpec(ch.tier);
    std::int64_t consumed = 0;
    std::int64_t bytes = 0;
    for (const auto& row : w_.store.videosOfChannel(ch.id)) {
      if (row.state != VideoState::New && !isUnavailability(row.state)) {
        ++consumed;
        bytes += row.sizeBytes;
      }
    }
    consumed += static_cast<std::int64_t>(queue_.liveFlowCount(ch.id));
    if (consumed >= ts.videoCap) {
      w_.metrics.incr("tierCapRejected");
      return false;
    }
    if (bytes + v.sizeBytes > ts.sizeCapBytes) {
      w_.metrics.incr("tierSizeRejected");
      return false;
    }
  }
  PriorityInputs in;
  in.publishedAtS = v.publishedAtS;
  in.durationS = v.durationS;
  in.isNew = v.isNew;
  in.tier = ch.tier;
  in.backlogPct = ch.backlogPct;
  const std::int64_t prio = computePriority(in, prio_);
  Stage last = lastFlowStage();
  if (static_cast<int>(last) < static_cast<int>(first)) last = first;
  queue_.enqueueFlow(v.id, ch.id, prio, first, last);
  w_.metrics.incr("flowsEnqueued");
  return true;
}

void PipelineEngine::pump() {
  const auto& cfg = w_.cfg;
  auto platformConnections = [this] {
    return queue_.activeCount(Stage::Download) +
           queue_.activeCount(Stage::Metadata);
  };
  while (queue_.activeCount(Stage::Download) < cfg.downloadConcurrency &&
         platformConnections() < cfg.platformConnectionCap) {
    auto id = queue_.takeNextReady(Stage::Download);
    if (!id) break;
    // A false return means the bind queue is saturated and the job went back
    // to the ready set; taking it again this instant would spin forever.
    if (!startDownload(*id)) break;
  }
  while (queue_.activeCount(Stage::Metadata) < cfg.metadataConcurrency &&
         platformConnections() < cfg.platformConnectionCap) {
    auto id = queue_.takeNextReady(Stage::Metadata);
    if (!id) break;
    startMetadata(*id);
  }
  maybeRunCreationBatch();
  if (cfg.uploadsEnabled) {
    while (queue_.activeCount(Stage::Upload) < cfg.uploadConcurrency) {
      auto id = queue_.takeNextReady(Stage::Upload);
      if (!id) break;
      startUpload(*id);
    }
  }
}

void PipelineEngine::putVideoRetrying(VideoRecord v) {
  try {
    w_.store.putVideo(v);
  } catch (const ThroughputExceeded&) {
    w_.metrics.incr("writeRetries");
    w_.clock.scheduleAfter(secondsMs(1), scope_.wrap([this, v] {
      putVideoRetrying(v);
    }));
  }
}

void PipelineEngine::markUnavailable(VideoRecord v, VideoState mark,
                                     const std::string& why) {
  if (v.state != VideoState::New) return;
  VideoRecord next = transition(std::move(v), mark, w_.clock.now());
  w_.metrics.incr("videosFiltered");
  w_.metrics.note("filtered", next.id + " " + std::string(toString(mark)) +
                                  " (" + why + ")");
  putVideoRetrying(std::move(next));
}

// Download ------------------------------------------------------------------

bool PipelineEngine::startDownload(std::uint64_t jobId) {
  const FlowJob* job = queue_.job(jobId);
  auto video = w_.store.getVideo(job->channelId, job->videoId);
  if (!video || video->state != VideoState::New) {
    // Raced with an external write; nothing left for this stage.
    queue_.complete(jobId);
    return true;
  }
  if (w_.disk.has(video->id)) {
    queue_.complete(jobId);
    w_.metrics.incr("downloadsSkippedCached");
    return true;
  }
  try {
    auto tok = scope_.token();
    proxy_.bindAsync([this, jobId, tok](const std::string& ep) {
      if (!tok.lock()) return;
      downloadWithEndpoint(jobId, ep);
    });
    return true;
  } catch (const PendingLimitExceeded&) {
    w_.metrics.incr("proxyQueueRejections");
    queue_.requeue(jobId);
    schedulePumpRetry(w_.cfg.proxy.spinWaitIntervalMs);
    return false;
  }
}

void PipelineEngine::schedulePumpRetry(VirtualMs delay) {
  if (pumpRetryScheduled_) return;
  pumpRetryScheduled_ = true;
  w_.clock.scheduleAfter(delay, scope_.wrap([this] {
    pumpRetryScheduled_ = false;
    pump();
  }));
}

void PipelineEngine::downloadWithEndpoint(std::uint64_t jobId,
                                          const std::string& endpoint) {
  w_.platform.connectionOpened(endpoint);
  openConnections_.insert(endpoint);

  auto videoIdOf = [this, jobId]() { return queue_.job(jobId)->videoId; };
  auto channelIdOf = [this, jobId]() { return queue_.job(jobId)->channelId; };

  auto handleChallenge = [this, jobId, endpoint] {
    w_.metrics.incr("botChallenges");
    w_.platform.connectionClosed(endpoint);
    auto it = openConnections_.find(endpoint);
    if (it != openConnections_.end()) openConnections_.erase(it);
    try {
      proxy_.reportFaulty(endpoint);
    } catch (const UnknownEndpoint&) {
    }
    queue_.bumpAttempts(jobId);
    queue_.requeue(jobId);
    w_.clock.scheduleAfter(0, scope_.wrap([this] { pump(); }));
  };

  auto step = std::make_shared<std::function<void(int)>>();
  *step = [this, jobId, endpoint, step, handleChallenge, videoIdOf,
           channelIdOf](int i) {
    const auto& cfg = w_.cfg;
    // Slots: 0/2/4 pacing sleeps, 1 availability check, 3 thumbnail, 5 fetch.
    if (i == 0 || i == 2 || i == 4) {
      const int slot = i / 2;
      if (cfg.sleepEnabled && slot < cfg.sleepPolicy.applicationsPerVideo) {
        const VirtualMs ms = preDownloadSleep(cfg.sleepPolicy, rng_);
        w_.platform.traceSleep(endpoint, ms);
        w_.clock.scheduleAfter(ms, scope_.wrap([step, i] { (*step)(i + 1); }));
      } else {
        (*step)(i + 1);
      }
      return;
    }
    if (i == 1) {
      if (w_.platform.scrapeRequest(endpoint, RequestKind::CheckVideo) ==
          ScrapeOutcome::BotChallenge) {
        handleChallenge();
        return;
      }
      const std::string vid = videoIdOf();
      const CorpusVideo* cv = w_.platform.corpusVideo(vid);
      VideoState mark = VideoState::New;  // New = no durable mark
      std::string reason;
      if (!cv) { mark = VideoState::Deleted; reason = "missing upstream"; }
      else if (cv->deleted) { mark = VideoState::Deleted; reason = "deleted"; }
      else if (cv->isPrivate) { mark = VideoState::Private; reason = "private"; }
      else if (cv->ageRestricted) { mark = VideoState::AgeRestricted; reason = "age restricted"; }
      else if (cv->membersOnly) { mark = VideoState::MembersOnly; reason = "members only"; }
      else if (cv->live) { mark = VideoState::LiveOffline; reason = "live"; }
      else if (cv->regionRestricted) { mark = VideoState::Skipped; reason = "region restricted"; }
      else if (cv->durationS > kMaxVideoDurationS) { mark = VideoState::Skipped; reason = "duration cap"; }
      else if (cv->sizeBytes > kMaxVideoSizeBytes) { mark = VideoState::Skipped; reason = "size cap"; }
      if (!reason.empty()) {
        finishDownloadFailure(jobId, endpoint, w_.cfg.preDownloadChecks ? mark : VideoState::New, reason);
        return;
      }
      (*step)(i + 1);
      return;
    }
    if (i == 3) {
      if (w_.platform.scrapeRequest(endpoint, RequestKind::Thumbnail) ==
          ScrapeOutcome::BotChallenge) {
        handleChallenge();
        return;
      }
      (*step)(i + 1);
      return;
    }
    // i == 5: the fetch itself.
    if (w_.platform.scrapeRequest(endpoint, RequestKind::VideoFetch) ==
        ScrapeOutcome::BotChallenge) {
      handleChallenge();
      return;
    }
    const std::string vid = videoIdOf();
    const CorpusVideo* cv = w_.platform.corpusVideo(vid);
    const std::int64_t size = cv ? cv->sizeBytes : 0;
    const VirtualMs transferMs =
        (size * 1000 + w_.cfg.bandwidthBytesPerS - 1) / w_.cfg.bandwidthBytesPerS;
    if (transferMs > w_.cfg.downloadTimeoutMs) {
      w_.clock.scheduleAfter(w_.cfg.downloadTimeoutMs,
                             scope_.wrap([this, jobId, endpoint] {
                               finishDownloadFailure(jobId, endpoint,
                                                     VideoState::DownloadTimedOut,
                                                     "timeout");
                             }));
      return;
    }
    const bool empty = cv && cv->emptyDownload;
    w_.clock.scheduleAfter(
        transferMs,
        scope_.wrap([this, jobId, endpoint, vid, size, empty, channelIdOf] {
          if (empty) {
            finishDownloadFailure(jobId, endpoint, VideoState::EmptyDownload,
                                  "empty download");
            return;
          }
          DiskEntry e;
          e.mediaBytes = size;
          e.thumbBytes = std::max<std::int64_t>(1, size / 1000);
          w_.disk.put(vid, e);
          w_.platform.connectionClosed(endpoint);
          auto it = openConnections_.find(endpoint);
          if (it != openConnections_.end()) openConnections_.erase(it);
          proxy_.release(endpoint);
          queue_.complete(jobId);
          w_.metrics.incr("downloadsCompleted");
          pump();
        }));
  };
  (*step)(0);
}

void PipelineEngine::finishDownloadFailure(std::uint64_t jobId,
                                           const std::string& endpoint,
                                           VideoState mark,
                                           const std::string& reason) {
  w_.platform.connectionClosed(endpoint);
  auto it = openConnections_.find(endpoint);
  if (it != openConnections_.end()) openConnections_.erase(it);
  proxy_.release(endpoint);
  const FlowJob* job = queue_.job(jobId);
  // Timeout and empty-download outcomes are durable regardless of the
  // pre-check toggle; availability verdicts are durable only when the
  // checks are on.
  const bool alwaysDurable = mark == VideoState::DownloadTimedOut ||
                             mark == VideoState::EmptyDownload;
  if (mark != VideoState::New &&
      (alwaysDurable || w_.cfg.preDownloadChecks)) {
    auto video = w_.store.getVideo(job->channelId, job->videoId);
    if (video && video->state == VideoState::New)
      markUnavailable(*video, mark, reason);
  } else {
    w_.metrics.incr("pipelineErrors");
    w_.metrics.note("downloadError", job->videoId + " (" + reason + ")");
  }
  queue_.fail(jobId);
  pump();
}

// Metadata --------------------------------------------------------------------

void PipelineEngine::startMetadata(std::uint64_t jobId) {
  const FlowJob* job = queue_.job(jobId);
  const std::string vid = job->videoId;
  auto video = w_.store.getVideo(job->channelId, vid);
  if (!video) {
    queue_.fail(jobId);
    pump();
    return;
  }
  if (!w_.disk.has(vid)) {
    queue_.fail(jobId);
    w_.metrics.incr("pipelineErrors");
    w_.metrics.note("metadataError", vid + " (no media on disk)");
    pump();
    return;
  }
  // Extraction cost scales with content length.
  const VirtualMs processingMs =
      std::max<VirtualMs>(secondsMs(1), video->durationS * 10);
  if (processingMs > w_.cfg.metadataTimeoutMs) {
    w_.clock.scheduleAfter(w_.cfg.metadataTimeoutMs, scope_.wrap([this, jobId] {
      const FlowJob* j = queue_.job(jobId);
      auto v = w_.store.getVideo(j->channelId, j->videoId);
      if (v && v->state == VideoState::New)
        markUnavailable(*v, VideoState::PostprocessingError, "metadata timeout");
      queue_.fail(jobId);
      pump();
    }));
    return;
  }
  w_.clock.scheduleAfter(processingMs, scope_.wrap([this, jobId, vid] {
    CorpusVideo* cv = w_.platform.corpusVideoMut(vid);
    if (cv && cv->transientMetaFailures > 0) {
      --cv->transientMetaFailures;
      w_.metrics.incr("metadataTransientFailures");
      queue_.bumpAttempts(jobId);
      // Park for the retry gap: the slot frees for other jobs now, and on
      // resume the job lines up behind its equal-priority peers, so a flaky
      // video neither grinds the slot nor starves the queue behind it.
      queue_.parkActive(jobId);
      w_.clock.scheduleAfter(kMetadataRetryGapMs, scope_.wrap([this, jobId] {
        queue_.resumeParked(jobId);
        pump();
      }));
      pump();
      return;
    }
    auto entry = w_.disk.get(vid);
    DiskEntry e = entry.value_or(DiskEntry{});
    e.contentHash = SeededRng(fnv1a64(vid) ^
                              static_cast<std::uint64_t>(e.mediaBytes))
                        .hexBytes(8);
    w_.disk.put(vid, e);
    queue_.complete(jobId);
    w_.metrics.incr("metadataExtracted");
    pump();
  }));
}

// Creation ---------------------------------------------------------------------

struct PipelineEngine::CreationSession {
  LockManager::Holder recalcHold;
  LockManager::Holder batchHold;
  int blocksUsed = 0;
  bool leaseActive = true;
};

void PipelineEngine::maybeRunCreationBatch() {
  if (creationSessionActive_) return;
  if (queue_.readyCount(Stage::Creation) == 0) return;
  creationSessionActive_ = true;
  locks_.acquireBoth(
      LockDomain::QueueRecalc, LockDomain::QueueBatch,
      [this](LockManager::Holder h1, LockManager::Holder h2) {
        auto s = std::make_shared<CreationSession>();
        s->recalcHold = std::move(h1);
        s->batchHold = std::move(h2);
        // Lease heartbeat: renew twice per lease term while the batch holds
        // the queue.
        auto renew = std::make_shared<std::function<void()>>();
        *renew = [this, s, renew] {
          if (!s->leaseActive) return;
          w_.metrics.note("leaseRenewed", "creationBatch");
          w_.clock.scheduleAfter(leaseRenewMs_, scope_.wrap(*renew));
        };
        w_.clock.scheduleAfter(leaseRenewMs_, scope_.wrap(*renew));
        runCreationBlock(s);
      });
}

void PipelineEngine::runCreationBlock(const std::shared_ptr<CreationSession>& s) {
  auto finish = [this, s] {
    s->leaseActive = false;
    s->batchHold->release();
    s->recalcHold->release();
    creationSessionActive_ = false;
    pump();
  };
  if (s->blocksUsed >= maxBatchBlocks_ ||
      queue_.readyCount(Stage::Creation) == 0) {
    finish();
    return;
  }
  ++s->blocksUsed;

  std::vector<std::uint64_t> jobIds;
  std::vector<Extrinsic> extrinsics;
  const std::uint64_t base = w_.sink.chain.nextNonce();
  while (static_cast<int>(jobIds.size()) < w_.cfg.maxBatch) {
    auto id = queue_.takeNextReady(Stage::Creation);
    if (!id) break;
    const FlowJob* job = queue_.job(*id);
    auto video = w_.store.getVideo(job->channelId, job->videoId);
    if (!video || isTerminal(video->state)) {
      queue_.fail(*id);
      continue;
    }
    if (w_.cfg.walEnabled) {
      // Intent record first. A throttle ends the fill: the bucket is empty
      // at this instant, so every further intent this block would fail too.
      try {
        VideoRecord intent =
            transition(*video, VideoState::CreatingVideo, w_.clock.now());
        w_.store.putVideo(intent);
      } catch (const ThroughputExceeded&) {
        w_.metrics.incr("intentWriteThrottled");
        queue_.requeue(*id);
        break;
      }
    }
    extrinsics.push_back({job->videoId, base + extrinsics.size()});
    jobIds.push_back(*id);
  }

  if (extrinsics.empty()) {
    // Nothing admitted this block (all intent writes throttled); give the
    // bucket a block interval to refill.
    w_.clock.scheduleAfter(w_.cfg.blockIntervalMs,
                           scope_.wrap([this, s] { runCreationBlock(s); }));
    return;
  }

  auto tok = scope_.token();
  try {
    w_.sink.chain.submitBatch(
        extrinsics, [this, s, jobIds, tok](const BatchReceipt& r) {
          if (!tok.lock()) return;  // service died before the boundary
          handleCreationReceipt(s, jobIds, r);
        });
    w_.metrics.incr("batchesSubmitted");
  } catch (const SinkUnreachable&) {
    w_.metrics.incr("sinkUnreachableErrors");
    for (auto id : jobIds) queue_.requeue(id);
    w_.clock.scheduleAfter(w_.cfg.blockIntervalMs,
                           scope_.wrap([this, s] { runCreationBlock(s); }));
  }
}

void PipelineEngine::handleCreationReceipt(
    const std::shared_ptr<CreationSession>& s,
    const std::vector<std::uint64_t>& jobIds, const BatchReceipt& r) {
  if (r.accepted) {
    for (std::size_t i = 0; i < r.created.size(); ++i) {
      const auto& [videoId, objectId] = r.created[i];
      const std::uint64_t jobId = jobIds[i];
      const FlowJob* job = queue_.job(jobId);
      auto video = w_.store.getVideo(job->channelId, videoId);
      if (video) {
        if (w_.cfg.walEnabled) {
          VideoRecord next =
              transition(*video, VideoState::VideoCreated, w_.clock.now());
          next.sinkObjectId = objectId;
          putVideoRetrying(std::move(next));
        } else {
          // Legacy path: no intent record, result written in place.
          VideoRecord next = *video;
          next.state = VideoState::VideoCreated;
          next.sinkObjectId = objectId;
          try {
            w_.store.putVideo(next);
          } catch (const ThroughputExceeded&) {
            if (w_.cfg.swallowWriteErrors) {
              w_.metrics.incr("swallowedWrites");
              w_.metrics.note("swallowedWrite", videoId);
            } else {
              putVideoRetrying(std::move(next));
            }
          }
        }
      }
      queue_.complete(jobId);
      w_.metrics.incr("videosCreated");
    }
  } else {
    w_.metrics.incr("batchesRejected");
    for (std::uint64_t jobId : jobIds) {
      const FlowJob* job = queue_.job(jobId);
      auto video = w_.store.getVideo(job->channelId, job->videoId);
      if (video && w_.cfg.walEnabled &&
          video->state == VideoState::CreatingVideo) {
        putVideoRetrying(
            transition(*video, VideoState::CreationFailed, w_.clock.now()));
      }
      queue_.fail(jobId);
    }
  }
  runCreationBlock(s);
}

// Upload -----------------------------------------------------------------------

void PipelineEngine::startUpload(std::uint64_t jobId) {
  const FlowJob* job = queue_.job(jobId);
  auto video = w_.store.getVideo(job->channelId, job->videoId);
  if (!video || !video->sinkObjectId ||
      (video->state != VideoState::VideoCreated &&
       video->state != VideoState::UploadFailed &&
       video->state != VideoState::UploadStarted)) {
    queue_.fail(jobId);
    w_.metrics.incr("pipelineErrors");
    w_.metrics.note("uploadError", job->videoId + " (not uploadable)");
    pump();
    return;
  }
  if (w_.cfg.walEnabled && video->state != VideoState::UploadStarted) {
    putVideoRetrying(
        transition(*video, VideoState::UploadStarted, w_.clock.now()));
  }
  uploadAttempt(jobId, 1);
}

void PipelineEngine::uploadAttempt(std::uint64_t jobId, int attempt) {
  const FlowJob* job = queue_.job(jobId);
  const std::string vid = job->videoId;
  const std::string chId = job->channelId;
  auto video = w_.store.getVideo(chId, vid);
  const std::string objectId = video && video->sinkObjectId
                                   ? *video->sinkObjectId
                                   : std::string();
  auto entry = w_.disk.get(vid);
  const std::int64_t mediaBytes = entry ? entry->mediaBytes : 0;
  const std::int64_t thumbBytes = entry ? entry->thumbBytes : 0;

  bool ok = false;
  auto nodes = w_.sink.activeNodes();
  if (!nodes.empty() && !objectId.empty()) {
    StorageNodeSim* node = nodes[rng_.index(nodes.size())];
    const UploadResult r1 =
        node->uploadAsset(objectId, AssetKind::Media, mediaBytes);
    const UploadResult r2 =
        node->uploadAsset(objectId, AssetKind::Thumbnail, thumbBytes);
    ok = r1 == UploadResult::Accepted && r2 == UploadResult::Accepted;
  }

  if (ok) {
    if (video) {
      if (w_.cfg.walEnabled) {
        auto fresh = w_.store.getVideo(chId, vid);
        if (fresh && fresh->state == VideoState::UploadStarted)
          putVideoRetrying(
              transition(*fresh, VideoState::UploadSucceeded, w_.clock.now()));
      } else {
        VideoRecord next = *video;
        next.state = VideoState::UploadSucceeded;
        try {
          w_.store.putVideo(next);
        } catch (const ThroughputExceeded&) {
          if (w_.cfg.swallowWriteErrors) {
            w_.metrics.incr("swallowedWrites");
          } else {
            putVideoRetrying(std::move(next));
          }
        }
      }
    }
    w_.disk.erase(vid);
    queue_.complete(jobId);
    w_.metrics.incr("videosReplicated");
    pump();
    return;
  }

  queue_.bumpAttempts(jobId);
  if (attempt < w_.cfg.uploadAttempts) {
    w_.clock.scheduleAfter(w_.cfg.uploadRetryGapMs,
                           scope_.wrap([this, jobId, attempt] {
                             uploadAttempt(jobId, attempt + 1);
                           }));
    return;
  }
  if (video) {
    if (w_.cfg.walEnabled) {
      auto fresh = w_.store.getVideo(chId, vid);
      if (fresh && fresh->state == VideoState::UploadStarted)
        putVideoRetrying(
            transition(*fresh, VideoState::UploadFailed, w_.clock.now()));
    } else {
      VideoRecord next = *video;
      next.state = VideoState::UploadFailed;
      try {
        w_.store.putVideo(next);
      } catch (const ThroughputExceeded&) {
        w_.metrics.incr("swallowedWrites");
      }
    }
  }
  queue_.fail(jobId);
  w_.metrics.incr("uploadsFailed");
  pump();
}

void PipelineEngine::emergencyCloseConnections() {
  for (const auto& ep : openConnections_) w_.platform.connectionClosed(ep);
  openConnections_.clear();
}

}  // namespace replisim
