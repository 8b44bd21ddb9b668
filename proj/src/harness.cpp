#include "replisim/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "replisim/errors.hpp"
#include "replisim/serde.hpp"
#include "replisim/states.hpp"

namespace replisim {

namespace {

void installSampler(World& w, ServiceProcess& svc) {
  w.metrics.setSampler([&w, &svc](MetricsRecorder& m) {
    m.setGauge("chainObjects", w.sink.chain.totalObjects());
    m.setGauge("chainDuplicates", w.sink.chain.duplicateObjects());
    m.setGauge("storeThrottled", w.store.throttledWrites());
    m.setGauge("blockedIdentities",
               static_cast<std::int64_t>(w.platform.blockedIdentityCount()));
    std::int64_t depth = 0;
    if (svc.running()) {
      for (Stage s : {Stage::Download, Stage::Metadata, Stage::Creation,
                      Stage::Upload})
        depth += svc.jobs().queuedCount(s) + svc.jobs().activeCount(s);
    }
    m.setGauge("queueDepth", depth);
  });
}

bool durablyUnavailable(const CorpusVideo& cv) {
  return cv.deleted || cv.isPrivate || cv.ageRestricted || cv.membersOnly ||
         cv.live || cv.regionRestricted;
}

VideoState unavailabilityFor(const CorpusVideo& cv) {
  if (cv.deleted) return VideoState::Deleted;
  if (cv.isPrivate) return VideoState::Private;
  if (cv.ageRestricted) return VideoState::AgeRestricted;
  if (cv.membersOnly) return VideoState::MembersOnly;
  if (cv.live) return VideoState::LiveOffline;
  return VideoState::Skipped;
}

// Injects durable queue rows whose source videos are broken or absent;
// mirrors an upstream import writing entries the pipeline can never finish.
void injectQueuePollution(World& w, const FaultSpec& f) {
  std::string chId = f.target;
  if (chId.empty()) {
    auto all = w.store.allChannels();
    if (all.empty()) return;
    chId = all.front().id;
  }
  std::vector<std::pair<std::string, int>> cats;
  if (f.categoryMix.empty()) {
    cats.emplace_back("missingSource", f.count);
  } else {
    for (const auto& [k, n] : f.categoryMix) cats.emplace_back(k, n);
  }
  int injected = 0;
  for (const auto& [cat, n] : cats) {
    for (int i = 0; i < n; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%05d", i + 1);
      const std::string id = "junk-" + cat + "-" + buf;
      if (cat == "unavailable") {
        CorpusVideo cv;
        cv.id = id;
        cv.channelId = chId;
        cv.title = "Video " + id;
        cv.publishedAtS = w.cfg.epochUnixS - 86400;
        cv.durationS = 60;
        cv.sizeBytes = 100'000'000;
        cv.deleted = true;
        w.platform.addVideo(cv);
      } else if (cat == "transientMeta") {
        CorpusVideo cv;
        cv.id = id;
        cv.channelId = chId;
        cv.title = "Video " + id;
        cv.publishedAtS = w.cfg.epochUnixS - 86400;
        cv.durationS = 60;
        cv.sizeBytes = 100'000'000;
        // Large enough that the flakiness outlives any scenario.
        cv.transientMetaFailures = 1'000'000'000;
        w.platform.addVideo(cv);
      } else if (cat != "missingSource") {
        throw ConfigInvalid("fault.categoryMix." + cat + ": unknown category");
      }
      VideoRecord vr;
      vr.id = id;
      vr.channelId = chId;
      vr.publishedAtS = w.cfg.epochUnixS - 86400;
      vr.durationS = 60;
      vr.sizeBytes = 100'000'000;
      vr.state = VideoState::New;
      w.store.putVideo(vr);
      ++injected;
    }
  }
  w.metrics.incr("pollutionInjected", injected);
  w.metrics.note("fault",
                 "queuePollution " + std::to_string(injected) + " rows");
}

void scheduleFault(World& w, ServiceProcess& svc, const FaultSpec& f) {
  auto& clock = w.clock;
  const auto& scope = w.worldScope;
  if (f.kind == "sinkOutage") {
    clock.scheduleAt(f.atMs, scope.wrap([&w] {
      w.sink.chain.setUnreachable(true);
      w.metrics.note("fault", "sinkOutage begin");
    }));
    if (f.durationMs > 0)
      clock.scheduleAt(f.atMs + f.durationMs, scope.wrap([&w] {
        w.sink.chain.setUnreachable(false);
        w.metrics.note("fault", "sinkOutage end");
      }));
  } else if (f.kind == "nodeOutage") {
    auto pick = [&w, target = f.target]() -> StorageNodeSim* {
      for (auto& n : w.sink.nodes)
        if (target.empty() || n->nodeId() == target) return n.get();
      return nullptr;
    };
    clock.scheduleAt(f.atMs, scope.wrap([&w, pick] {
      if (auto* n = pick()) {
        n->setActive(false);
        w.metrics.note("fault", "nodeOutage " + n->nodeId());
      }
    }));
    if (f.durationMs > 0)
      clock.scheduleAt(f.atMs + f.durationMs, scope.wrap([&w, pick] {
        if (auto* n = pick()) {
          n->setActive(true);
          w.metrics.note("fault", "nodeRestored " + n->nodeId());
        }
      }));
  } else if (f.kind == "chainReject") {
    clock.scheduleAt(f.atMs, scope.wrap([&w, n = std::max(1, f.count)] {
      w.sink.chain.injectRejectBatches(n);
      w.metrics.note("fault", "chainReject " + std::to_string(n));
    }));
  } else if (f.kind == "proxyFault") {
    clock.scheduleAt(f.atMs, scope.wrap([&w, &svc, target = f.target] {
      if (!svc.running()) return;
      std::string ep = target;
      if (ep.empty() && !w.cfg.proxy.endpoints.empty())
        ep = w.cfg.proxy.endpoints.front();
      try {
        svc.proxy().reportFaulty(ep);
        w.metrics.note("fault", "proxyFault " + ep);
      } catch (const UnknownEndpoint&) {
        w.metrics.note("fault", "proxyFault unknown endpoint " + ep);
      }
    }));
  } else if (f.kind == "apiOutage") {
    clock.scheduleAt(f.atMs, scope.wrap([&w] {
      w.cfg.apiUp = false;
      w.platform.setApiAvailable(false);
      w.metrics.note("fault", "apiOutage begin");
    }));
    if (f.durationMs > 0)
      clock.scheduleAt(f.atMs + f.durationMs, scope.wrap([&w] {
        w.cfg.apiUp = true;
        w.platform.setApiAvailable(true);
        w.metrics.note("fault", "apiOutage end");
      }));
  } else if (f.kind == "tokenRevocation") {
    clock.scheduleAt(f.atMs, scope.wrap([&w, target = f.target] {
      auto ch = w.store.channelById(target);
      if (!ch || !ch->token) return;
      ChannelRecord c = *ch;
      c.token->revoked = true;
      try {
        w.store.putChannel(c);
        w.metrics.note("fault", "tokenRevocation " + target);
      } catch (const ThroughputExceeded&) {
        w.metrics.note("fault", "tokenRevocation throttled " + target);
      }
    }));
  } else if (f.kind == "queuePollution") {
    clock.scheduleAt(f.atMs,
                     scope.wrap([&w, f] { injectQueuePollution(w, f); }));
  } else if (f.kind == "crash") {
    clock.scheduleAt(f.atMs, scope.wrap([&w, &svc, f] {
      if (!svc.running()) return;
      svc.restart(f.durationMs > 0 ? f.durationMs : w.cfg.restartDelayMs);
    }));
  } else {
    throw ConfigInvalid("fault.kind: unknown kind '" + f.kind + "'");
  }
}

void scheduleOverride(World& w, ServiceProcess& svc,
                      const ParameterOverride& o) {
  w.clock.scheduleAt(o.atMs, w.worldScope.wrap([&w, &svc, o] {
    if (o.key == "crashService") {
      if (svc.running()) svc.crash();
      return;
    }
    if (o.key == "restartService") {
      if (!svc.running()) svc.start();
      return;
    }
    if (o.key == "runCleanup") {
      std::string path = "queue-backup.json";
      bool failBackup = false;
      if (o.value.is_string()) {
        path = o.value.get<std::string>();
      } else if (o.value.is_object()) {
        if (o.value.contains("path")) path = o.value["path"].get<std::string>();
        failBackup = o.value.value("failBackup", false);
      }
      try {
        runQueueCleanup(w, path, failBackup);
      } catch (const BackupWriteFailure&) {
        w.metrics.incr("cleanupAborted");
        w.metrics.note("cleanup", "aborted: backup write failed");
      }
      return;
    }
    w.applyOverride(o.key, o.value);
  }));
}

ScenarioResult collectResult(World& w) {
  ScenarioResult res;
  res.name = w.cfg.name;
  res.counters = w.metrics.counters();
  res.counters["sink.objects"] = w.sink.chain.totalObjects();
  res.counters["sink.duplicates"] = w.sink.chain.duplicateObjects();
  res.counters["store.throttledWrites"] = w.store.throttledWrites();
  res.counters["store.videos"] =
      static_cast<std::int64_t>(w.store.videoCountTotal());
  res.counters["platform.blockedIdentities"] =
      static_cast<std::int64_t>(w.platform.blockedIdentityCount());
  res.counters["platform.quotaRejected"] = w.platform.quotaRejectedTotal();
  for (VideoState s : allVideoStates())
    res.counters["state." + std::string(toString(s))] =
        static_cast<std::int64_t>(w.store.videosByState(s).size());
  std::int64_t optedOut = 0;
  std::int64_t optOutSnapshots = 0;
  for (const auto& ch : w.store.allChannels()) {
    if (ch.status != ChannelStatus::OptedOut) continue;
    ++optedOut;
    if (ch.preOptOutStatus && ch.preOptOutTier) ++optOutSnapshots;
  }
  res.counters["store.channelsOptedOut"] = optedOut;
  res.counters["store.optOutSnapshots"] = optOutSnapshots;

  res.metricsStream = w.metrics.streamText();
  res.trace = w.metrics.traceText();
  res.traceEntries = w.metrics.trace();
  res.requestTrace = w.platform.requestTraceText();
  res.writeLog = w.store.writeLogText();
  res.storeMatchesReplay =
      DurableStore::replay(w.store.writeLog()).snapshot() == w.store.snapshot();

  for (const auto& rule : w.cfg.expect) {
    auto it = res.counters.find(rule.metric);
    const std::int64_t actual = it == res.counters.end() ? 0 : it->second;
    bool ok = false;
    if (rule.op == "eq") ok = actual == rule.value;
    else if (rule.op == "le") ok = actual <= rule.value;
    else if (rule.op == "ge") ok = actual >= rule.value;
    if (!ok)
      res.expectFailures.push_back(rule.metric + " " + rule.op + " " +
                                   std::to_string(rule.value) + ", got " +
                                   std::to_string(actual));
  }
  res.ok = res.expectFailures.empty();
  return res;
}

}  // namespace

ScenarioResult runScenario(const ScenarioConfig& cfg) {
  World w(cfg);
  ServiceProcess svc(w);
  installSampler(w, svc);
  w.metrics.startEmission(w.cfg.metricsPeriodMs, w.worldScope);
  for (const auto& o : w.cfg.overrides) scheduleOverride(w, svc, o);
  for (const auto& f : w.cfg.faults) scheduleFault(w, svc, f);
  svc.start();
  w.clock.advanceTo(w.cfg.durationMs);
  w.metrics.emitNow();
  return collectResult(w);
}

std::int64_t notesInWindow(const std::vector<TraceEntry>& trace,
                           const std::string& event, VirtualMs fromMs,
                           VirtualMs toMs) {
  std::int64_t n = 0;
  for (const auto& e : trace)
    if (e.event == event && e.atMs >= fromMs && e.atMs < toMs) ++n;
  return n;
}

CleanupReport runQueueCleanup(World& w, const std::string& backupPath,
                              bool failBackup) {
  CleanupReport rep;
  rep.backupPath = backupPath;
  std::vector<VideoRecord> doomed;
  std::vector<std::pair<VideoRecord, VideoState>> toMark;
  for (const auto& v : w.store.allVideos()) {
    if (v.state != VideoState::New) continue;
    ++rep.scanned;
    const CorpusVideo* cv = w.platform.corpusVideo(v.id);
    if (!cv) {
      doomed.push_back(v);
    } else if (durablyUnavailable(*cv)) {
      toMark.emplace_back(v, unavailabilityFor(*cv));
    } else if (cv->transientMetaFailures > 0) {
      // Healthy source, flaky extraction: the row stays queued and the
      // pipeline keeps retrying it.
      ++rep.requeued;
    }
  }

  // The backup must exist before the first destructive write; any failure
  // aborts the pass with the store untouched.
  Json backup = Json::array();
  for (const auto& v : doomed) backup.push_back(v);
  if (failBackup)
    throw BackupWriteFailure("backup not writable: " + backupPath);
  {
    std::ofstream out(backupPath, std::ios::trunc);
    if (!out) throw BackupWriteFailure("backup not writable: " + backupPath);
    out << backup.dump(2) << "\n";
    out.flush();
    if (!out) throw BackupWriteFailure("backup write failed: " + backupPath);
  }

  for (const auto& v : doomed) {
    w.store.eraseVideo(v.channelId, v.id);
    ++rep.deleted;
    if (rep.deleted % 50 == 0)
      w.metrics.note("cleanupBatch", std::to_string(rep.deleted) + " deleted");
  }
  for (auto& [v, mark] : toMark) {
    w.store.putVideo(transition(v, mark, w.clock.now()));
    ++rep.marked;
  }
  w.metrics.incr("cleanupDeleted", rep.deleted);
  w.metrics.incr("cleanupMarked", rep.marked);
  w.metrics.incr("cleanupRequeued", rep.requeued);
  w.metrics.note("cleanup", std::to_string(rep.deleted) + " deleted, " +
                                std::to_string(rep.marked) + " marked, " +
                                std::to_string(rep.requeued) + " left queued");
  return rep;
}

ChannelRecord signupChannel(World& w, const SignupRequest& r) {
  const CorpusChannel* cc = w.platform.corpusChannel(r.channelId);
  if (!cc) throw UnknownChannel("channel not found upstream: " + r.channelId);

  auto existing = w.store.channelById(r.channelId);
  if (existing && existing->status != ChannelStatus::OptedOut)
    throw AlreadyConnected("channel already connected: " + r.channelId);

  const bool exempt = w.store.whitelisted(r.channelId);
  if (w.cfg.disableNewSignUps && !exempt)
    throw SignupsDisabled("new sign-ups are disabled");

  if (!exempt) {
    if (cc->subscriberCount < 50)
      throw RequirementsNotMet("subscribers", "subscriber count below 50");
    if (cc->videoCount < 2)
      throw RequirementsNotMet("videos", "fewer than 2 public videos");
    if (cc->ageHours < 720)
      throw RequirementsNotMet("ageHours", "channel younger than 720 hours");
  }

  if (r.referrerChannelId) {
    if (*r.referrerChannelId == r.channelId)
      throw SelfReferral("self-referral rejected");
    auto ref = w.store.channelById(*r.referrerChannelId);
    if (!ref)
      throw UnknownChannel("referrer not connected: " + *r.referrerChannelId);
    const auto referred = w.store.channelsByReferrer(*r.referrerChannelId);
    if (static_cast<int>(referred.size()) >= tierSpec(ref->tier).referralCap)
      throw TierCapExceeded("referral cap reached for " +
                            *r.referrerChannelId);
  }

  ChannelRecord ch;
  if (existing) ch = *existing;
  ch.id = r.channelId;
  // A re-join keeps the original owning account.
  ch.userId = existing ? existing->userId : r.userId;
  ch.subscriberCount = cc->subscriberCount;
  ch.videoCount = cc->videoCount;
  ch.ageHours = cc->ageHours;
  if (r.referrerChannelId) ch.referrerChannelId = r.referrerChannelId;

  SeededRng rng = w.rootRng.fork("signup-" + r.channelId);
  UserRecord u;
  if (auto eu = w.store.getUser(ch.userId)) u = *eu;
  u.id = ch.userId;
  u.email = ch.userId + "@example.test";

  if (w.cfg.authMode == AuthMode::Token) {
    ApiResult res =
        w.platform.apiCall(ApiOp::TokenExchange, CallService::Signup);
    if (!res.ok) throw SimError("token exchange failed: " + res.error);
    TokenBundle tb = w.platform.issueTokens(rng);
    ch.token = tb;
    // The one-time authorization code is consumed by the exchange and
    // replaced for any later re-authorization.
    u.authorizationCode = rng.hexBytes(8);
    u.accessToken = tb.accessToken;
    u.refreshToken = tb.refreshToken;
    ch.verificationVideoUrl.reset();
  } else {
    if (!r.verificationVideoUrl)
      throw VerificationVideoInvalid("verification video required");
    const CorpusVideo* vv =
        w.platform.operationalFindByUrl(*r.verificationVideoUrl);
    if (!vv) throw VerificationVideoInvalid("verification video not found");
    if (vv->channelId != r.channelId)
      throw VerificationVideoInvalid(
          "verification video belongs to another channel");
    if (!vv->unlisted)
      throw VerificationVideoInvalid("verification video must be unlisted");
    if (vv->title.find("I want to be in YPP") == std::string::npos)
      throw VerificationVideoInvalid(
          "verification title missing opt-in phrase");
    ch.verificationVideoUrl = r.verificationVideoUrl;
    ch.token.reset();
  }

  if (existing) {
    // Re-joining restores what the channel had before opting out.
    ch.status = existing->preOptOutStatus.value_or(ChannelStatus::Verified);
    ch.tier = existing->preOptOutTier.value_or(Tier::Bronze);
    ch.preOptOutStatus.reset();
    ch.preOptOutTier.reset();
  } else {
    ch.status = ChannelStatus::Verified;
    ch.tier = Tier::Bronze;
    ch.sinkChannelId = w.nextSinkChannelId();
    w.sink.chain.createMembership();
  }

  w.store.putChannel(ch);
  w.store.putUser(u);
  w.metrics.incr("signups");
  w.metrics.note("signup", ch.id);
  return ch;
}

namespace {
std::int64_t countState(World& w, VideoState s) {
  return static_cast<std::int64_t>(w.store.videosByState(s).size());
}
}  // namespace

SweepResult sweepCrashPoints(const ScenarioConfig& cfg) {
  SweepResult sw;
  {
    World w(cfg);
    ServiceProcess svc(w);
    svc.start();
    w.clock.advanceTo(cfg.durationMs);
    sw.baselineDispatches = w.clock.dispatchCount();
    sw.baselineReplicated = countState(w, VideoState::UploadSucceeded);
  }
  for (std::uint64_t k = 1; k <= sw.baselineDispatches; ++k) {
    World w(cfg);
    ServiceProcess svc(w);
    bool crashed = false;
    w.clock.setAfterDispatchHook([&w, &svc, &crashed, k](std::uint64_t n) {
      if (crashed || n != k) return;
      crashed = true;
      if (svc.running()) svc.restart(w.cfg.restartDelayMs);
    });
    svc.start();
    w.clock.advanceTo(cfg.durationMs);
    SweepPoint p;
    p.crashAfterDispatch = k;
    p.duplicates = w.sink.chain.duplicateObjects();
    p.replayExact =
        DurableStore::replay(w.store.writeLog()).snapshot() ==
        w.store.snapshot();
    p.replicated = countState(w, VideoState::UploadSucceeded);
    sw.maxDuplicates = std::max(sw.maxDuplicates, p.duplicates);
    sw.allReplayExact = sw.allReplayExact && p.replayExact;
    sw.allConverged = sw.allConverged && p.replicated == sw.baselineReplicated;
    sw.points.push_back(p);
  }
  return sw;
}

// Incidents ---------------------------------------------------------------------

namespace {

void check(IncidentOutcome& out, const std::string& label, bool ok,
           const std::string& detail) {
  out.checks.push_back({label, ok, detail});
}

std::int64_t counterOf(const ScenarioResult& r, const std::string& name) {
  auto it = r.counters.find(name);
  return it == r.counters.end() ? 0 : it->second;
}

ScenarioConfig dynamoDuplicatesConfig(bool fixed) {
  ScenarioConfig c;
  c.name = fixed ? "dynamo-duplicates-fixed" : "dynamo-duplicates";
  c.seed = 7;
  c.durationMs = minutesMs(4);
  c.pollIntervalMs = minutesMs(2);
  c.metricsPeriodMs = minutesMs(1);
  c.walEnabled = fixed;            // the fix: durable intents
  c.swallowWriteErrors = !fixed;   // the bug: throttled result writes vanish
  c.uploadsEnabled = false;
  c.sleepEnabled = false;
  c.billing = BillingMode::provisionedMode(1, 1, 4);
  c.detector.threshold = 1e12;

  ChannelSeed ch;
  ch.id = "ch-archive";
  ch.userId = "user-archive";
  ch.tier = Tier::Diamond;
  ch.subscriberCount = 250000;
  ch.backlogPct = 100;
  ch.ageHours = 20000;
  for (int i = 1; i <= 48; ++i) {
    VideoSeed v;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%04d", i);
    v.id = std::string("vid-") + buf;
    v.publishedAtS = c.epochUnixS - 86400ll * i;
    v.durationS = 300;
    v.sizeBytes = 50'000'000;
    // Mid-backfill retry queue: creation is the next step for every row.
    v.state = VideoState::CreationFailed;
    ch.videos.push_back(v);
  }
  c.channels.push_back(ch);

  // The billing hotfix lands between the two retry cycles.
  c.overrides.push_back({secondsMs(90), "billing", Json("payPerRequest")});

  if (fixed) {
    c.expect = {{"sink.duplicates", "eq", 0},
                {"swallowedWrites", "eq", 0},
                {"state.VideoCreated", "eq", 48}};
  } else {
    c.expect = {{"sink.duplicates", "eq", 28},
                {"swallowedWrites", "eq", 28},
                {"state.VideoCreated", "eq", 48}};
  }
  return c;
}

ScenarioConfig oauthOptoutConfig(bool fixed) {
  ScenarioConfig c;
  c.name = fixed ? "oauth-mass-optout-fixed" : "oauth-mass-optout";
  c.seed = 11;
  c.durationMs = daysMs(182);
  c.pollIntervalMs = minutesMs(1440);
  c.metricsPeriodMs = daysMs(7);
  c.apiUp = false;  // the authorization outage starts before the run
  c.authMode = fixed ? AuthMode::VideoVerification : AuthMode::Token;
  c.quota.dailyBudget = 50000;
  c.overrides.push_back({monthsMs(6) + hoursMs(12), "apiUp", Json(true)});
  c.channels.reserve(10000);
  for (int i = 1; i <= 10000; ++i) {
    ChannelSeed ch;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%05d", i);
    ch.id = std::string("ch-") + buf;
    ch.userId = std::string("user-") + buf;
    ch.subscriberCount = 100 + i % 900;
    c.channels.push_back(ch);
  }
  if (fixed) {
    c.expect = {{"channelsOptedOut", "eq", 0},
                {"store.channelsOptedOut", "eq", 0}};
  } else {
    c.expect = {{"channelsOptedOut", "ge", 10000},
                {"store.optOutSnapshots", "ge", 10000}};
  }
  return c;
}

ScenarioConfig queuePollutionConfig(bool fixed, const std::string& workDir) {
  ScenarioConfig c;
  c.name = fixed ? "queue-pollution-fixed" : "queue-pollution";
  c.seed = 13;
  c.durationMs = daysMs(4);
  c.pollIntervalMs = minutesMs(1440);
  c.metricsPeriodMs = hoursMs(12);
  c.preDownloadChecks = fixed;  // the broken era ran blind
  c.sleepEnabled = false;
  c.detector.threshold = 1e12;

  ChannelSeed ch;
  ch.id = "ch-library";
  ch.userId = "user-library";
  ch.tier = Tier::Diamond;
  ch.subscriberCount = 40000;
  ch.ageHours = 30000;
  for (int i = 1; i <= 2; ++i) {
    VideoSeed v;
    v.id = "vid-000" + std::to_string(i);
    v.publishedAtS = c.epochUnixS - 3600ll * i;
    v.durationS = 120;
    v.sizeBytes = 25'000'000;
    ch.videos.push_back(v);
  }
  c.channels.push_back(ch);

  FaultSpec junk;
  junk.kind = "queuePollution";
  junk.atMs = 0;
  junk.count = 719;
  junk.target = "ch-library";
  c.faults.push_back(junk);

  FaultSpec flaky;
  flaky.kind = "queuePollution";
  flaky.atMs = 0;
  flaky.target = "ch-library";
  flaky.categoryMix = {{"transientMeta", 3}};
  c.faults.push_back(flaky);

  const VirtualMs fixAt = fixed ? hoursMs(1) : daysMs(1) + hoursMs(12);
  Json cleanupArgs = Json::object();
  cleanupArgs["path"] = workDir + "/" + c.name + "-backup.json";
  c.overrides.push_back({fixAt, "runCleanup", cleanupArgs});
  if (!fixed) c.overrides.push_back({fixAt, "preDownloadChecks", Json(true)});

  if (fixed) {
    c.expect = {{"pipelineErrors", "eq", 0}, {"videosReplicated", "eq", 2}};
  } else {
    c.expect = {{"cleanupDeleted", "eq", 719},
                {"cleanupRequeued", "eq", 3},
                {"pipelineErrors", "eq", 1438}};
  }
  return c;
}

}  // namespace

std::vector<std::string> incidentNames() {
  return {"dynamo-duplicates", "oauth-mass-optout", "queue-pollution"};
}

IncidentOutcome runIncident(const std::string& name, bool fixed,
                            const std::string& workDir) {
  IncidentOutcome out;
  out.name = name;
  out.fixed = fixed;

  if (name == "dynamo-duplicates") {
    out.result = runScenario(dynamoDuplicatesConfig(fixed));
    const std::int64_t dup = counterOf(out.result, "sink.duplicates");
    const std::int64_t swallowed = counterOf(out.result, "swallowedWrites");
    if (fixed) {
      check(out, "no duplicate objects", dup == 0, std::to_string(dup));
      check(out, "no swallowed writes", swallowed == 0,
            std::to_string(swallowed));
    } else {
      check(out, "28 duplicate objects", dup == 28, std::to_string(dup));
      check(out, "duplicates equal swallowed writes", dup == swallowed,
            std::to_string(dup) + " vs " + std::to_string(swallowed));
    }
    check(out, "all 48 rows converged",
          counterOf(out.result, "state.VideoCreated") == 48,
          std::to_string(counterOf(out.result, "state.VideoCreated")));
    check(out, "write log replays to the live store",
          out.result.storeMatchesReplay, "");
  } else if (name == "oauth-mass-optout") {
    out.result = runScenario(oauthOptoutConfig(fixed));
    const std::int64_t opted = counterOf(out.result, "channelsOptedOut");
    if (fixed) {
      check(out, "no opt-outs after the outage", opted == 0,
            std::to_string(opted));
    } else {
      check(out, "at least 10000 opt-outs", opted >= 10000,
            std::to_string(opted));
      VirtualMs first = -1;
      VirtualMs last = -1;
      for (const auto& e : out.result.traceEntries) {
        if (e.event != "optOut") continue;
        if (first < 0) first = e.atMs;
        last = e.atMs;
      }
      check(out, "all opt-outs land in a single cycle",
            first >= 0 && last - first < minutesMs(1440),
            "span " + std::to_string(last - first) + "ms");
      check(out, "pre-opt-out status and tier captured",
            counterOf(out.result, "store.optOutSnapshots") == opted,
            std::to_string(counterOf(out.result, "store.optOutSnapshots")));
    }
    check(out, "write log replays to the live store",
          out.result.storeMatchesReplay, "");
  } else if (name == "queue-pollution") {
    const ScenarioConfig cfg = queuePollutionConfig(fixed, workDir);
    const std::string backupPath = workDir + "/" + cfg.name + "-backup.json";
    out.result = runScenario(cfg);
    auto errsOnDay = [&](int day) {
      return notesInWindow(out.result.traceEntries, "downloadError",
                           daysMs(day), daysMs(day + 1));
    };
    if (fixed) {
      check(out, "no daily error burst", errsOnDay(0) < 5,
            std::to_string(errsOnDay(0)) + " on day 0");
      check(out, "healthy videos replicated",
            counterOf(out.result, "videosReplicated") == 2,
            std::to_string(counterOf(out.result, "videosReplicated")));
    } else {
      check(out, "719 errors on day 0", errsOnDay(0) == 719,
            std::to_string(errsOnDay(0)));
      check(out, "719 errors on day 1", errsOnDay(1) == 719,
            std::to_string(errsOnDay(1)));
      check(out, "fewer than 5 errors per day after the fix",
            errsOnDay(2) < 5 && errsOnDay(3) < 5,
            std::to_string(errsOnDay(2)) + ", " + std::to_string(errsOnDay(3)));
      check(out, "719 rows deleted with backup",
            counterOf(out.result, "cleanupDeleted") == 719,
            std::to_string(counterOf(out.result, "cleanupDeleted")));
      std::ifstream in(backupPath);
      std::int64_t backedUp = -1;
      if (in) {
        try {
          Json j = Json::parse(in);
          if (j.is_array()) backedUp = static_cast<std::int64_t>(j.size());
        } catch (const Json::parse_error&) {
        }
      }
      check(out, "backup file holds all deleted rows", backedUp == 719,
            std::to_string(backedUp));
      check(out, "transient rows left queued",
            counterOf(out.result, "cleanupRequeued") == 3,
            std::to_string(counterOf(out.result, "cleanupRequeued")));
    }
    check(out, "write log replays to the live store",
          out.result.storeMatchesReplay, "");
  } else {
    throw UnknownScenario("unknown incident: " + name);
  }

  out.pass = out.result.ok;
  for (const auto& ck : out.checks) out.pass = out.pass && ck.pass;
  return out;
}

}  // namespace replisim
