#include "replisim/world.hpp"

#include <algorithm>

#include "replisim/errors.hpp"

namespace replisim {

World::World(ScenarioConfig config)
    : cfg(std::move(config)),
      rootRng(cfg.seed),
      metrics(clock),
      store(&clock),
      platform(clock, rootRng.fork("platform"), cfg.detector, cfg.quota),
      sink(clock, worldScope, cfg.blockIntervalMs, cfg.maxBatch,
           cfg.storageNodes, rootRng.fork("sink").nextU64(),
           cfg.visibilityMinMs, cfg.visibilityMaxMs) {
  platform.setApiAvailable(cfg.apiUp);
  seedPopulation();
  // Seeding writes are free; metering starts once the scenario billing mode
  // is armed.
  store.setBillingMode(cfg.billing);
}

void World::seedPopulation() {
  if (cfg.corpus) platform.generateCorpus(*cfg.corpus);

  SeededRng tokenRng = rootRng.fork("seed-tokens");
  for (const auto& cs : cfg.channels) {
    // A seed may adopt a corpus-generated channel of the same id; keep the
    // generated catalogue and layer the seed's identity on top.
    CorpusChannel cc;
    if (const CorpusChannel* existing = platform.corpusChannel(cs.id))
      cc = *existing;
    cc.id = cs.id;
    cc.title = "Channel " + cs.id;
    cc.subscriberCount = cs.subscriberCount;
    for (const auto& vs : cs.videos) cc.videoIds.push_back(vs.id);
    cc.videoCount = std::max<std::int64_t>(
        std::max<std::int64_t>(cs.videoCount,
                               static_cast<std::int64_t>(cc.videoIds.size())),
        cc.videoCount);
    cc.ageHours = static_cast<std::int64_t>(cs.ageHours);
    platform.addChannel(cc);

    for (const auto& vs : cs.videos) {
      CorpusVideo cv;
      cv.id = vs.id;
      cv.channelId = cs.id;
      cv.title = "Video " + vs.id;
      cv.publishedAtS = vs.publishedAtS;
      cv.durationS = vs.durationS;
      cv.sizeBytes = vs.sizeBytes;
      cv.deleted = vs.deleted;
      cv.isPrivate = vs.privateVideo;
      cv.ageRestricted = vs.ageRestricted;
      cv.membersOnly = vs.membersOnly;
      cv.live = vs.liveOffline;
      cv.emptyDownload = vs.emptyDownload;
      cv.transientMetaFailures = vs.transientMetaFailures;
      cv.appearsAtMs = vs.appearsAtMs;
      platform.addVideo(cv);

      if (vs.seedStore) {
        VideoRecord vr;
        vr.id = vs.id;
        vr.channelId = cs.id;
        vr.publishedAtS = vs.publishedAtS;
        vr.durationS = vs.durationS;
        vr.sizeBytes = vs.sizeBytes;
        vr.state = vs.state;
        vr.sinkObjectId = vs.sinkObjectId;
        vr.isNew = vs.isNew;
        store.putVideo(vr);
      }
    }

    ChannelRecord ch;
    ch.id = cs.id;
    ch.userId = cs.userId;
    ch.sinkChannelId = nextSinkChannelId();
    ch.tier = cs.tier;
    ch.status = cs.status;
    ch.backlogPct = cs.backlogPct;
    ch.subscriberCount = cs.subscriberCount;
    ch.videoCount = cc.videoCount;
    ch.ageHours = static_cast<std::int64_t>(cs.ageHours);
    ch.referrerChannelId = cs.referrerChannelId;
    if (cs.hasToken) ch.token = platform.issueTokens(tokenRng);
    store.putChannel(ch);

    UserRecord u;
    u.id = cs.userId;
    u.email = cs.userId + "@example.test";
    u.authorizationCode = tokenRng.hexBytes(8);
    if (ch.token) {
      u.accessToken = ch.token->accessToken;
      u.refreshToken = ch.token->refreshToken;
    }
    store.putUser(u);
  }
}

void World::applyOverride(const std::string& key, const nlohmann::json& value) {
  auto wantBool = [&]() -> bool {
    if (!value.is_boolean()) throw ConfigInvalid("override." + key + ": expected bool");
    return value.get<bool>();
  };
  if (key == "pollIntervalMinutes") {
    if (!value.is_number()) throw ConfigInvalid("override." + key + ": expected number");
    const std::int64_t m = value.get<std::int64_t>();
    if (m <= 0) throw ConfigInvalid("override." + key + ": must be positive");
    cfg.pollIntervalMs = minutesMs(m);
  } else if (key == "billing") {
    cfg.billing = parseBillingJson(value, "override.billing");
    store.setBillingMode(cfg.billing);
  } else if (key == "apiUp") {
    cfg.apiUp = wantBool();
    platform.setApiAvailable(cfg.apiUp);
  } else if (key == "operationalApiUp") {
    platform.setOperationalApiUp(wantBool());
  } else if (key == "preDownloadChecks") {
    cfg.preDownloadChecks = wantBool();
  } else if (key == "sleepEnabled") {
    cfg.sleepEnabled = wantBool();
  } else if (key == "uploadsEnabled") {
    cfg.uploadsEnabled = wantBool();
  } else if (key == "walEnabled") {
    cfg.walEnabled = wantBool();
  } else if (key == "swallowWriteErrors") {
    cfg.swallowWriteErrors = wantBool();
  } else if (key == "disableNewSignUps") {
    cfg.disableNewSignUps = wantBool();
  } else if (key == "quotaRationing") {
    cfg.quota.rationing = wantBool();
    platform.setQuotaRationing(cfg.quota.rationing);
  } else if (key == "detectorThreshold") {
    if (!value.is_number()) throw ConfigInvalid("override." + key + ": expected number");
    DetectorParams p = platform.detectorParams();
    p.threshold = value.get<double>();
    platform.setDetectorParams(p);
    cfg.detector = p;
  } else {
    throw ConfigInvalid("override." + key + ": unknown key");
  }
  metrics.note("override", key);
}

}  // namespace replisim
