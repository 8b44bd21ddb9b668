#include "replisim/scenario.hpp"

#include <fstream>
#include <set>

#include "replisim/errors.hpp"

namespace replisim {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& why) {
  throw ConfigInvalid(path + ": " + why);
}

void checkKeys(const json& j, const std::set<std::string>& known,
               const std::string& path) {
  if (!j.is_object()) bad(path, "expected object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) bad(path + "." + it.key(), "unknown field");
}

template <typename T>
T get(const json& j, const char* name, T def, const std::string& path) {
  if (!j.contains(name)) return def;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    bad(path + "." + name, "wrong type");
  }
}

std::string getStr(const json& j, const char* name, const std::string& def,
                   const std::string& path) {
  return get<std::string>(j, name, def, path);
}

json billingToJson(const BillingMode& b) {
  if (b.kind == BillingKind::PayPerRequest) return "payPerRequest";
  return json{{"rcu", b.provisioned.rcu},
              {"wcu", b.provisioned.wcu},
              {"burstSeconds", b.provisioned.burstSeconds}};
}

VideoSeed parseVideo(const json& j, const std::string& path) {
  checkKeys(j,
            {"id", "publishedAtS", "durationS", "sizeBytes", "state", "isNew",
             "seedStore", "sinkObjectId", "deleted", "private", "ageRestricted",
             "membersOnly", "liveOffline", "emptyDownload",
             "transientMetaFailures", "appearsAtMs"},
            path);
  VideoSeed v;
  v.id = getStr(j, "id", "", path);
  if (v.id.empty()) bad(path + ".id", "required");
  v.publishedAtS = get<std::int64_t>(j, "publishedAtS", 0, path);
  v.durationS = get<int>(j, "durationS", 600, path);
  v.sizeBytes = get<std::int64_t>(j, "sizeBytes", 200'000'000, path);
  v.state = videoStateFromString(getStr(j, "state", "New", path));
  v.isNew = get<bool>(j, "isNew", false, path);
  v.seedStore = get<bool>(j, "seedStore", true, path);
  if (j.contains("sinkObjectId"))
    v.sinkObjectId = getStr(j, "sinkObjectId", "", path);
  v.deleted = get<bool>(j, "deleted", false, path);
  v.privateVideo = get<bool>(j, "private", false, path);
  v.ageRestricted = get<bool>(j, "ageRestricted", false, path);
  v.membersOnly = get<bool>(j, "membersOnly", false, path);
  v.liveOffline = get<bool>(j, "liveOffline", false, path);
  v.emptyDownload = get<bool>(j, "emptyDownload", false, path);
  v.transientMetaFailures = get<int>(j, "transientMetaFailures", 0, path);
  v.appearsAtMs = get<VirtualMs>(j, "appearsAtMs", 0, path);
  return v;
}

ChannelSeed parseChannel(const json& j, const std::string& path) {
  checkKeys(j,
            {"id", "userId", "tier", "status", "subscriberCount", "videoCount",
             "ageHours", "backlogPct", "hasToken", "referrerChannelId",
             "videos"},
            path);
  ChannelSeed c;
  c.id = getStr(j, "id", "", path);
  if (c.id.empty()) bad(path + ".id", "required");
  c.userId = getStr(j, "userId", "user-" + c.id, path);
  c.tier = tierFromString(getStr(j, "tier", "Bronze", path));
  c.status = channelStatusFromString(getStr(j, "status", "Verified", path));
  c.subscriberCount = get<int>(j, "subscriberCount", 100, path);
  c.videoCount = get<int>(j, "videoCount", 0, path);
  c.ageHours = get<double>(j, "ageHours", 8760.0, path);
  c.backlogPct = get<int>(j, "backlogPct", 0, path);
  c.hasToken = get<bool>(j, "hasToken", true, path);
  if (j.contains("referrerChannelId"))
    c.referrerChannelId = getStr(j, "referrerChannelId", "", path);
  if (j.contains("videos")) {
    const auto& arr = j.at("videos");
    if (!arr.is_array()) bad(path + ".videos", "expected array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.videos.push_back(parseVideo(arr[i], path + ".videos[" + std::to_string(i) + "]"));
  }
  return c;
}

const std::set<std::string> kFaultKinds = {
    "sinkOutage",       "nodeOutage",   "chainReject", "proxyFault",
    "apiOutage",        "tokenRevocation", "queuePollution", "crash"};

FaultSpec parseFault(const json& j, const std::string& path) {
  checkKeys(j, {"kind", "atMs", "durationMs", "target", "count", "categoryMix"},
            path);
  FaultSpec f;
  f.kind = getStr(j, "kind", "", path);
  if (!kFaultKinds.count(f.kind)) bad(path + ".kind", "unknown fault kind '" + f.kind + "'");
  f.atMs = get<VirtualMs>(j, "atMs", 0, path);
  f.durationMs = get<VirtualMs>(j, "durationMs", 0, path);
  f.target = getStr(j, "target", "", path);
  f.count = get<int>(j, "count", 0, path);
  if (j.contains("categoryMix")) {
    const auto& m = j.at("categoryMix");
    if (!m.is_object()) bad(path + ".categoryMix", "expected object");
    for (auto it = m.begin(); it != m.end(); ++it) {
      if (!it.value().is_number_integer())
        bad(path + ".categoryMix." + it.key(), "expected integer");
      f.categoryMix[it.key()] = it.value().get<int>();
    }
  }
  return f;
}

ParameterOverride parseOverride(const json& j, const std::string& path) {
  checkKeys(j, {"atMs", "key", "value"}, path);
  ParameterOverride o;
  o.atMs = get<VirtualMs>(j, "atMs", 0, path);
  o.key = getStr(j, "key", "", path);
  if (o.key.empty()) bad(path + ".key", "required");
  if (!j.contains("value")) bad(path + ".value", "required");
  o.value = j.at("value");
  return o;
}

ExpectRule parseExpect(const json& j, const std::string& path) {
  checkKeys(j, {"metric", "op", "value"}, path);
  ExpectRule e;
  e.metric = getStr(j, "metric", "", path);
  if (e.metric.empty()) bad(path + ".metric", "required");
  e.op = getStr(j, "op", "eq", path);
  if (e.op != "eq" && e.op != "le" && e.op != "ge")
    bad(path + ".op", "expected eq|le|ge");
  e.value = get<std::int64_t>(j, "value", 0, path);
  return e;
}

CorpusConfig parseCorpus(const json& j, const std::string& path) {
  checkKeys(j,
            {"channelCount", "videosPerChannel", "sizeMedianMB", "sizeSigma",
             "durationMedianS", "durationSigma", "pPrivate", "pAgeRestricted",
             "pMembersOnly", "pLive", "pDeleted", "pRegionRestricted",
             "publishedFromS", "publishedToS", "subscriberMedian",
             "subscriberSigma"},
            path);
  CorpusConfig c;
  c.channelCount = get<int>(j, "channelCount", 0, path);
  c.videosPerChannel = get<int>(j, "videosPerChannel", 0, path);
  c.sizeMedianMB = get<double>(j, "sizeMedianMB", c.sizeMedianMB, path);
  c.sizeSigma = get<double>(j, "sizeSigma", c.sizeSigma, path);
  c.durationMedianS = get<double>(j, "durationMedianS", c.durationMedianS, path);
  c.durationSigma = get<double>(j, "durationSigma", c.durationSigma, path);
  c.pPrivate = get<double>(j, "pPrivate", 0.0, path);
  c.pAgeRestricted = get<double>(j, "pAgeRestricted", 0.0, path);
  c.pMembersOnly = get<double>(j, "pMembersOnly", 0.0, path);
  c.pLive = get<double>(j, "pLive", 0.0, path);
  c.pDeleted = get<double>(j, "pDeleted", 0.0, path);
  c.pRegionRestricted = get<double>(j, "pRegionRestricted", 0.0, path);
  c.publishedFromS = get<std::int64_t>(j, "publishedFromS", c.publishedFromS, path);
  c.publishedToS = get<std::int64_t>(j, "publishedToS", c.publishedToS, path);
  c.subscriberMedian = get<std::int64_t>(j, "subscriberMedian", c.subscriberMedian, path);
  c.subscriberSigma = get<double>(j, "subscriberSigma", c.subscriberSigma, path);
  if (c.channelCount < 0 || c.videosPerChannel < 0)
    bad(path, "counts must be non-negative");
  return c;
}

}  // namespace

BillingMode parseBillingJson(const json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "payPerRequest") return BillingMode::payPerRequest();
    bad(path, "expected \"payPerRequest\" or a provisioned object");
  }
  checkKeys(j, {"rcu", "wcu", "burstSeconds"}, path);
  ProvisionedThroughput t;
  t.rcu = get<std::int64_t>(j, "rcu", 1, path);
  t.wcu = get<std::int64_t>(j, "wcu", 1, path);
  t.burstSeconds = get<std::int64_t>(j, "burstSeconds", 4, path);
  if (t.wcu <= 0 || t.rcu <= 0 || t.burstSeconds <= 0)
    bad(path, "throughput values must be positive");
  return BillingMode::provisionedMode(t.rcu, t.wcu, t.burstSeconds);
}

ScenarioConfig parseScenario(const json& j) {
  const std::string path = "scenario";
  checkKeys(
      j,
      {"name",          "seed",           "epochUnixS",      "durationMs",
       "pollIntervalMinutes", "metricsPeriodMs", "restartDelayMs",
       "walEnabled",    "sleepEnabled",   "preDownloadChecks",
       "swallowWriteErrors", "apiUp",     "uploadsEnabled",
       "disableNewSignUps", "authMode",   "billing",         "quota",
       "detector",      "proxy",          "sleepPolicy",
       "downloadConcurrency", "metadataConcurrency", "uploadConcurrency",
       "platformConnectionCap", "maxBatch", "uploadAttempts",
       "uploadRetryGapMs", "downloadTimeoutMs", "metadataTimeoutMs",
       "bandwidthBytesPerS", "storageNodes", "blockIntervalMs",
       "visibilityMinMs", "visibilityMaxMs", "corpus", "channels", "faults",
       "overrides",     "expect"},
      path);

  ScenarioConfig c;
  c.name = getStr(j, "name", c.name, path);
  c.seed = get<std::uint64_t>(j, "seed", c.seed, path);
  c.epochUnixS = get<std::int64_t>(j, "epochUnixS", c.epochUnixS, path);
  c.durationMs = get<VirtualMs>(j, "durationMs", c.durationMs, path);
  if (c.durationMs <= 0) bad(path + ".durationMs", "must be positive");
  c.pollIntervalMs =
      minutesMs(get<std::int64_t>(j, "pollIntervalMinutes", 1440, path));
  if (c.pollIntervalMs <= 0) bad(path + ".pollIntervalMinutes", "must be positive");
  c.metricsPeriodMs = get<VirtualMs>(j, "metricsPeriodMs", c.metricsPeriodMs, path);
  c.restartDelayMs = get<VirtualMs>(j, "restartDelayMs", c.restartDelayMs, path);
  c.walEnabled = get<bool>(j, "walEnabled", c.walEnabled, path);
  c.sleepEnabled = get<bool>(j, "sleepEnabled", c.sleepEnabled, path);
  c.preDownloadChecks = get<bool>(j, "preDownloadChecks", c.preDownloadChecks, path);
  c.swallowWriteErrors = get<bool>(j, "swallowWriteErrors", c.swallowWriteErrors, path);
  c.apiUp = get<bool>(j, "apiUp", c.apiUp, path);
  c.uploadsEnabled = get<bool>(j, "uploadsEnabled", c.uploadsEnabled, path);
  c.disableNewSignUps = get<bool>(j, "disableNewSignUps", c.disableNewSignUps, path);

  const std::string auth = getStr(j, "authMode", "token", path);
  if (auth == "token") c.authMode = AuthMode::Token;
  else if (auth == "videoVerification") c.authMode = AuthMode::VideoVerification;
  else bad(path + ".authMode", "expected token|videoVerification");

  if (j.contains("billing"))
    c.billing = parseBillingJson(j.at("billing"), path + ".billing");

  if (j.contains("quota")) {
    const auto& q = j.at("quota");
    checkKeys(q, {"dailyBudget", "rationing", "signupBudget", "syncBudget"},
              path + ".quota");
    c.quota.dailyBudget = get<std::int64_t>(q, "dailyBudget", 10000, path + ".quota");
    c.quota.rationing = get<bool>(q, "rationing", false, path + ".quota");
    c.quota.signupBudget = get<std::int64_t>(q, "signupBudget", 500, path + ".quota");
    c.quota.syncBudget = get<std::int64_t>(q, "syncBudget", 9500, path + ".quota");
  }

  if (j.contains("detector")) {
    const auto& d = j.at("detector");
    checkKeys(d,
              {"windowMs", "alpha", "beta", "gamma", "cv0", "threshold",
               "blockMs", "halfLifeMs"},
              path + ".detector");
    c.detector.windowMs = get<VirtualMs>(d, "windowMs", c.detector.windowMs, path + ".detector");
    c.detector.alpha = get<double>(d, "alpha", c.detector.alpha, path + ".detector");
    c.detector.beta = get<double>(d, "beta", c.detector.beta, path + ".detector");
    c.detector.gamma = get<double>(d, "gamma", c.detector.gamma, path + ".detector");
    c.detector.cv0 = get<double>(d, "cv0", c.detector.cv0, path + ".detector");
    c.detector.threshold = get<double>(d, "threshold", c.detector.threshold, path + ".detector");
    c.detector.blockMs = get<VirtualMs>(d, "blockMs", c.detector.blockMs, path + ".detector");
    c.detector.halfLifeMs = get<VirtualMs>(d, "halfLifeMs", c.detector.halfLifeMs, path + ".detector");
  }

  if (j.contains("proxy")) {
    const auto& p = j.at("proxy");
    checkKeys(p,
              {"generation", "endpoints", "faultyTtlMs", "spinWaitIntervalMs",
               "tunnelRotationOutageMs", "maxPendingPerEndpoint"},
              path + ".proxy");
    const int gen = get<int>(p, "generation", 2, path + ".proxy");
    if (gen < 0 || gen > 2) bad(path + ".proxy.generation", "expected 0|1|2");
    c.proxy.generation = static_cast<ProxyGeneration>(gen);
    c.proxy.endpoints = get<std::vector<std::string>>(p, "endpoints", {}, path + ".proxy");
    c.proxy.faultyTtlMs = get<VirtualMs>(p, "faultyTtlMs", c.proxy.faultyTtlMs, path + ".proxy");
    c.proxy.spinWaitIntervalMs =
        get<VirtualMs>(p, "spinWaitIntervalMs", c.proxy.spinWaitIntervalMs, path + ".proxy");
    c.proxy.tunnelRotationOutageMs = get<VirtualMs>(
        p, "tunnelRotationOutageMs", c.proxy.tunnelRotationOutageMs, path + ".proxy");
    c.proxy.maxPendingPerEndpoint =
        get<int>(p, "maxPendingPerEndpoint", c.proxy.maxPendingPerEndpoint, path + ".proxy");
    if (c.proxy.generation == ProxyGeneration::Pool && c.proxy.endpoints.empty())
      bad(path + ".proxy.endpoints", "pool generation needs at least one endpoint");
  } else {
    c.proxy.generation = ProxyGeneration::Pool;
    c.proxy.endpoints = {"proxy-1", "proxy-2", "proxy-3", "proxy-4", "proxy-5"};
  }

  if (j.contains("sleepPolicy")) {
    const auto& s = j.at("sleepPolicy");
    checkKeys(s, {"minMs", "maxMs", "applicationsPerVideo"}, path + ".sleepPolicy");
    c.sleepPolicy.minMs = get<VirtualMs>(s, "minMs", 0, path + ".sleepPolicy");
    c.sleepPolicy.maxMs = get<VirtualMs>(s, "maxMs", 30000, path + ".sleepPolicy");
    c.sleepPolicy.applicationsPerVideo = get<int>(s, "applicationsPerVideo", 3, path + ".sleepPolicy");
    if (c.sleepPolicy.maxMs < c.sleepPolicy.minMs)
      bad(path + ".sleepPolicy", "maxMs below minMs");
  }

  c.downloadConcurrency = get<int>(j, "downloadConcurrency", c.downloadConcurrency, path);
  c.metadataConcurrency = get<int>(j, "metadataConcurrency", c.metadataConcurrency, path);
  c.uploadConcurrency = get<int>(j, "uploadConcurrency", c.uploadConcurrency, path);
  c.platformConnectionCap = get<int>(j, "platformConnectionCap", c.platformConnectionCap, path);
  c.maxBatch = get<int>(j, "maxBatch", c.maxBatch, path);
  c.uploadAttempts = get<int>(j, "uploadAttempts", c.uploadAttempts, path);
  c.uploadRetryGapMs = get<VirtualMs>(j, "uploadRetryGapMs", c.uploadRetryGapMs, path);
  c.downloadTimeoutMs = get<VirtualMs>(j, "downloadTimeoutMs", c.downloadTimeoutMs, path);
  c.metadataTimeoutMs = get<VirtualMs>(j, "metadataTimeoutMs", c.metadataTimeoutMs, path);
  c.bandwidthBytesPerS = get<std::int64_t>(j, "bandwidthBytesPerS", c.bandwidthBytesPerS, path);
  if (c.downloadConcurrency <= 0 || c.metadataConcurrency <= 0 ||
      c.uploadConcurrency <= 0 || c.maxBatch <= 0 || c.bandwidthBytesPerS <= 0)
    bad(path, "concurrency, batch and bandwidth values must be positive");

  c.storageNodes = get<int>(j, "storageNodes", c.storageNodes, path);
  if (c.storageNodes <= 0) bad(path + ".storageNodes", "must be positive");
  c.blockIntervalMs = get<VirtualMs>(j, "blockIntervalMs", c.blockIntervalMs, path);
  c.visibilityMinMs = get<VirtualMs>(j, "visibilityMinMs", c.visibilityMinMs, path);
  c.visibilityMaxMs = get<VirtualMs>(j, "visibilityMaxMs", c.visibilityMaxMs, path);
  if (c.visibilityMaxMs < c.visibilityMinMs)
    bad(path + ".visibilityMaxMs", "below visibilityMinMs");

  if (j.contains("corpus")) c.corpus = parseCorpus(j.at("corpus"), path + ".corpus");

  if (j.contains("channels")) {
    const auto& arr = j.at("channels");
    if (!arr.is_array()) bad(path + ".channels", "expected array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.channels.push_back(parseChannel(arr[i], path + ".channels[" + std::to_string(i) + "]"));
  }
  if (j.contains("faults")) {
    const auto& arr = j.at("faults");
    if (!arr.is_array()) bad(path + ".faults", "expected array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.faults.push_back(parseFault(arr[i], path + ".faults[" + std::to_string(i) + "]"));
  }
  if (j.contains("overrides")) {
    const auto& arr = j.at("overrides");
    if (!arr.is_array()) bad(path + ".overrides", "expected array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.overrides.push_back(parseOverride(arr[i], path + ".overrides[" + std::to_string(i) + "]"));
  }
  if (j.contains("expect")) {
    const auto& arr = j.at("expect");
    if (!arr.is_array()) bad(path + ".expect", "expected array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.expect.push_back(parseExpect(arr[i], path + ".expect[" + std::to_string(i) + "]"));
  }
  return c;
}

ScenarioConfig loadScenarioFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigInvalid(path + ": " + e.what());
  }
  return parseScenario(j);
}

nlohmann::json scenarioToJson(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["epochUnixS"] = c.epochUnixS;
  j["durationMs"] = c.durationMs;
  j["pollIntervalMinutes"] = c.pollIntervalMs / kMinuteMs;
  j["walEnabled"] = c.walEnabled;
  j["sleepEnabled"] = c.sleepEnabled;
  j["preDownloadChecks"] = c.preDownloadChecks;
  j["authMode"] = c.authMode == AuthMode::Token ? "token" : "videoVerification";
  j["billing"] = billingToJson(c.billing);
  j["proxy"] = {{"generation", static_cast<int>(c.proxy.generation)},
                {"endpoints", c.proxy.endpoints}};
  return j;
}

}  // namespace replisim
