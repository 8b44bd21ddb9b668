#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "replisim/platform.hpp"
#include "replisim/proxy.hpp"
#include "replisim/states.hpp"
#include "replisim/store.hpp"
#include "replisim/time.hpp"

namespace replisim {

enum class AuthMode : std::uint8_t { Token, VideoVerification };

struct VideoSeed {
  std::string id;
  std::int64_t publishedAtS = 0;
  int durationS = 600;
  std::int64_t sizeBytes = 200'000'000;
  VideoState state = VideoState::New;
  bool isNew = false;
  // Pre-seed a durable row. Corpus-only videos (false) are left for
  // ingestion to discover.
  bool seedStore = true;
  std::optional<std::string> sinkObjectId;
  // Source-side behaviour flags for the matching corpus entry.
  bool deleted = false;
  bool privateVideo = false;
  bool ageRestricted = false;
  bool membersOnly = false;
  bool liveOffline = false;
  bool emptyDownload = false;
  int transientMetaFailures = 0;
  VirtualMs appearsAtMs = 0;
};

struct ChannelSeed {
  std::string id;
  std::string userId;
  Tier tier = Tier::Bronze;
  ChannelStatus status = ChannelStatus::Verified;
  int subscriberCount = 100;
  int videoCount = 0;
  double ageHours = 8760.0;
  int backlogPct = 0;
  bool hasToken = true;
  std::optional<std::string> referrerChannelId;
  std::vector<VideoSeed> videos;
};

struct FaultSpec {
  // sinkOutage | nodeOutage | chainReject | proxyFault | apiOutage |
  // tokenRevocation | queuePollution | crash
  std::string kind;
  VirtualMs atMs = 0;
  VirtualMs durationMs = 0;
  std::string target;
  int count = 0;
  std::map<std::string, int> categoryMix;
};

struct ParameterOverride {
  VirtualMs atMs = 0;
  std::string key;
  nlohmann::json value;
};

struct ExpectRule {
  std::string metric;
  std::string op;  // eq | le | ge
  std::int64_t value = 0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  std::int64_t epochUnixS = 1'700'000'000;
  VirtualMs durationMs = daysMs(1);
  VirtualMs pollIntervalMs = minutesMs(1440);
  VirtualMs metricsPeriodMs = hoursMs(1);
  VirtualMs restartDelayMs = secondsMs(15);

  bool walEnabled = true;
  bool sleepEnabled = true;
  bool preDownloadChecks = true;
  bool swallowWriteErrors = false;
  bool apiUp = true;
  bool uploadsEnabled = true;
  bool disableNewSignUps = false;
  AuthMode authMode = AuthMode::Token;
  BillingMode billing = BillingMode::payPerRequest();
  QuotaConfig quota;
  DetectorParams detector;
  ProxyPoolConfig proxy{
      .endpoints = {"proxy-01", "proxy-02", "proxy-03", "proxy-04"}};
  SleepPolicy sleepPolicy;

  int downloadConcurrency = 2;
  int metadataConcurrency = 2;
  int uploadConcurrency = 20;
  int platformConnectionCap = 4;
  int maxBatch = 10;
  int uploadAttempts = 5;
  VirtualMs uploadRetryGapMs = secondsMs(6);
  VirtualMs downloadTimeoutMs = secondsMs(10'800);
  VirtualMs metadataTimeoutMs = secondsMs(1'800);
  std::int64_t bandwidthBytesPerS = 12'500'000;

  int storageNodes = 3;
  VirtualMs blockIntervalMs = secondsMs(6);
  VirtualMs visibilityMinMs = 0;
  VirtualMs visibilityMaxMs = secondsMs(30);

  std::optional<CorpusConfig> corpus;
  std::vector<ChannelSeed> channels;
  std::vector<FaultSpec> faults;
  std::vector<ParameterOverride> overrides;
  std::vector<ExpectRule> expect;
};

// Throws ConfigInvalid naming the offending field.
ScenarioConfig parseScenario(const nlohmann::json& j);
ScenarioConfig loadScenarioFile(const std::string& path);
nlohmann::json scenarioToJson(const ScenarioConfig& c);
BillingMode parseBillingJson(const nlohmann::json& j, const std::string& path);

}  // namespace replisim
