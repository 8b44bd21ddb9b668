#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "replisim/clock.hpp"
#include "replisim/records.hpp"
#include "replisim/rng.hpp"
#include "replisim/time.hpp"

namespace replisim {

// Source-platform view of a video: availability flags live here, the
// replication side only learns them by asking.
struct CorpusVideo {
  std::string id;
  std::string channelId;
  std::string title;
  std::int64_t publishedAtS = 0;
  std::int64_t durationS = 0;
  std::int64_t sizeBytes = 0;
  bool isPrivate = false;
  bool unlisted = false;
  bool ageRestricted = false;
  bool membersOnly = false;
  bool live = false;
  bool regionRestricted = false;
  bool deleted = false;
  bool emptyDownload = false;
  int transientMetaFailures = 0;
  VirtualMs appearsAtMs = 0;  // instant the platform starts listing it
};

struct CorpusChannel {
  std::string id;
  std::string title;
  std::int64_t subscriberCount = 0;
  std::int64_t videoCount = 0;
  std::int64_t ageHours = 0;
  std::vector<std::string> videoIds;
};

struct CorpusConfig {
  int channelCount = 0;
  int videosPerChannel = 0;
  double sizeMedianMB = 200.0;
  double sizeSigma = 0.5;
  double durationMedianS = 600.0;
  double durationSigma = 0.5;
  double pPrivate = 0.0;
  double pAgeRestricted = 0.0;
  double pMembersOnly = 0.0;
  double pLive = 0.0;
  double pDeleted = 0.0;
  double pRegionRestricted = 0.0;
  std::int64_t publishedFromS = 1500000000;
  std::int64_t publishedToS = 1740000000;
  std::int64_t subscriberMedian = 1000;
  double subscriberSigma = 1.0;
};

enum class ApiOp : std::uint8_t {
  ChannelsList,
  SearchList,
  VideosList,
  PlaylistItemsList,
  TokenExchange,
};
std::string_view toString(ApiOp op);
std::int64_t defaultCost(ApiOp op);

enum class CallService : std::uint8_t { Signup, Sync };

struct ApiResult {
  bool ok = true;
  std::int64_t cost = 0;
  std::string error;  // "quotaExceeded" | "serviceUnavailable"
};

struct QuotaConfig {
  std::int64_t dailyBudget = 10000;
  // Optional rationing into signup / sync sub-budgets.
  bool rationing = false;
  std::int64_t signupBudget = 500;
  std::int64_t syncBudget = 9500;
};

enum class RequestKind : std::uint8_t { CheckVideo, Thumbnail, VideoFetch };
std::string_view toString(RequestKind k);

enum class ScrapeOutcome : std::uint8_t { Ok, BotChallenge };

// Invented scoring model for the platform's automation heuristics: rate,
// connection fan-out, and too-regular pacing all add pressure; pressure
// decays exponentially when traffic stops. Defaults are scenario-overridable.
struct DetectorParams {
  VirtualMs windowMs = minutesMs(10);
  double alpha = 1.0;   // per request/min observed in window
  double beta = 5.0;    // per concurrent connection
  double gamma = 20.0;  // regularity penalty weight
  double cv0 = 0.5;     // coefficient-of-variation pivot
  double threshold = 500.0;
  VirtualMs blockMs = hoursMs(6);
  VirtualMs halfLifeMs = minutesMs(30);
};

struct RequestTraceEntry {
  VirtualMs atMs = 0;
  std::string identity;
  std::string kind;  // request kind, or "sleep"
  std::string outcome;  // "ok" | "challenge" | ms for sleeps
  double scoreAfter = 0.0;
};

enum class TokenStatus : std::uint8_t {
  Valid,
  ExpiredAccess,
  ExpiredRefresh,
  Revoked,
};
std::string_view toString(TokenStatus s);

inline constexpr VirtualMs kAccessTokenTtlMs = hoursMs(1);
inline constexpr VirtualMs kRefreshIdleExpiryMs = monthsMs(6);

// The defended source platform: quota-metered API, scrape-facing bot
// detection, OAuth-style token lifecycle, an operational zero-quota query
// path, and the seeded content corpus.
class PlatformSim {
 public:
  PlatformSim(SimClock& clock, SeededRng rng, DetectorParams det = {},
              QuotaConfig quota = {});

  // Corpus -------------------------------------------------------------------
  void generateCorpus(const CorpusConfig& cfg);
  void addChannel(const CorpusChannel& c);
  void addVideo(const CorpusVideo& v);
  const CorpusChannel* corpusChannel(const std::string& id) const;
  const CorpusVideo* corpusVideo(const std::string& id) const;
  CorpusVideo* corpusVideoMut(const std::string& id);
  std::vector<std::string> listVideoIds(const std::string& channelId) const;
  std::vector<std::string> channelIds() const;

  // Quota-metered API ---------------------------------------------------------
  ApiResult apiCall(ApiOp op, CallService service,
                    std::optional<std::int64_t> cost = std::nullopt);
  void setQuotaRationing(bool on) { quota_.rationing = on; }
  void setApiAvailable(bool up) { apiUp_ = up; }
  std::int64_t quotaSpentToday();
  std::int64_t quotaRejectedTotal() const { return quotaRejected_; }

  // Scraping + detection --------------------------------------------------------
  ScrapeOutcome scrapeRequest(const std::string& identity, RequestKind kind);
  void connectionOpened(const std::string& identity);
  void connectionClosed(const std::string& identity);
  void traceSleep(const std::string& identity, VirtualMs ms);
  double detectionScore(const std::string& identity) const;  // decayed view
  std::optional<VirtualMs> blockedUntil(const std::string& identity) const;
  std::optional<VirtualMs> firstBlockedAt(const std::string& identity) const;
  std::size_t blockedIdentityCount() const;
  void setDetectorParams(const DetectorParams& p) { det_ = p; }
  const DetectorParams& detectorParams() const { return det_; }
  const std::vector<RequestTraceEntry>& requestTrace() const { return trace_; }
  std::string requestTraceText() const;

  // Operational query path (self-hosted): zero quota, no tokens ---------------
  void setOperationalApiUp(bool up) { operationalUp_ = up; }
  bool operationalApiUp() const { return operationalUp_; }

  struct MetaResult {
    bool ok = false;
    bool transientFailure = false;
    std::string error;
    CorpusVideo meta;
  };
  // Fetches metadata through the operational path; decrements the video's
  // transient-failure budget when set.
  MetaResult operationalVideoMeta(const std::string& videoId);
  const CorpusVideo* operationalFindByUrl(const std::string& url) const;

  // Tokens ---------------------------------------------------------------------
  TokenBundle issueTokens(SeededRng& rng) const;
  TokenStatus tokenLifecycle(const TokenBundle& b) const;
  void refreshAccess(TokenBundle& b) const;  // pre: refresh still valid

 private:
  struct DetectionState {
    std::deque<VirtualMs> window;
    double score = 0.0;
    VirtualMs scoreAt = 0;
    std::optional<VirtualMs> blockedUntil;
    std::optional<VirtualMs> firstBlockedAt;
    int connections = 0;
  };

  void rollQuotaDay();
  double decayedScore(const DetectionState& d) const;

  SimClock& clock_;
  SeededRng rng_;
  DetectorParams det_;
  QuotaConfig quota_;
  bool apiUp_ = true;
  bool operationalUp_ = true;
  std::int64_t quotaDay_ = 0;
  std::int64_t spentToday_ = 0;
  std::int64_t spentSignupToday_ = 0;
  std::int64_t spentSyncToday_ = 0;
  std::int64_t quotaRejected_ = 0;

  std::map<std::string, CorpusChannel> channels_;
  std::map<std::string, CorpusVideo> videos_;
  std::map<std::string, DetectionState> det_state_;
  std::vector<RequestTraceEntry> trace_;
};

}  // namespace replisim
