#include "replisim/platform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "replisim/errors.hpp"

namespace replisim {

std::string_view toString(ApiOp op) {
  switch (op) {
    case ApiOp::ChannelsList: return "channels.list";
    case ApiOp::SearchList: return "search.list";
    case ApiOp::VideosList: return "videos.list";
    case ApiOp::PlaylistItemsList: return "playlistItems.list";
    case ApiOp::TokenExchange: return "tokenExchange";
  }
  return "?";
}

std::int64_t defaultCost(ApiOp op) {
  switch (op) {
    case ApiOp::ChannelsList: return 1;
    case ApiOp::SearchList: return 100;
    case ApiOp::VideosList: return 1;
    case ApiOp::PlaylistItemsList: return 1;
    case ApiOp::TokenExchange: return 0;
  }
  return 1;
}

std::string_view toString(RequestKind k) {
  switch (k) {
    case RequestKind::CheckVideo: return "check";
    case RequestKind::Thumbnail: return "thumbnail";
    case RequestKind::VideoFetch: return "fetch";
  }
  return "?";
}

std::string_view toString(TokenStatus s) {
  switch (s) {
    case TokenStatus::Valid: return "valid";
    case TokenStatus::ExpiredAccess: return "expiredAccess";
    case TokenStatus::ExpiredRefresh: return "expiredRefresh";
    case TokenStatus::Revoked: return "revoked";
  }
  return "?";
}

PlatformSim::PlatformSim(SimClock& clock, SeededRng rng, DetectorParams det,
                         QuotaConfig quota)
    : clock_(clock), rng_(std::move(rng)), det_(det), quota_(quota) {}

// Corpus ----------------------------------------------------------------------

void PlatformSim::generateCorpus(const CorpusConfig& cfg) {
  for (int c = 0; c < cfg.channelCount; ++c) {
    CorpusChannel ch;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ch-%04d", c + 1);
    ch.id = buf;
    ch.title = "channel " + std::string(buf);
    ch.subscriberCount = std::max<std::int64_t>(
        0, static_cast<std::int64_t>(rng_.logNormalMedian(
               static_cast<double>(cfg.subscriberMedian), cfg.subscriberSigma)));
    ch.ageHours = rng_.uniformInt(100, 50000);
    for (int v = 0; v < cfg.videosPerChannel; ++v) {
      CorpusVideo vid;
      char vb[48];
      std::snprintf(vb, sizeof(vb), "%s-v%04d", ch.id.c_str(), v + 1);
      vid.id = vb;
      vid.channelId = ch.id;
      vid.title = "video " + std::string(vb);
      vid.publishedAtS = rng_.uniformInt(cfg.publishedFromS, cfg.publishedToS);
      vid.durationS = std::max<std::int64_t>(
          10, static_cast<std::int64_t>(
                  rng_.logNormalMedian(cfg.durationMedianS, cfg.durationSigma)));
      vid.sizeBytes = std::max<std::int64_t>(
          1000000, static_cast<std::int64_t>(rng_.logNormalMedian(
                       cfg.sizeMedianMB * 1e6, cfg.sizeSigma)));
      vid.isPrivate = rng_.chance(cfg.pPrivate);
      vid.ageRestricted = rng_.chance(cfg.pAgeRestricted);
      vid.membersOnly = rng_.chance(cfg.pMembersOnly);
      vid.live = rng_.chance(cfg.pLive);
      vid.deleted = rng_.chance(cfg.pDeleted);
      vid.regionRestricted = rng_.chance(cfg.pRegionRestricted);
      ch.videoIds.push_back(vid.id);
      videos_.emplace(vid.id, std::move(vid));
    }
    ch.videoCount = static_cast<std::int64_t>(ch.videoIds.size());
    channels_.emplace(ch.id, std::move(ch));
  }
}

void PlatformSim::addChannel(const CorpusChannel& c) { channels_[c.id] = c; }

void PlatformSim::addVideo(const CorpusVideo& v) {
  videos_[v.id] = v;
  auto it = channels_.find(v.channelId);
  if (it != channels_.end()) {
    auto& ids = it->second.videoIds;
    if (std::find(ids.begin(), ids.end(), v.id) == ids.end()) {
      ids.push_back(v.id);
      it->second.videoCount = static_cast<std::int64_t>(ids.size());
    }
  }
}

const CorpusChannel* PlatformSim::corpusChannel(const std::string& id) const {
  auto it = channels_.find(id);
  return it == channels_.end() ? nullptr : &it->second;
}

const CorpusVideo* PlatformSim::corpusVideo(const std::string& id) const {
  auto it = videos_.find(id);
  return it == videos_.end() ? nullptr : &it->second;
}

CorpusVideo* PlatformSim::corpusVideoMut(const std::string& id) {
  auto it = videos_.find(id);
  return it == videos_.end() ? nullptr : &it->second;
}

std::vector<std::string> PlatformSim::listVideoIds(
    const std::string& channelId) const {
  std::vector<std::string> out;
  auto it = channels_.find(channelId);
  if (it == channels_.end()) return out;
  const VirtualMs now = clock_.now();
  for (const auto& id : it->second.videoIds) {
    const auto& v = videos_.at(id);
    if (v.appearsAtMs <= now) out.push_back(id);
  }
  return out;
}

std::vector<std::string> PlatformSim::channelIds() const {
  std::vector<std::string> out;
  out.reserve(channels_.size());
  for (const auto& [id, c] : channels_) out.push_back(id);
  return out;
}

// Quota ----------------------------------------------------------------------

void PlatformSim::rollQuotaDay() {
  const std::int64_t day = clock_.now() / kDayMs;
  if (day != quotaDay_) {
    quotaDay_ = day;
    spentToday_ = 0;
    spentSignupToday_ = 0;
    spentSyncToday_ = 0;
  }
}

std::int64_t PlatformSim::quotaSpentToday() {
  rollQuotaDay();
  return spentToday_;
}

ApiResult PlatformSim::apiCall(ApiOp op, CallService service,
                               std::optional<std::int64_t> cost) {
  if (!apiUp_) return {false, 0, "serviceUnavailable"};
  rollQuotaDay();
  const std::int64_t c = cost.value_or(defaultCost(op));
  if (quota_.rationing) {
    std::int64_t& spent =
        service == CallService::Signup ? spentSignupToday_ : spentSyncToday_;
    const std::int64_t budget = service == CallService::Signup
                                    ? quota_.signupBudget
                                    : quota_.syncBudget;
    if (spent + c > budget) {
      ++quotaRejected_;
      return {false, 0, "quotaExceeded"};
    }
    spent += c;
  } else {
    if (spentToday_ + c > quota_.dailyBudget) {
      ++quotaRejected_;
      return {false, 0, "quotaExceeded"};
    }
  }
  spentToday_ += c;
  return {true, c, ""};
}

// Detection ---------------------------------------------------------------------

double PlatformSim::decayedScore(const DetectionState& d) const {
  const VirtualMs dt = clock_.now() - d.scoreAt;
  if (dt <= 0 || d.score == 0.0) return d.score;
  return d.score * std::pow(0.5, static_cast<double>(dt) /
                                     static_cast<double>(det_.halfLifeMs));
}

ScrapeOutcome PlatformSim::scrapeRequest(const std::string& identity,
                                         RequestKind kind) {
  DetectionState& d = det_state_[identity];
  const VirtualMs now = clock_.now();
  d.score = decayedScore(d);
  d.scoreAt = now;
  d.window.push_back(now);
  while (!d.window.empty() && d.window.front() <= now - det_.windowMs) {
    d.window.pop_front();
  }
  const double perMin = static_cast<double>(d.window.size()) /
                        (static_cast<double>(det_.windowMs) / 60000.0);
  double cv = det_.cv0;  // neutral until two gaps exist
  if (d.window.size() >= 3) {
    double mean = 0.0;
    const std::size_t n = d.window.size() - 1;
    for (std::size_t i = 1; i < d.window.size(); ++i) {
      mean += static_cast<double>(d.window[i] - d.window[i - 1]);
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 1; i < d.window.size(); ++i) {
      const double g = static_cast<double>(d.window[i] - d.window[i - 1]) - mean;
      var += g * g;
    }
    var /= static_cast<double>(n);
    cv = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
  }
  d.score += det_.alpha * perMin + det_.beta * d.connections +
             det_.gamma * std::max(0.0, det_.cv0 - cv);

  ScrapeOutcome outcome = ScrapeOutcome::Ok;
  if (d.blockedUntil && now < *d.blockedUntil) {
    outcome = ScrapeOutcome::BotChallenge;
  } else if (d.score > det_.threshold) {
    d.blockedUntil = now + det_.blockMs;
    if (!d.firstBlockedAt) d.firstBlockedAt = now;
    outcome = ScrapeOutcome::BotChallenge;
  }
  trace_.push_back({now, identity, std::string(toString(kind)),
                    outcome == ScrapeOutcome::Ok ? "ok" : "challenge",
                    d.score});
  return outcome;
}

void PlatformSim::connectionOpened(const std::string& identity) {
  ++det_state_[identity].connections;
}

void PlatformSim::connectionClosed(const std::string& identity) {
  auto it = det_state_.find(identity);
  if (it != det_state_.end() && it->second.connections > 0) {
    --it->second.connections;
  }
}

void PlatformSim::traceSleep(const std::string& identity, VirtualMs ms) {
  trace_.push_back({clock_.now(), identity, "sleep", std::to_string(ms), 0.0});
}

double PlatformSim::detectionScore(const std::string& identity) const {
  auto it = det_state_.find(identity);
  return it == det_state_.end() ? 0.0 : decayedScore(it->second);
}

std::optional<VirtualMs> PlatformSim::blockedUntil(
    const std::string& identity) const {
  auto it = det_state_.find(identity);
  if (it == det_state_.end()) return std::nullopt;
  return it->second.blockedUntil;
}

std::optional<VirtualMs> PlatformSim::firstBlockedAt(
    const std::string& identity) const {
  auto it = det_state_.find(identity);
  if (it == det_state_.end()) return std::nullopt;
  return it->second.firstBlockedAt;
}

std::size_t PlatformSim::blockedIdentityCount() const {
  std::size_t n = 0;
  const VirtualMs now = clock_.now();
  for (const auto& [id, d] : det_state_) {
    if (d.blockedUntil && now < *d.blockedUntil) ++n;
  }
  return n;
}

std::string PlatformSim::requestTraceText() const {
  std::string out;
  char buf[256];
  for (const auto& e : trace_) {
    std::snprintf(buf, sizeof(buf), "t=%lld id=%s kind=%s outcome=%s score=%.4f\n",
                  static_cast<long long>(e.atMs), e.identity.c_str(),
                  e.kind.c_str(), e.outcome.c_str(), e.scoreAfter);
    out += buf;
  }
  return out;
}

// Operational path -----------------------------------------------------------------

PlatformSim::MetaResult PlatformSim::operationalVideoMeta(
    const std::string& videoId) {
  MetaResult r;
  if (!operationalUp_) {
    r.error = "serviceUnavailable";
    return r;
  }
  auto it = videos_.find(videoId);
  if (it == videos_.end()) {
    r.error = "missing";
    return r;
  }
  if (it->second.transientMetaFailures > 0) {
    --it->second.transientMetaFailures;
    r.transientFailure = true;
    r.error = "transient";
    return r;
  }
  r.ok = true;
  r.meta = it->second;
  return r;
}

const CorpusVideo* PlatformSim::operationalFindByUrl(
    const std::string& url) const {
  // URLs are "video://<id>" in the simulation.
  const std::string prefix = "video://";
  if (url.rfind(prefix, 0) != 0) return nullptr;
  return corpusVideo(url.substr(prefix.size()));
}

// Tokens -------------------------------------------------------------------------

TokenBundle PlatformSim::issueTokens(SeededRng& rng) const {
  TokenBundle b;
  b.accessToken = rng.hexBytes(8);
  b.refreshToken = rng.hexBytes(8);
  b.accessExpiryMs = clock_.now() + kAccessTokenTtlMs;
  b.refreshLastUsedMs = clock_.now();
  return b;
}

TokenStatus PlatformSim::tokenLifecycle(const TokenBundle& b) const {
  if (b.revoked) return TokenStatus::Revoked;
  const VirtualMs now = clock_.now();
  if (now - b.refreshLastUsedMs > kRefreshIdleExpiryMs) {
    return TokenStatus::ExpiredRefresh;
  }
  if (now > b.accessExpiryMs) return TokenStatus::ExpiredAccess;
  return TokenStatus::Valid;
}

void PlatformSim::refreshAccess(TokenBundle& b) const {
  b.refreshLastUsedMs = clock_.now();
  b.accessExpiryMs = clock_.now() + kAccessTokenTtlMs;
}

}  // namespace replisim
