#include "replisim/serde.hpp"

#include <string>

namespace replisim {
namespace {

template <typename T>
void putOptional(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void getOptional(const Json& j, const char* key, std::optional<T>& v) {
  if (j.contains(key)) {
    v = j.at(key).get<T>();
  } else {
    v.reset();
  }
}

}  // namespace

void to_json(Json& j, const TokenBundle& t) {
  j = Json{{"accessToken", t.accessToken},
           {"accessExpiryMs", t.accessExpiryMs},
           {"refreshToken", t.refreshToken},
           {"refreshLastUsedMs", t.refreshLastUsedMs},
           {"revoked", t.revoked}};
}

void from_json(const Json& j, TokenBundle& t) {
  j.at("accessToken").get_to(t.accessToken);
  j.at("accessExpiryMs").get_to(t.accessExpiryMs);
  j.at("refreshToken").get_to(t.refreshToken);
  j.at("refreshLastUsedMs").get_to(t.refreshLastUsedMs);
  j.at("revoked").get_to(t.revoked);
}

void to_json(Json& j, const StateChange& s) {
  j = Json{{"atMs", s.atMs},
           {"from", std::string(toString(s.from))},
           {"to", std::string(toString(s.to))}};
}

void from_json(const Json& j, StateChange& s) {
  s.atMs = j.at("atMs").get<VirtualMs>();
  s.from = videoStateFromString(j.at("from").get<std::string>());
  s.to = videoStateFromString(j.at("to").get<std::string>());
}

void to_json(Json& j, const ChannelRecord& c) {
  j = Json{{"id", c.id},
           {"userId", c.userId},
           {"sinkChannelId", c.sinkChannelId},
           {"tier", std::string(toString(c.tier))},
           {"status", std::string(toString(c.status))},
           {"backlogPct", c.backlogPct},
           {"subscriberCount", c.subscriberCount},
           {"videoCount", c.videoCount},
           {"ageHours", c.ageHours}};
  putOptional(j, "token", c.token);
  putOptional(j, "verificationVideoUrl", c.verificationVideoUrl);
  if (c.preOptOutStatus) {
    j["preOptOutStatus"] = std::string(toString(*c.preOptOutStatus));
  }
  if (c.preOptOutTier) j["preOptOutTier"] = std::string(toString(*c.preOptOutTier));
  putOptional(j, "referrerChannelId", c.referrerChannelId);
}

void from_json(const Json& j, ChannelRecord& c) {
  j.at("id").get_to(c.id);
  j.at("userId").get_to(c.userId);
  j.at("sinkChannelId").get_to(c.sinkChannelId);
  c.tier = tierFromString(j.at("tier").get<std::string>());
  c.status = channelStatusFromString(j.at("status").get<std::string>());
  j.at("backlogPct").get_to(c.backlogPct);
  j.at("subscriberCount").get_to(c.subscriberCount);
  j.at("videoCount").get_to(c.videoCount);
  j.at("ageHours").get_to(c.ageHours);
  getOptional(j, "token", c.token);
  getOptional(j, "verificationVideoUrl", c.verificationVideoUrl);
  if (j.contains("preOptOutStatus")) {
    c.preOptOutStatus =
        channelStatusFromString(j.at("preOptOutStatus").get<std::string>());
  } else {
    c.preOptOutStatus.reset();
  }
  if (j.contains("preOptOutTier")) {
    c.preOptOutTier = tierFromString(j.at("preOptOutTier").get<std::string>());
  } else {
    c.preOptOutTier.reset();
  }
  getOptional(j, "referrerChannelId", c.referrerChannelId);
}

void to_json(Json& j, const VideoRecord& v) {
  j = Json{{"id", v.id},
           {"channelId", v.channelId},
           {"publishedAtS", v.publishedAtS},
           {"durationS", v.durationS},
           {"sizeBytes", v.sizeBytes},
           {"state", std::string(toString(v.state))},
           {"isNew", v.isNew},
           {"history", v.history}};
  putOptional(j, "sinkObjectId", v.sinkObjectId);
}

void from_json(const Json& j, VideoRecord& v) {
  j.at("id").get_to(v.id);
  j.at("channelId").get_to(v.channelId);
  j.at("publishedAtS").get_to(v.publishedAtS);
  j.at("durationS").get_to(v.durationS);
  j.at("sizeBytes").get_to(v.sizeBytes);
  v.state = videoStateFromString(j.at("state").get<std::string>());
  j.at("isNew").get_to(v.isNew);
  v.history = j.at("history").get<std::vector<StateChange>>();
  getOptional(j, "sinkObjectId", v.sinkObjectId);
}

void to_json(Json& j, const UserRecord& u) {
  j = Json{{"id", u.id},
           {"email", u.email},
           {"authorizationCode", u.authorizationCode},
           {"accessToken", u.accessToken},
           {"refreshToken", u.refreshToken}};
}

void from_json(const Json& j, UserRecord& u) {
  j.at("id").get_to(u.id);
  j.at("email").get_to(u.email);
  j.at("authorizationCode").get_to(u.authorizationCode);
  j.at("accessToken").get_to(u.accessToken);
  j.at("refreshToken").get_to(u.refreshToken);
}

void to_json(Json& j, const StatsRecord& s) {
  j = Json{{"partition", s.partition}, {"date", s.date}, {"counters", s.counters}};
}

void from_json(const Json& j, StatsRecord& s) {
  j.at("partition").get_to(s.partition);
  j.at("date").get_to(s.date);
  s.counters = j.at("counters").get<std::map<std::string, std::int64_t>>();
}

void to_json(Json& j, const WhitelistRecord& w) {
  j = Json{{"handle", w.handle}, {"addedAtMs", w.addedAtMs}};
}

void from_json(const Json& j, WhitelistRecord& w) {
  j.at("handle").get_to(w.handle);
  j.at("addedAtMs").get_to(w.addedAtMs);
}

}  // namespace replisim
