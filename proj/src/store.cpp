#include "replisim/store.hpp"

#include <algorithm>

#include "replisim/errors.hpp"

namespace replisim {
namespace {

std::string channelKeyText(const std::string& userId, const std::string& id) {
  return userId + "|" + id;
}
std::string videoKeyText(const std::string& channelId, const std::string& id) {
  return channelId + "|" + id;
}

bool sinkObjectIdExpected(VideoState s) {
  switch (s) {
    case VideoState::VideoCreated:
    case VideoState::UploadStarted:
    case VideoState::UploadSucceeded:
    case VideoState::UploadFailed:
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string serializeWriteLogRecord(const WriteLogRecord& r) {
  Json j{{"seq", r.seq},
         {"table", r.table},
         {"key", r.key},
         {"op", r.op},
         {"payload", r.payload}};
  return j.dump();
}

WriteLogRecord parseWriteLogRecord(const std::string& line) {
  Json j = Json::parse(line);
  WriteLogRecord r;
  r.seq = j.at("seq").get<std::uint64_t>();
  r.table = j.at("table").get<std::string>();
  r.key = j.at("key").get<std::string>();
  r.op = j.at("op").get<std::string>();
  r.payload = j.at("payload").get<std::string>();
  return r;
}

void DurableStore::setBillingMode(BillingMode m) {
  billing_ = m;
  if (billing_.kind == BillingKind::Provisioned) {
    // Bucket starts full.
    bucketMilli_ = billing_.provisioned.wcu * billing_.provisioned.burstSeconds * 1000;
    bucketRefillAtMs_ = clock_ ? clock_->now() : 0;
  }
}

void DurableStore::chargeWrite() {
  if (billing_.kind != BillingKind::Provisioned) return;
  const VirtualMs now = clock_ ? clock_->now() : 0;
  const std::int64_t cap =
      billing_.provisioned.wcu * billing_.provisioned.burstSeconds * 1000;
  const VirtualMs elapsed = now - bucketRefillAtMs_;
  if (elapsed > 0) {
    bucketMilli_ = std::min(cap, bucketMilli_ + elapsed * billing_.provisioned.wcu);
  }
  bucketRefillAtMs_ = now;
  if (bucketMilli_ < 1000) {
    ++throttledWrites_;
    throw ThroughputExceeded("write capacity exceeded");
  }
  bucketMilli_ -= 1000;
}

void DurableStore::appendLog(const std::string& table, const std::string& key,
                             const std::string& op, const std::string& payload) {
  log_.push_back({nextSeq_++, table, key, op, payload});
}

void DurableStore::indexChannel(const ChannelRecord& c) {
  const ChannelKey k{c.userId, c.id};
  channelIdIndex_[c.id] = k;
  sinkChannelIndex_[c.sinkChannelId] = k;
  if (c.referrerChannelId) referrerIndex_.emplace(*c.referrerChannelId, k);
}

void DurableStore::deindexChannel(const ChannelRecord& c) {
  const ChannelKey k{c.userId, c.id};
  channelIdIndex_.erase(c.id);
  sinkChannelIndex_.erase(c.sinkChannelId);
  if (c.referrerChannelId) {
    auto [lo, hi] = referrerIndex_.equal_range(*c.referrerChannelId);
    for (auto it = lo; it != hi; ++it) {
      if (it->second == k) {
        referrerIndex_.erase(it);
        break;
      }
    }
  }
}

void DurableStore::indexVideo(const VideoRecord& v) {
  stateIndex_[v.state].insert({v.publishedAtS, v.channelId, v.id});
}

void DurableStore::deindexVideo(const VideoRecord& v) {
  auto it = stateIndex_.find(v.state);
  if (it != stateIndex_.end()) {
    it->second.erase({v.publishedAtS, v.channelId, v.id});
    if (it->second.empty()) stateIndex_.erase(it);
  }
}

void DurableStore::putChannel(const ChannelRecord& c) {
  chargeWrite();
  const ChannelKey k{c.userId, c.id};
  auto it = channels_.find(k);
  if (it != channels_.end()) deindexChannel(it->second);
  channels_[k] = c;
  indexChannel(c);
  appendLog("channels", channelKeyText(c.userId, c.id), "put", Json(c).dump());
}

void DurableStore::eraseChannel(const std::string& userId, const std::string& id) {
  const ChannelKey k{userId, id};
  auto it = channels_.find(k);
  if (it == channels_.end()) return;
  chargeWrite();
  deindexChannel(it->second);
  channels_.erase(it);
  appendLog("channels", channelKeyText(userId, id), "del", "");
}

std::optional<ChannelRecord> DurableStore::getChannel(const std::string& userId,
                                                      const std::string& id) const {
  auto it = channels_.find({userId, id});
  if (it == channels_.end()) return std::nullopt;
  return it->second;
}

std::optional<ChannelRecord> DurableStore::channelById(const std::string& id) const {
  auto it = channelIdIndex_.find(id);
  if (it == channelIdIndex_.end()) return std::nullopt;
  return channels_.at(it->second);
}

std::optional<ChannelRecord> DurableStore::channelBySinkId(std::int64_t sinkId) const {
  auto it = sinkChannelIndex_.find(sinkId);
  if (it == sinkChannelIndex_.end()) return std::nullopt;
  return channels_.at(it->second);
}

std::vector<ChannelRecord> DurableStore::channelsByReferrer(
    const std::string& referrerChannelId) const {
  std::vector<ChannelRecord> out;
  auto [lo, hi] = referrerIndex_.equal_range(referrerChannelId);
  for (auto it = lo; it != hi; ++it) out.push_back(channels_.at(it->second));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::vector<ChannelRecord> DurableStore::allChannels() const {
  std::vector<ChannelRecord> out;
  out.reserve(channels_.size());
  for (const auto& [id, key] : channelIdIndex_) out.push_back(channels_.at(key));
  return out;
}

void DurableStore::putVideo(const VideoRecord& v) {
  if (v.sinkObjectId.has_value() != sinkObjectIdExpected(v.state)) {
    throw SimError("sinkObjectId presence inconsistent with state " +
                   std::string(toString(v.state)) + " for video " + v.id);
  }
  chargeWrite();
  const VideoKey k{v.channelId, v.id};
  auto it = videos_.find(k);
  if (it != videos_.end()) deindexVideo(it->second);
  videos_[k] = v;
  indexVideo(v);
  appendLog("videos", videoKeyText(v.channelId, v.id), "put", Json(v).dump());
}

void DurableStore::eraseVideo(const std::string& channelId, const std::string& id) {
  const VideoKey k{channelId, id};
  auto it = videos_.find(k);
  if (it == videos_.end()) return;
  chargeWrite();
  deindexVideo(it->second);
  videos_.erase(it);
  appendLog("videos", videoKeyText(channelId, id), "del", "");
}

std::optional<VideoRecord> DurableStore::getVideo(const std::string& channelId,
                                                  const std::string& id) const {
  auto it = videos_.find({channelId, id});
  if (it == videos_.end()) return std::nullopt;
  return it->second;
}

std::vector<VideoRecord> DurableStore::videosOfChannel(
    const std::string& channelId) const {
  std::vector<VideoRecord> out;
  for (auto it = videos_.lower_bound({channelId, ""});
       it != videos_.end() && it->first.first == channelId; ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::vector<VideoRecord> DurableStore::videosByState(VideoState s) const {
  std::vector<VideoRecord> out;
  auto it = stateIndex_.find(s);
  if (it == stateIndex_.end()) return out;
  for (const auto& [publishedAt, channelId, id] : it->second) {
    (void)publishedAt;
    out.push_back(videos_.at({channelId, id}));
  }
  return out;
}

std::vector<VideoRecord> DurableStore::allVideos() const {
  std::vector<VideoRecord> out;
  out.reserve(videos_.size());
  for (const auto& [k, v] : videos_) out.push_back(v);
  return out;
}

void DurableStore::putUser(const UserRecord& u) {
  chargeWrite();
  users_[u.id] = u;
  appendLog("users", u.id, "put", Json(u).dump());
}

std::optional<UserRecord> DurableStore::getUser(const std::string& id) const {
  auto it = users_.find(id);
  if (it == users_.end()) return std::nullopt;
  return it->second;
}

void DurableStore::putStats(const StatsRecord& s) {
  chargeWrite();
  stats_[{s.partition, s.date}] = s;
  appendLog("stats", s.partition + "|" + s.date, "put", Json(s).dump());
}

std::optional<StatsRecord> DurableStore::getStats(const std::string& partition,
                                                  const std::string& date) const {
  auto it = stats_.find({partition, date});
  if (it == stats_.end()) return std::nullopt;
  return it->second;
}

void DurableStore::addWhitelist(const std::string& handle, VirtualMs now) {
  chargeWrite();
  WhitelistRecord w{handle, now};
  whitelist_[handle] = w;
  appendLog("whitelist", handle, "put", Json(w).dump());
}

void DurableStore::removeWhitelist(const std::string& handle) {
  auto it = whitelist_.find(handle);
  if (it == whitelist_.end()) return;
  chargeWrite();
  whitelist_.erase(it);
  appendLog("whitelist", handle, "del", "");
}

bool DurableStore::whitelisted(const std::string& handle) const {
  return whitelist_.count(handle) > 0;
}

std::string DurableStore::writeLogText() const {
  std::string out;
  for (const auto& r : log_) {
    out += serializeWriteLogRecord(r);
    out += '\n';
  }
  return out;
}

void DurableStore::applyRaw(const WriteLogRecord& r) {
  const auto split = [](const std::string& key) {
    const auto pos = key.find('|');
    return std::make_pair(key.substr(0, pos), key.substr(pos + 1));
  };
  if (r.table == "channels") {
    if (r.op == "put") {
      ChannelRecord c = Json::parse(r.payload).get<ChannelRecord>();
      auto it = channels_.find({c.userId, c.id});
      if (it != channels_.end()) deindexChannel(it->second);
      channels_[{c.userId, c.id}] = c;
      indexChannel(c);
    } else {
      auto [userId, id] = split(r.key);
      auto it = channels_.find({userId, id});
      if (it != channels_.end()) {
        deindexChannel(it->second);
        channels_.erase(it);
      }
    }
  } else if (r.table == "videos") {
    if (r.op == "put") {
      VideoRecord v = Json::parse(r.payload).get<VideoRecord>();
      auto it = videos_.find({v.channelId, v.id});
      if (it != videos_.end()) deindexVideo(it->second);
      videos_[{v.channelId, v.id}] = v;
      indexVideo(v);
    } else {
      auto [channelId, id] = split(r.key);
      auto it = videos_.find({channelId, id});
      if (it != videos_.end()) {
        deindexVideo(it->second);
        videos_.erase(it);
      }
    }
  } else if (r.table == "users") {
    if (r.op == "put") {
      UserRecord u = Json::parse(r.payload).get<UserRecord>();
      users_[u.id] = u;
    } else {
      users_.erase(r.key);
    }
  } else if (r.table == "stats") {
    if (r.op == "put") {
      StatsRecord s = Json::parse(r.payload).get<StatsRecord>();
      stats_[{s.partition, s.date}] = s;
    } else {
      auto [partition, date] = split(r.key);
      stats_.erase({partition, date});
    }
  } else if (r.table == "whitelist") {
    if (r.op == "put") {
      WhitelistRecord w = Json::parse(r.payload).get<WhitelistRecord>();
      whitelist_[w.handle] = w;
    } else {
      whitelist_.erase(r.key);
    }
  }
}

DurableStore DurableStore::replay(const std::vector<WriteLogRecord>& log) {
  DurableStore s;
  for (const auto& r : log) s.applyRaw(r);
  return s;
}

Json DurableStore::snapshot() const {
  Json j;
  j["channels"] = Json::array();
  for (const auto& [k, c] : channels_) j["channels"].push_back(c);
  j["videos"] = Json::array();
  for (const auto& [k, v] : videos_) j["videos"].push_back(v);
  j["users"] = Json::array();
  for (const auto& [k, u] : users_) j["users"].push_back(u);
  j["stats"] = Json::array();
  for (const auto& [k, s] : stats_) j["stats"].push_back(s);
  j["whitelist"] = Json::array();
  for (const auto& [k, w] : whitelist_) j["whitelist"].push_back(w);
  return j;
}

}  // namespace replisim
