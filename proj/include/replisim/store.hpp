#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "replisim/clock.hpp"
#include "replisim/records.hpp"
#include "replisim/serde.hpp"

namespace replisim {

struct ProvisionedThroughput {
  std::int64_t rcu = 1;
  std::int64_t wcu = 1;
  // Burst credit window: writes may draw down up to wcu * burstSeconds
  // accumulated capacity.
  std::int64_t burstSeconds = 4;
};

enum class BillingKind { PayPerRequest, Provisioned };

struct BillingMode {
  BillingKind kind = BillingKind::PayPerRequest;
  ProvisionedThroughput provisioned{};

  static BillingMode payPerRequest() { return {}; }
  static BillingMode provisionedMode(std::int64_t rcu, std::int64_t wcu,
                                     std::int64_t burstSeconds = 4) {
    BillingMode m;
    m.kind = BillingKind::Provisioned;
    m.provisioned = {rcu, wcu, burstSeconds};
    return m;
  }
};

struct WriteLogRecord {
  std::uint64_t seq = 0;
  std::string table;
  std::string key;
  std::string op;  // "put" | "del"
  std::string payload;  // JSON, empty for del
};

std::string serializeWriteLogRecord(const WriteLogRecord& r);
WriteLogRecord parseWriteLogRecord(const std::string& line);

// Key-value tables with the production key shapes: channels keyed
// (userId, id) with secondary indexes on sinkChannelId and referrerChannelId;
// videos keyed (channelId, id) with a (state, publishedAt) index; users,
// stats, whitelist flat. Every acknowledged write is appended to an
// append-only log before the acknowledgment, so replaying the log from empty
// reproduces the store exactly.
class DurableStore {
 public:
  explicit DurableStore(const SimClock* clock = nullptr) : clock_(clock) {}

  void setBillingMode(BillingMode m);
  const BillingMode& billingMode() const { return billing_; }

  // Channels ---------------------------------------------------------------
  void putChannel(const ChannelRecord& c);
  void eraseChannel(const std::string& userId, const std::string& id);
  std::optional<ChannelRecord> getChannel(const std::string& userId,
                                          const std::string& id) const;
  std::optional<ChannelRecord> channelById(const std::string& id) const;
  std::optional<ChannelRecord> channelBySinkId(std::int64_t sinkId) const;
  std::vector<ChannelRecord> channelsByReferrer(
      const std::string& referrerChannelId) const;
  std::vector<ChannelRecord> allChannels() const;  // sorted by channel id

  // Videos -------------------------------------------------------------------
  void putVideo(const VideoRecord& v);
  void eraseVideo(const std::string& channelId, const std::string& id);
  std::optional<VideoRecord> getVideo(const std::string& channelId,
                                      const std::string& id) const;
  std::vector<VideoRecord> videosOfChannel(const std::string& channelId) const;
  // Sorted by (publishedAt, channelId, id) via the state index.
  std::vector<VideoRecord> videosByState(VideoState s) const;
  std::vector<VideoRecord> allVideos() const;
  std::size_t videoCountTotal() const { return videos_.size(); }

  // Users ---------------------------------------------------------------------
  void putUser(const UserRecord& u);
  std::optional<UserRecord> getUser(const std::string& id) const;

  // Stats ---------------------------------------------------------------------
  void putStats(const StatsRecord& s);
  std::optional<StatsRecord> getStats(const std::string& partition,
                                      const std::string& date) const;

  // Whitelist -------------------------------------------------------------------
  void addWhitelist(const std::string& handle, VirtualMs now);
  void removeWhitelist(const std::string& handle);
  bool whitelisted(const std::string& handle) const;

  // Write log -----------------------------------------------------------------
  const std::vector<WriteLogRecord>& writeLog() const { return log_; }
  std::string writeLogText() const;
  static DurableStore replay(const std::vector<WriteLogRecord>& log);

  // Canonical snapshot of every table; two stores are equal iff their
  // snapshots compare equal.
  Json snapshot() const;

  std::int64_t throttledWrites() const { return throttledWrites_; }

 private:
  using ChannelKey = std::pair<std::string, std::string>;  // (userId, id)
  using VideoKey = std::pair<std::string, std::string>;    // (channelId, id)

  void chargeWrite();
  void appendLog(const std::string& table, const std::string& key,
                 const std::string& op, const std::string& payload);
  void indexChannel(const ChannelRecord& c);
  void deindexChannel(const ChannelRecord& c);
  void indexVideo(const VideoRecord& v);
  void deindexVideo(const VideoRecord& v);
  void applyRaw(const WriteLogRecord& r);

  const SimClock* clock_;
  BillingMode billing_{};
  // Token bucket in milli-tokens; exact integer refill of wcu per second.
  std::int64_t bucketMilli_ = 0;
  VirtualMs bucketRefillAtMs_ = 0;
  std::int64_t throttledWrites_ = 0;

  std::map<ChannelKey, ChannelRecord> channels_;
  std::map<std::string, ChannelKey> channelIdIndex_;
  std::map<std::int64_t, ChannelKey> sinkChannelIndex_;
  std::multimap<std::string, ChannelKey> referrerIndex_;

  std::map<VideoKey, VideoRecord> videos_;
  std::map<VideoState, std::set<std::tuple<std::int64_t, std::string, std::string>>>
      stateIndex_;  // (publishedAt, channelId, id)

  std::map<std::string, UserRecord> users_;
  std::map<std::pair<std::string, std::string>, StatsRecord> stats_;
  std::map<std::string, WhitelistRecord> whitelist_;

  std::vector<WriteLogRecord> log_;
  std::uint64_t nextSeq_ = 1;
};

}  // namespace replisim
