#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "replisim/states.hpp"
#include "replisim/time.hpp"

namespace replisim {

// OAuth-style credential pair. accessExpiry is a virtual timestamp;
// refreshLastUsed is the last virtual instant the refresh token was
// exercised. Refresh validity lapses after six months of inactivity.
struct TokenBundle {
  std::string accessToken;
  VirtualMs accessExpiryMs = 0;
  std::string refreshToken;
  VirtualMs refreshLastUsedMs = 0;
  bool revoked = false;

  bool operator==(const TokenBundle&) const = default;
};

enum class ChannelStatus : std::uint8_t {
  Unverified,
  Verified,
  Suspended,
  OptedOut,
};

std::string_view toString(ChannelStatus s);
ChannelStatus channelStatusFromString(std::string_view s);

struct ChannelRecord {
  std::string id;           // source-platform channel id
  std::string userId;       // owning user (table partition key)
  std::int64_t sinkChannelId = 0;  // sink-side identifier
  Tier tier = Tier::Bronze;
  ChannelStatus status = ChannelStatus::Unverified;
  int backlogPct = 0;  // share of eligible videos not yet replicated, [0,100]
  std::int64_t subscriberCount = 0;
  std::int64_t videoCount = 0;
  std::int64_t ageHours = 0;
  std::optional<TokenBundle> token;
  std::optional<std::string> verificationVideoUrl;
  std::optional<ChannelStatus> preOptOutStatus;
  std::optional<Tier> preOptOutTier;
  std::optional<std::string> referrerChannelId;

  bool operator==(const ChannelRecord&) const = default;
};

struct StateChange {
  VirtualMs atMs = 0;
  VideoState from = VideoState::New;
  VideoState to = VideoState::New;

  bool operator==(const StateChange&) const = default;
};

struct VideoRecord {
  std::string id;
  std::string channelId;
  std::int64_t publishedAtS = 0;  // source-platform epoch seconds
  std::int64_t durationS = 0;
  std::int64_t sizeBytes = 0;
  VideoState state = VideoState::New;
  std::optional<std::string> sinkObjectId;
  bool isNew = false;  // first observed as freshly published
  std::vector<StateChange> history;

  bool operator==(const VideoRecord&) const = default;
};

struct UserRecord {
  std::string id;
  std::string email;
  std::string authorizationCode;
  std::string accessToken;
  std::string refreshToken;

  bool operator==(const UserRecord&) const = default;
};

struct StatsRecord {
  std::string partition;
  std::string date;  // virtual day index rendered as text
  std::map<std::string, std::int64_t> counters;

  bool operator==(const StatsRecord&) const = default;
};

struct WhitelistRecord {
  std::string handle;
  VirtualMs addedAtMs = 0;

  bool operator==(const WhitelistRecord&) const = default;
};

// Applies a state-machine edge. Throws IllegalTransition for any pair not in
// the legal edge set; on success returns the updated record with the change
// appended to history.
VideoRecord transition(VideoRecord video, VideoState target, VirtualMs now);

}  // namespace replisim
