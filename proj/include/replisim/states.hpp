#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace replisim {

// Video lifecycle. Seven processing states plus nine terminal
// unavailability variants; the unavailability set is reachable only from
// New (ingestion-time filtering) and has no outgoing edges.
enum class VideoState : std::uint8_t {
  New,
  CreatingVideo,
  VideoCreated,
  UploadStarted,
  UploadSucceeded,
  CreationFailed,
  UploadFailed,
  // Unavailability variants (terminal).
  Deleted,
  Private,
  AgeRestricted,
  MembersOnly,
  LiveOffline,
  DownloadTimedOut,
  EmptyDownload,
  PostprocessingError,
  Skipped,
};

inline constexpr int kVideoStateCount = 16;

const std::array<VideoState, kVideoStateCount>& allVideoStates();

bool isUnavailability(VideoState s);
bool isTerminal(VideoState s);  // UploadSucceeded or any unavailability

// Legal edges:
//   forward: New->CreatingVideo->VideoCreated->UploadStarted->UploadSucceeded
//   failure: CreatingVideo->CreationFailed, UploadStarted->UploadFailed
//   retry:   CreationFailed->CreatingVideo, UploadFailed->UploadStarted
//   filter:  New -> each unavailability variant
// Everything else is rejected.
bool transitionAllowed(VideoState from, VideoState to);

std::string_view toString(VideoState s);
VideoState videoStateFromString(std::string_view s);  // throws ConfigInvalid

// Admission tiers with per-channel replication caps.
enum class Tier : std::uint8_t { Bronze, Silver, Gold, Diamond };

struct TierSpec {
  int videoCap;
  std::int64_t sizeCapBytes;
  int referralCap;
  int priorityBonus;
};

const TierSpec& tierSpec(Tier t);
std::string_view toString(Tier t);
Tier tierFromString(std::string_view s);  // throws ConfigInvalid

// Per-video admission caps, independent of tier.
inline constexpr std::int64_t kMaxVideoDurationS = 10800;
inline constexpr std::int64_t kMaxVideoSizeBytes = 15000ll * 1000 * 1000;

}  // namespace replisim
