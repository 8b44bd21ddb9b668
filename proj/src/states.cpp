#include "replisim/states.hpp"

#include <string>

#include "replisim/errors.hpp"

namespace replisim {

const std::array<VideoState, kVideoStateCount>& allVideoStates() {
  static const std::array<VideoState, kVideoStateCount> kAll = {
      VideoState::New,           VideoState::CreatingVideo,
      VideoState::VideoCreated,  VideoState::UploadStarted,
      VideoState::UploadSucceeded, VideoState::CreationFailed,
      VideoState::UploadFailed,  VideoState::Deleted,
      VideoState::Private,       VideoState::AgeRestricted,
      VideoState::MembersOnly,   VideoState::LiveOffline,
      VideoState::DownloadTimedOut, VideoState::EmptyDownload,
      VideoState::PostprocessingError, VideoState::Skipped,
  };
  return kAll;
}

bool isUnavailability(VideoState s) {
  switch (s) {
    case VideoState::Deleted:
    case VideoState::Private:
    case VideoState::AgeRestricted:
    case VideoState::MembersOnly:
    case VideoState::LiveOffline:
    case VideoState::DownloadTimedOut:
    case VideoState::EmptyDownload:
    case VideoState::PostprocessingError:
    case VideoState::Skipped:
      return true;
    default:
      return false;
  }
}

bool isTerminal(VideoState s) {
  return s == VideoState::UploadSucceeded || isUnavailability(s);
}

bool transitionAllowed(VideoState from, VideoState to) {
  if (isUnavailability(to)) return from == VideoState::New;
  switch (from) {
    case VideoState::New:
      return to == VideoState::CreatingVideo;
    case VideoState::CreatingVideo:
      return to == VideoState::VideoCreated || to == VideoState::CreationFailed;
    case VideoState::VideoCreated:
      return to == VideoState::UploadStarted;
    case VideoState::UploadStarted:
      return to == VideoState::UploadSucceeded || to == VideoState::UploadFailed;
    case VideoState::CreationFailed:
      return to == VideoState::CreatingVideo;
    case VideoState::UploadFailed:
      return to == VideoState::UploadStarted;
    case VideoState::UploadSucceeded:
    default:
      return false;
  }
}

std::string_view toString(VideoState s) {
  switch (s) {
    case VideoState::New: return "New";
    case VideoState::CreatingVideo: return "CreatingVideo";
    case VideoState::VideoCreated: return "VideoCreated";
    case VideoState::UploadStarted: return "UploadStarted";
    case VideoState::UploadSucceeded: return "UploadSucceeded";
    case VideoState::CreationFailed: return "CreationFailed";
    case VideoState::UploadFailed: return "UploadFailed";
    case VideoState::Deleted: return "Deleted";
    case VideoState::Private: return "Private";
    case VideoState::AgeRestricted: return "AgeRestricted";
    case VideoState::MembersOnly: return "MembersOnly";
    case VideoState::LiveOffline: return "LiveOffline";
    case VideoState::DownloadTimedOut: return "DownloadTimedOut";
    case VideoState::EmptyDownload: return "EmptyDownload";
    case VideoState::PostprocessingError: return "PostprocessingError";
    case VideoState::Skipped: return "Skipped";
  }
  return "?";
}

VideoState videoStateFromString(std::string_view s) {
  for (VideoState v : allVideoStates()) {
    if (toString(v) == s) return v;
  }
  throw ConfigInvalid("unknown video state: " + std::string(s));
}

const TierSpec& tierSpec(Tier t) {
  static const TierSpec kBronze{5, 1ll * 1000 * 1000 * 1000, 2, 0};
  static const TierSpec kSilver{100, 10ll * 1000 * 1000 * 1000, 25, 20};
  static const TierSpec kGold{250, 100ll * 1000 * 1000 * 1000, 50, 20};
  static const TierSpec kDiamond{1000, 1000ll * 1000 * 1000 * 1000, 100, 20};
  switch (t) {
    case Tier::Bronze: return kBronze;
    case Tier::Silver: return kSilver;
    case Tier::Gold: return kGold;
    case Tier::Diamond: return kDiamond;
  }
  return kBronze;
}

std::string_view toString(Tier t) {
  switch (t) {
    case Tier::Bronze: return "Bronze";
    case Tier::Silver: return "Silver";
    case Tier::Gold: return "Gold";
    case Tier::Diamond: return "Diamond";
  }
  return "?";
}

Tier tierFromString(std::string_view s) {
  if (s == "Bronze") return Tier::Bronze;
  if (s == "Silver") return Tier::Silver;
  if (s == "Gold") return Tier::Gold;
  if (s == "Diamond") return Tier::Diamond;
  throw ConfigInvalid("unknown tier: " + std::string(s));
}

}  // namespace replisim
