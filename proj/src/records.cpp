#include "replisim/records.hpp"

#include <string>

#include "replisim/errors.hpp"

namespace replisim {

std::string_view toString(ChannelStatus s) {
  switch (s) {
    case ChannelStatus::Unverified: return "Unverified";
    case ChannelStatus::Verified: return "Verified";
    case ChannelStatus::Suspended: return "Suspended";
    case ChannelStatus::OptedOut: return "OptedOut";
  }
  return "?";
}

ChannelStatus channelStatusFromString(std::string_view s) {
  if (s == "Unverified") return ChannelStatus::Unverified;
  if (s == "Verified") return ChannelStatus::Verified;
  if (s == "Suspended") return ChannelStatus::Suspended;
  if (s == "OptedOut") return ChannelStatus::OptedOut;
  throw ConfigInvalid("unknown channel status: " + std::string(s));
}

VideoRecord transition(VideoRecord video, VideoState target, VirtualMs now) {
  if (!transitionAllowed(video.state, target)) {
    throw IllegalTransition(std::string("illegal transition ") +
                            std::string(toString(video.state)) + " -> " +
                            std::string(toString(target)) + " for video " +
                            video.id);
  }
  video.history.push_back({now, video.state, target});
  video.state = target;
  return video;
}

}  // namespace replisim
