#include "replisim/scheduler.hpp"

#include <algorithm>

#include "replisim/errors.hpp"
#include "replisim/jobqueue.hpp"
#include "replisim/store.hpp"

namespace replisim {
namespace {

// floor(a / b) for b > 0, rounding toward negative infinity.
__int128 floorDiv(__int128 a, __int128 b) {
  __int128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::int64_t computePriority(const PriorityInputs& in,
                             const PriorityConstants& c) {
  const std::int64_t backlog =
      std::clamp<std::int64_t>(in.backlogPct, 0, 100);
  std::int64_t sudo = c.baseSudo;
  if (in.isNew && in.durationS > c.freshDurationThresholdS) sudo += c.freshBonus;
  if (in.tier != Tier::Bronze) sudo += c.tierBonus;

  const std::int64_t recency =
      (in.publishedAtS - c.recencyEpochS) / c.recencyScale;
  const __int128 score = static_cast<__int128>(backlog) * c.backlogWeight +
                         static_cast<__int128>(sudo) * c.sudoWeight + recency;
  const __int128 scaled =
      floorDiv(score * static_cast<__int128>(c.maxPriority), c.maxScore);
  const __int128 p = static_cast<__int128>(c.maxPriority) - scaled;
  if (p < 0) return 0;
  return static_cast<std::int64_t>(p);
}

int recalculateChannelPriorities(JobQueue& queue, const DurableStore& store,
                                 const std::string& channelId,
                                 const PriorityConstants& c) {
  const auto ch = store.channelById(channelId);
  if (!ch) throw UnknownChannel("recalc: unknown channel " + channelId);
  return queue.updateQueuedPriorities(
      channelId, [&](const std::string& videoId) -> std::int64_t {
        const auto v = store.getVideo(channelId, videoId);
        if (!v) return 0;
        PriorityInputs in;
        in.publishedAtS = v->publishedAtS;
        in.durationS = v->durationS;
        in.isNew = v->isNew;
        in.tier = ch->tier;
        in.backlogPct = ch->backlogPct;
        return computePriority(in, c);
      });
}

}  // namespace replisim
