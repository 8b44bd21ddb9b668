#pragma once

#include <cstdint>
#include <string>

#include "replisim/states.hpp"

namespace replisim {

class JobQueue;
class DurableStore;

struct PriorityInputs {
  std::int64_t publishedAtS = 0;  // source-platform epoch seconds
  std::int64_t durationS = 0;
  bool isNew = false;
  Tier tier = Tier::Bronze;
  int backlogPct = 0;  // clamped to [0,100]
};

struct PriorityConstants {
  std::int64_t baseSudo = 10;
  std::int64_t freshBonus = 20;
  std::int64_t freshDurationThresholdS = 300;
  std::int64_t tierBonus = 20;  // any tier above Bronze
  std::int64_t recencyEpochS = 946684800;  // 2000-01-01T00:00:00Z
  std::int64_t backlogWeight = 1000;
  std::int64_t sudoWeight = 2000;
  // 100 * sudoWeight + backlogWeight + 100, kept exactly as deployed even
  // though the backlog term can reach backlogWeight * 100.
  std::int64_t maxScore = 201100;
  std::int64_t maxPriority = 2097152;  // queue backend ceiling, 2^21
  // Divides recency before it enters the score. 1 reproduces the deployed
  // behavior (modern publish dates saturate every priority to 0); larger
  // values let scenarios exercise the ordered regime.
  std::int64_t recencyScale = 1;
};

// Lower value = higher priority. Exact integer arithmetic throughout;
// the only clamp is max(0, .) at the end.
std::int64_t computePriority(const PriorityInputs& in,
                             const PriorityConstants& c = {});

// Recomputes the priority of every queued (not in-flight) job belonging to
// the channel from its current tier/backlog/freshness. Returns the number of
// jobs updated.
int recalculateChannelPriorities(JobQueue& queue, const DurableStore& store,
                                 const std::string& channelId,
                                 const PriorityConstants& c = {});

}  // namespace replisim
