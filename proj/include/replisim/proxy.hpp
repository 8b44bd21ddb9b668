#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "replisim/clock.hpp"
#include "replisim/rng.hpp"
#include "replisim/time.hpp"

namespace replisim {

enum class ProxyGeneration : std::uint8_t {
  Direct = 0,  // no proxy; one shared egress identity
  Tunnel = 1,  // single rotating tunnel; rotation = outage + fresh identity
  Pool = 2,    // exclusive-binding pool with faulty TTL
};

// Randomized pacing applied before each outbound request of a download.
struct SleepPolicy {
  VirtualMs minMs = 0;
  VirtualMs maxMs = 30000;
  int applicationsPerVideo = 3;
};

// One uniform draw in [minMs, maxMs].
VirtualMs preDownloadSleep(const SleepPolicy& p, SeededRng& rng);

struct ProxyPoolConfig {
  ProxyGeneration generation = ProxyGeneration::Pool;
  std::vector<std::string> endpoints;  // Pool generation only
  VirtualMs faultyTtlMs = secondsMs(14400);
  VirtualMs spinWaitIntervalMs = secondsMs(30);
  VirtualMs tunnelRotationOutageMs = secondsMs(60);
  // Pending bind requests beyond endpoints*10 are rejected.
  int maxPendingPerEndpoint = 10;
};

// Egress endpoint manager. Bindings are exclusive; a faulty report excludes
// the endpoint for exactly faultyTtlMs (re-reports refresh the window). When
// nothing is eligible, bind requests queue FIFO and are re-checked every
// spinWaitIntervalMs, so a recovering endpoint always reaches the oldest
// waiter first.
class ProxyPool {
 public:
  ProxyPool(SimClock& clock, const EventScope& scope, SeededRng rng,
            ProxyPoolConfig cfg);

  // Grants an endpoint now when possible (callback runs synchronously),
  // otherwise queues. Throws PendingLimitExceeded when the waiter queue is
  // at endpoints*maxPendingPerEndpoint.
  void bindAsync(std::function<void(const std::string&)> cb);

  // Non-queueing probe.
  std::optional<std::string> tryBindNow();

  // No-op for endpoints that are not currently bound.
  void release(const std::string& endpoint);

  // Excludes the endpoint and unbinds it. Tunnel generation instead retires
  // the identity and brings up a replacement after the rotation outage.
  // Throws UnknownEndpoint for identities the pool has never owned or has
  // retired.
  void reportFaulty(const std::string& endpoint);

  bool eligible(const std::string& endpoint) const;
  std::size_t eligibleCount() const;
  std::size_t boundCount() const { return bound_.size(); }
  std::size_t faultyCount() const;
  std::size_t waiterCount() const { return waiters_.size(); }
  const std::vector<std::string>& endpoints() const { return endpoints_; }

  // Serves queued waiters from whatever became eligible; called internally
  // on release/report/spin ticks.
  void serveWaiters();

 private:
  void scheduleSpinTick();
  std::optional<std::string> pickEligibleUnbound();

  SimClock& clock_;
  const EventScope& scope_;
  SeededRng rng_;
  ProxyPoolConfig cfg_;
  std::vector<std::string> endpoints_;
  std::set<std::string> known_;  // live identities; tunnel retirement removes
  std::set<std::string> bound_;
  std::map<std::string, VirtualMs> faultyUntil_;
  std::deque<std::function<void(const std::string&)>> waiters_;
  bool spinTickScheduled_ = false;
  int tunnelCounter_ = 1;
};

}  // namespace replisim
