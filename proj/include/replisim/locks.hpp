#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <string_view>

#include "replisim/clock.hpp"

namespace replisim {

// Serialization domains for durable-store access and shared service
// structures. queueRecalc and queueBatch are both taken (in that order) for
// batch execution so priority recalculation cannot interleave with a batch.
enum class LockDomain : std::uint8_t {
  Channel,
  User,
  Whitelist,
  QueueRecalc,
  QueueBatch,
  ProxyBind,
};

inline constexpr std::size_t kLockDomainCount = 6;
std::string_view toString(LockDomain d);

// Strictly serial FIFO locks. Everything runs on the simulation event loop,
// so a lock only matters when the critical section spans virtual time (batch
// execution, proxy binding); waiters queue in arrival order and are granted
// at the releasing instant.
class LockManager {
 public:
  explicit LockManager(SimClock& clock) : clock_(clock) {}

  class Hold;
  using Holder = std::shared_ptr<Hold>;
  using Grantee = std::function<void(Holder)>;

  class Hold {
   public:
    Hold(LockManager* mgr, LockDomain d) : mgr_(mgr), domain_(d) {}
    void release();
    bool released() const { return mgr_ == nullptr; }
    LockDomain domain() const { return domain_; }

   private:
    LockManager* mgr_;
    LockDomain domain_;
  };

  // Grants immediately (synchronously) when the domain is free, otherwise
  // enqueues FIFO. Throws PendingLimitExceeded when the domain's pending
  // queue is at capacity.
  void acquire(LockDomain d, Grantee fn);

  // Nested ordered acquisition (a, then b while holding a).
  void acquireBoth(LockDomain a, LockDomain b,
                   std::function<void(Holder, Holder)> fn);

  void setMaxPending(LockDomain d, std::size_t n) { slot(d).maxPending = n; }
  bool held(LockDomain d) const { return slot(d).held; }
  std::size_t pending(LockDomain d) const { return slot(d).waiters.size(); }

  // Drops every hold and waiter; crash recovery recreates the in-process
  // lock table from scratch.
  void resetAll();

 private:
  struct Slot {
    bool held = false;
    std::deque<Grantee> waiters;
    std::size_t maxPending = std::numeric_limits<std::size_t>::max();
  };

  friend class Hold;
  void releaseDomain(LockDomain d);
  Slot& slot(LockDomain d) { return slots_[static_cast<std::size_t>(d)]; }
  const Slot& slot(LockDomain d) const {
    return slots_[static_cast<std::size_t>(d)];
  }

  SimClock& clock_;
  std::array<Slot, kLockDomainCount> slots_{};
  std::uint64_t generation_ = 0;
};

}  // namespace replisim
