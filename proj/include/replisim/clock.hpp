#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "replisim/time.hpp"

namespace replisim {

struct DispatchedEvent {
  VirtualMs at = 0;
  std::uint64_t id = 0;
};

// Deterministic discrete-event clock. Events fire in (time, insertion)
// order; equal-time events dispatch FIFO. Dispatching an event may schedule
// further events, including at the current instant.
class SimClock {
 public:
  using Callback = std::function<void()>;

  VirtualMs now() const { return now_; }

  // pre: at >= now. Returns the event id (usable with cancel()).
  std::uint64_t scheduleAt(VirtualMs at, Callback cb);
  std::uint64_t scheduleAfter(VirtualMs delay, Callback cb);

  // Cancelling an unknown or already-dispatched id is a no-op.
  void cancel(std::uint64_t id);

  // Dispatches every event with time <= to, then sets now = to.
  // Returns the dispatched events in dispatch order.
  std::vector<DispatchedEvent> advanceTo(VirtualMs to);

  // Dispatches the single earliest pending event, if any.
  bool step();

  // Runs until no events remain or the optional cap is reached.
  std::size_t runUntilIdle(std::optional<VirtualMs> cap = std::nullopt);

  bool hasPending() const { return !pending_.empty(); }
  std::size_t pendingCount() const { return pending_.size(); }
  std::uint64_t dispatchCount() const { return dispatched_; }

  // Invoked after every dispatch; used by the crash-sweep harness to inject
  // a fault at an exact event boundary.
  void setAfterDispatchHook(std::function<void(std::uint64_t)> hook) {
    afterDispatch_ = std::move(hook);
  }

 private:
  void dispatchFront();

  VirtualMs now_ = 0;
  std::uint64_t nextId_ = 1;
  std::uint64_t dispatched_ = 0;
  // Keyed by (time, id): map iteration order is the dispatch order.
  std::map<std::pair<VirtualMs, std::uint64_t>, Callback> pending_;
  std::unordered_map<std::uint64_t, VirtualMs> idToTime_;
  std::function<void(std::uint64_t)> afterDispatch_;
  std::vector<DispatchedEvent>* sink_ = nullptr;
};

// Ownership tag for scheduled work. Callbacks wrapped by a scope become
// no-ops once the scope is reset; the crash path resets the service scope so
// in-flight service continuations die while world events keep running.
class EventScope {
 public:
  EventScope() : token_(std::make_shared<int>(0)) {}

  void reset() { token_ = std::make_shared<int>(0); }

  SimClock::Callback wrap(SimClock::Callback cb) const {
    return [tok = std::weak_ptr<int>(token_), cb = std::move(cb)] {
      if (tok.lock()) cb();
    };
  }

  bool alive(const std::weak_ptr<int>& tok) const {
    return tok.lock() == token_;
  }
  std::weak_ptr<int> token() const { return token_; }

 private:
  std::shared_ptr<int> token_;
};

}  // namespace replisim
