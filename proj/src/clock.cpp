#include "replisim/clock.hpp"

#include <cassert>
#include <utility>

namespace replisim {

std::uint64_t SimClock::scheduleAt(VirtualMs at, Callback cb) {
  assert(at >= now_ && "scheduling into the past");
  if (at < now_) at = now_;
  const std::uint64_t id = nextId_++;
  pending_.emplace(std::make_pair(at, id), std::move(cb));
  idToTime_.emplace(id, at);
  return id;
}

std::uint64_t SimClock::scheduleAfter(VirtualMs delay, Callback cb) {
  return scheduleAt(now_ + delay, std::move(cb));
}

void SimClock::cancel(std::uint64_t id) {
  auto it = idToTime_.find(id);
  if (it == idToTime_.end()) return;
  pending_.erase(std::make_pair(it->second, id));
  idToTime_.erase(it);
}

void SimClock::dispatchFront() {
  auto it = pending_.begin();
  const auto key = it->first;
  Callback cb = std::move(it->second);
  pending_.erase(it);
  idToTime_.erase(key.second);
  now_ = key.first;
  ++dispatched_;
  if (sink_) sink_->push_back({key.first, key.second});
  cb();
  if (afterDispatch_) afterDispatch_(dispatched_);
}

std::vector<DispatchedEvent> SimClock::advanceTo(VirtualMs to) {
  std::vector<DispatchedEvent> out;
  auto* prev = sink_;
  sink_ = &out;
  while (!pending_.empty() && pending_.begin()->first.first <= to) {
    dispatchFront();
  }
  sink_ = prev;
  if (now_ < to) now_ = to;
  return out;
}

bool SimClock::step() {
  if (pending_.empty()) return false;
  dispatchFront();
  return true;
}

std::size_t SimClock::runUntilIdle(std::optional<VirtualMs> cap) {
  std::size_t n = 0;
  while (!pending_.empty()) {
    if (cap && pending_.begin()->first.first > *cap) break;
    dispatchFront();
    ++n;
  }
  if (cap && now_ < *cap) now_ = *cap;
  return n;
}

}  // namespace replisim
