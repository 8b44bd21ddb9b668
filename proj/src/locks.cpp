#include "replisim/locks.hpp"

#include "replisim/errors.hpp"

namespace replisim {

std::string_view toString(LockDomain d) {
  switch (d) {
    case LockDomain::Channel: return "channel";
    case LockDomain::User: return "user";
    case LockDomain::Whitelist: return "whitelist";
    case LockDomain::QueueRecalc: return "queueRecalc";
    case LockDomain::QueueBatch: return "queueBatch";
    case LockDomain::ProxyBind: return "proxyBind";
  }
  return "?";
}

void LockManager::Hold::release() {
  if (!mgr_) return;
  auto* mgr = mgr_;
  mgr_ = nullptr;
  mgr->releaseDomain(domain_);
}

void LockManager::acquire(LockDomain d, Grantee fn) {
  Slot& s = slot(d);
  if (!s.held) {
    s.held = true;
    fn(std::make_shared<Hold>(this, d));
    return;
  }
  if (s.waiters.size() >= s.maxPending) {
    throw PendingLimitExceeded(std::string("lock ") + std::string(toString(d)) +
                               " pending limit reached");
  }
  s.waiters.push_back(std::move(fn));
}

void LockManager::acquireBoth(LockDomain a, LockDomain b,
                              std::function<void(Holder, Holder)> fn) {
  acquire(a, [this, b, fn = std::move(fn)](Holder ha) {
    acquire(b, [ha, fn](Holder hb) { fn(ha, hb); });
  });
}

void LockManager::releaseDomain(LockDomain d) {
  Slot& s = slot(d);
  if (s.waiters.empty()) {
    s.held = false;
    return;
  }
  // Hand over at the current instant; the domain stays held so arrivals
  // between release and grant keep queueing behind the FIFO.
  Grantee next = std::move(s.waiters.front());
  s.waiters.pop_front();
  const std::uint64_t gen = generation_;
  clock_.scheduleAfter(0, [this, d, gen, next = std::move(next)] {
    if (gen != generation_) return;
    next(std::make_shared<Hold>(this, d));
  });
}

void LockManager::resetAll() {
  ++generation_;
  for (auto& s : slots_) {
    s.held = false;
    s.waiters.clear();
  }
}

}  // namespace replisim
