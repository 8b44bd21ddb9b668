#include "replisim/proxy.hpp"

#include <algorithm>

#include "replisim/errors.hpp"

namespace replisim {

VirtualMs preDownloadSleep(const SleepPolicy& p, SeededRng& rng) {
  return rng.uniformInt(p.minMs, p.maxMs);
}

ProxyPool::ProxyPool(SimClock& clock, const EventScope& scope, SeededRng rng,
                     ProxyPoolConfig cfg)
    : clock_(clock), scope_(scope), rng_(std::move(rng)), cfg_(std::move(cfg)) {
  switch (cfg_.generation) {
    case ProxyGeneration::Direct:
      endpoints_ = {"direct"};
      break;
    case ProxyGeneration::Tunnel:
      endpoints_ = {"tunnel-1"};
      break;
    case ProxyGeneration::Pool:
      if (cfg_.endpoints.empty()) {
        throw ConfigInvalid("proxy pool generation requires endpoints");
      }
      endpoints_ = cfg_.endpoints;
      break;
  }
  known_.insert(endpoints_.begin(), endpoints_.end());
}

bool ProxyPool::eligible(const std::string& endpoint) const {
  if (!known_.count(endpoint)) return false;
  auto it = faultyUntil_.find(endpoint);
  // A reported endpoint is ineligible until the TTL instant and eligible
  // exactly at it.
  return it == faultyUntil_.end() || clock_.now() >= it->second;
}

std::size_t ProxyPool::eligibleCount() const {
  std::size_t n = 0;
  for (const auto& e : endpoints_) {
    if (eligible(e)) ++n;
  }
  return n;
}

std::size_t ProxyPool::faultyCount() const {
  std::size_t n = 0;
  for (const auto& e : endpoints_) {
    if (!eligible(e)) ++n;
  }
  return n;
}

std::optional<std::string> ProxyPool::pickEligibleUnbound() {
  // Direct egress has no per-connection exclusivity; tunnel and pool
  // endpoints serve one binding at a time.
  const bool exclusive = cfg_.generation != ProxyGeneration::Direct;
  std::vector<const std::string*> candidates;
  for (const auto& e : endpoints_) {
    if ((!exclusive || !bound_.count(e)) && eligible(e)) candidates.push_back(&e);
  }
  if (candidates.empty()) return std::nullopt;
  return *candidates[rng_.index(candidates.size())];
}

void ProxyPool::bindAsync(std::function<void(const std::string&)> cb) {
  if (waiters_.empty()) {
    if (auto ep = pickEligibleUnbound()) {
      if (cfg_.generation != ProxyGeneration::Direct) bound_.insert(*ep);
      cb(*ep);
      return;
    }
  }
  const std::size_t cap =
      endpoints_.size() * static_cast<std::size_t>(cfg_.maxPendingPerEndpoint);
  if (waiters_.size() >= cap) {
    throw PendingLimitExceeded("proxy bind queue full");
  }
  waiters_.push_back(std::move(cb));
  scheduleSpinTick();
}

std::optional<std::string> ProxyPool::tryBindNow() {
  if (!waiters_.empty()) return std::nullopt;
  auto ep = pickEligibleUnbound();
  if (ep && cfg_.generation != ProxyGeneration::Direct) bound_.insert(*ep);
  return ep;
}

void ProxyPool::release(const std::string& endpoint) {
  if (!bound_.erase(endpoint)) return;
  serveWaiters();
}

void ProxyPool::reportFaulty(const std::string& endpoint) {
  if (!known_.count(endpoint)) {
    throw UnknownEndpoint("unknown proxy endpoint: " + endpoint);
  }
  bound_.erase(endpoint);
  if (cfg_.generation == ProxyGeneration::Tunnel) {
    // Rotation: the identity is retired and a fresh one appears after the
    // restart outage. Detector state keyed by identity starts clean.
    known_.erase(endpoint);
    faultyUntil_.erase(endpoint);
    endpoints_.erase(
        std::remove(endpoints_.begin(), endpoints_.end(), endpoint),
        endpoints_.end());
    const std::string fresh = "tunnel-" + std::to_string(++tunnelCounter_);
    endpoints_.push_back(fresh);
    known_.insert(fresh);
    faultyUntil_[fresh] = clock_.now() + cfg_.tunnelRotationOutageMs;
  } else {
    faultyUntil_[endpoint] = clock_.now() + cfg_.faultyTtlMs;
  }
  scheduleSpinTick();
}

void ProxyPool::serveWaiters() {
  while (!waiters_.empty()) {
    auto ep = pickEligibleUnbound();
    if (!ep) break;
    auto cb = std::move(waiters_.front());
    waiters_.pop_front();
    if (cfg_.generation != ProxyGeneration::Direct) bound_.insert(*ep);
    cb(*ep);
  }
  if (!waiters_.empty()) scheduleSpinTick();
}

void ProxyPool::scheduleSpinTick() {
  if (spinTickScheduled_ || waiters_.empty()) return;
  spinTickScheduled_ = true;
  clock_.scheduleAfter(cfg_.spinWaitIntervalMs, scope_.wrap([this] {
    spinTickScheduled_ = false;
    serveWaiters();
  }));
}

}  // namespace replisim
