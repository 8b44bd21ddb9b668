#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "replisim/clock.hpp"
#include "replisim/errors.hpp"
#include "replisim/proxy.hpp"
#include "replisim/rng.hpp"
#include "replisim/time.hpp"

using namespace replisim;

namespace {

ProxyPoolConfig poolOf(std::vector<std::string> endpoints) {
  ProxyPoolConfig cfg;
  cfg.generation = ProxyGeneration::Pool;
  cfg.endpoints = std::move(endpoints);
  return cfg;
}

}  // namespace

TEST_CASE("direct egress hands out one shared identity without exclusivity") {
  SimClock clock;
  EventScope scope;
  ProxyPoolConfig cfg;
  cfg.generation = ProxyGeneration::Direct;
  ProxyPool pool(clock, scope, SeededRng(1), cfg);

  std::vector<std::string> got;
  pool.bindAsync([&](const std::string& ep) { got.push_back(ep); });
  pool.bindAsync([&](const std::string& ep) { got.push_back(ep); });
  REQUIRE(got.size() == 2);
  CHECK(got[0] == "direct");
  CHECK(got[1] == "direct");
  CHECK(pool.boundCount() == 0);

  // A faulty report still excludes the shared identity for the TTL.
  pool.reportFaulty("direct");
  CHECK(!pool.eligible("direct"));
  CHECK(!pool.tryBindNow());
  clock.advanceTo(cfg.faultyTtlMs);
  CHECK(pool.eligible("direct"));
  CHECK(pool.tryBindNow() == std::optional<std::string>("direct"));
}

TEST_CASE("tunnel rotation retires the identity and restarts after an outage") {
  SimClock clock;
  EventScope scope;
  ProxyPoolConfig cfg;
  cfg.generation = ProxyGeneration::Tunnel;
  ProxyPool pool(clock, scope, SeededRng(2), cfg);

  std::optional<std::string> first;
  pool.bindAsync([&](const std::string& ep) { first = ep; });
  REQUIRE(first.has_value());
  CHECK(*first == "tunnel-1");
  CHECK(pool.boundCount() == 1);

  std::optional<std::string> second;
  VirtualMs grantedAt = -1;
  pool.bindAsync([&](const std::string& ep) {
    second = ep;
    grantedAt = clock.now();
  });
  CHECK(!second.has_value());

  pool.reportFaulty("tunnel-1");
  // The retired identity is gone for good; reporting it again is an error.
  CHECK_THROWS_AS(pool.reportFaulty("tunnel-1"), UnknownEndpoint);
  CHECK(!pool.eligible("tunnel-1"));
  CHECK(pool.eligibleCount() == 0);
  CHECK(pool.boundCount() == 0);

  // The replacement comes up after the rotation outage; the spin wait ticks
  // every 30s so the queued bind lands on the first tick at or after 60s.
  clock.advanceTo(secondsMs(59));
  CHECK(!second.has_value());
  clock.advanceTo(secondsMs(61));
  REQUIRE(second.has_value());
  CHECK(*second == "tunnel-2");
  CHECK(grantedAt == secondsMs(60));
}

TEST_CASE("faulty exclusion lasts exactly the TTL and re-reports refresh it") {
  SimClock clock;
  EventScope scope;
  ProxyPool pool(clock, scope, SeededRng(3), poolOf({"p-1", "p-2"}));

  clock.advanceTo(1000);
  pool.reportFaulty("p-1");
  CHECK(!pool.eligible("p-1"));
  CHECK(pool.faultyCount() == 1);
  CHECK(pool.eligibleCount() == 1);

  clock.advanceTo(1000 + secondsMs(14400) - 1);
  CHECK(!pool.eligible("p-1"));
  clock.advanceTo(1000 + secondsMs(14400));
  CHECK(pool.eligible("p-1"));

  // A re-report inside the window restarts the clock from the report instant.
  clock.advanceTo(secondsMs(20000));
  pool.reportFaulty("p-1");
  clock.advanceTo(secondsMs(20000) + secondsMs(10000));
  pool.reportFaulty("p-1");
  clock.advanceTo(secondsMs(20000) + secondsMs(14400) + 1);
  CHECK(!pool.eligible("p-1"));
  clock.advanceTo(secondsMs(30000) + secondsMs(14400));
  CHECK(pool.eligible("p-1"));

  CHECK_THROWS_AS(pool.reportFaulty("p-9"), UnknownEndpoint);
}

TEST_CASE("bindings are exclusive and grants only touch eligible endpoints") {
  SimClock clock;
  EventScope scope;
  const std::vector<std::string> eps{"p-1", "p-2", "p-3", "p-4", "p-5"};
  ProxyPool pool(clock, scope, SeededRng(4), poolOf(eps));
  SeededRng driver(99);

  std::set<std::string> held;
  std::map<std::string, VirtualMs> faultyUntil;
  long grants = 0;

  for (int step = 0; step < 4000; ++step) {
    switch (driver.index(4)) {
      case 0: {
        if (pool.waiterCount() > 40) break;
        pool.bindAsync([&](const std::string& ep) {
          CHECK(held.insert(ep).second);  // never granted while held
          CHECK(clock.now() >= faultyUntil[ep]);
          ++grants;
        });
        break;
      }
      case 1: {
        if (held.empty()) break;
        auto it = held.begin();
        std::advance(it, driver.index(held.size()));
        const std::string ep = *it;
        held.erase(it);
        pool.release(ep);
        break;
      }
      case 2: {
        const std::string ep = eps[driver.index(eps.size())];
        pool.reportFaulty(ep);
        faultyUntil[ep] = clock.now() + secondsMs(14400);
        held.erase(ep);  // a faulty report force-unbinds
        break;
      }
      case 3:
        clock.advanceTo(clock.now() + driver.uniformInt(1, secondsMs(3600)));
        break;
    }
    CHECK(pool.boundCount() == held.size());
  }
  CHECK(grants > 500);
}

TEST_CASE("a recovering endpoint reaches the oldest waiter first") {
  SimClock clock;
  EventScope scope;
  ProxyPool pool(clock, scope, SeededRng(5), poolOf({"p-1", "p-2"}));

  pool.reportFaulty("p-1");
  clock.advanceTo(secondsMs(600));
  pool.reportFaulty("p-2");

  std::vector<int> served;
  std::vector<VirtualMs> servedAt;
  for (int i = 0; i < 3; ++i) {
    pool.bindAsync([&, i](const std::string& ep) {
      served.push_back(i);
      servedAt.push_back(clock.now());
      // Hold the endpoint; later waiters need the other recovery.
      CHECK(!ep.empty());
    });
  }
  CHECK(pool.waiterCount() == 3);

  // p-1 recovers at 14400s; the spin wait ticks lag recovery by under 30s.
  clock.advanceTo(secondsMs(14400) + secondsMs(30));
  REQUIRE(served.size() == 1);
  CHECK(served[0] == 0);
  CHECK(servedAt[0] >= secondsMs(14400));
  CHECK(servedAt[0] <= secondsMs(14400) + secondsMs(30));

  // p-2 recovers at 15000s and reaches waiter 1; waiter 2 stays queued until
  // a release.
  clock.advanceTo(secondsMs(15000) + secondsMs(30));
  REQUIRE(served.size() == 2);
  CHECK(served[1] == 1);
  CHECK(pool.waiterCount() == 1);

  pool.release("p-1");
  REQUIRE(served.size() == 3);
  CHECK(served[2] == 2);
}

TEST_CASE("the bind queue rejects waiters past endpoints times ten") {
  SimClock clock;
  EventScope scope;
  ProxyPool pool(clock, scope, SeededRng(6), poolOf({"p-1", "p-2"}));

  std::vector<std::string> granted;
  pool.bindAsync([&](const std::string& ep) { granted.push_back(ep); });
  pool.bindAsync([&](const std::string& ep) { granted.push_back(ep); });
  REQUIRE(granted.size() == 2);

  for (int i = 0; i < 20; ++i) {
    pool.bindAsync([](const std::string&) {});
  }
  CHECK(pool.waiterCount() == 20);
  CHECK_THROWS_AS(pool.bindAsync([](const std::string&) {}), PendingLimitExceeded);
  CHECK(pool.waiterCount() == 20);
}

TEST_CASE("new binds queue behind existing waiters") {
  SimClock clock;
  EventScope scope;
  ProxyPool pool(clock, scope, SeededRng(7), poolOf({"p-1"}));

  std::string holder;
  pool.bindAsync([&](const std::string& ep) { holder = ep; });
  REQUIRE(holder == "p-1");

  std::vector<int> order;
  pool.bindAsync([&](const std::string&) { order.push_back(1); });
  pool.release("p-1");
  // Release served waiter 1 synchronously; the endpoint is held again, and a
  // fresh bind may not jump past an empty moment in the queue.
  REQUIRE(order == std::vector<int>{1});
  pool.bindAsync([&](const std::string&) { order.push_back(2); });
  CHECK(!pool.tryBindNow().has_value());
  pool.release("p-1");
  CHECK(order == std::vector<int>{1, 2});
}

TEST_CASE("spin ticks die with their scope") {
  SimClock clock;
  EventScope scope;
  ProxyPool pool(clock, scope, SeededRng(8), poolOf({"p-1"}));
  pool.reportFaulty("p-1");

  bool servedByTick = false;
  pool.bindAsync([&](const std::string&) { servedByTick = true; });
  scope.reset();
  clock.advanceTo(secondsMs(14400) + secondsMs(120));
  CHECK(!servedByTick);
  CHECK(pool.waiterCount() == 1);

  // The waiter itself survives; an explicit serve still reaches it.
  pool.serveWaiters();
  CHECK(servedByTick);
}

TEST_CASE("pre-download pacing draws stay in range with the configured mean") {
  SleepPolicy policy;  // 0..30000, three applications per video
  SeededRng rng(9);
  const int draws = 10000;
  long double sum = 0;
  for (int i = 0; i < draws; ++i) {
    const VirtualMs d = preDownloadSleep(policy, rng);
    REQUIRE(d >= policy.minMs);
    REQUIRE(d <= policy.maxMs);
    sum += static_cast<long double>(d);
  }
  const double mean = static_cast<double>(sum / draws);
  CHECK(mean > 15000.0 * 0.98);
  CHECK(mean < 15000.0 * 1.02);
  CHECK(policy.applicationsPerVideo * policy.maxMs == 90000);
}
