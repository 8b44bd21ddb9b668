#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include "replisim/errors.hpp"
#include "replisim/jobqueue.hpp"
#include "replisim/records.hpp"
#include "replisim/rng.hpp"
#include "replisim/scheduler.hpp"
#include "replisim/store.hpp"

using namespace replisim;
using boost::multiprecision::cpp_int;

namespace {

// Independent arithmetic path: arbitrary-precision integers instead of
// __int128, with the two division flavors spelled out. Any divergence from
// computePriority is a defect in one of the two.
std::int64_t oraclePriority(int backlogPct, bool isNew, std::int64_t durationS,
                            Tier tier, std::int64_t publishedAtS,
                            std::int64_t recencyScale) {
  const cpp_int backlog = std::clamp(backlogPct, 0, 100);
  cpp_int sudo = 10;
  if (isNew && durationS > 300) sudo += 20;
  if (tier != Tier::Bronze) sudo += 20;

  // Truncating division, as written in the service.
  const cpp_int recency =
      cpp_int(publishedAtS - 946684800) / cpp_int(recencyScale);

  const cpp_int score = backlog * 1000 + sudo * 2000 + recency;
  // Flooring division for the scale step.
  cpp_int scaled = score * 2097152 / 201100;
  if (score * 2097152 % 201100 != 0 && score < 0) scaled -= 1;

  cpp_int p = cpp_int(2097152) - scaled;
  if (p < 0) return 0;
  return static_cast<std::int64_t>(p);
}

PriorityInputs inputs(int backlogPct, bool isNew, std::int64_t durationS,
                      Tier tier, std::int64_t publishedAtS) {
  PriorityInputs in;
  in.backlogPct = backlogPct;
  in.isNew = isNew;
  in.durationS = durationS;
  in.tier = tier;
  in.publishedAtS = publishedAtS;
  return in;
}

PriorityConstants scaled(std::int64_t recencyScale) {
  PriorityConstants c;
  c.recencyScale = recencyScale;
  return c;
}

}  // namespace

TEST_CASE("frozen anchor values") {
  CHECK(computePriority(inputs(37, true, 845, Tier::Gold, 1700000000),
                        scaled(1000000)) == 660609);
  CHECK(computePriority(inputs(0, false, 60, Tier::Bronze, 1500000000),
                        scaled(3600)) == 285760);
  CHECK(computePriority(inputs(0, false, 60, Tier::Bronze, 1700000000),
                        scaled(1)) == 0);
  CHECK(computePriority(inputs(0, false, 60, Tier::Bronze, 946684800),
                        scaled(1)) == 1888584);
  CHECK(computePriority(inputs(100, false, 60, Tier::Silver, 900000000),
                        scaled(60)) == 8542740);
}

TEST_CASE("implementation matches the big-integer oracle on 10^4 inputs") {
  SeededRng rng(20240817);
  const Tier tiers[] = {Tier::Bronze, Tier::Silver, Tier::Gold, Tier::Diamond};
  const std::int64_t scales[] = {1, 60, 3600, 86400, 1000000};
  for (int i = 0; i < 10000; ++i) {
    const int backlog = static_cast<int>(rng.uniformInt(-20, 150));
    const bool isNew = rng.chance(0.5);
    const std::int64_t dur = rng.uniformInt(0, 20000);
    const Tier tier = tiers[rng.index(4)];
    const std::int64_t published = rng.uniformInt(900000000, 1750000000);
    const std::int64_t scale = scales[rng.index(5)];

    const auto got =
        computePriority(inputs(backlog, isNew, dur, tier, published),
                        scaled(scale));
    const auto want = oraclePriority(backlog, isNew, dur, tier, published, scale);
    REQUIRE_MESSAGE(got == want, "backlog=", backlog, " isNew=", isNew,
                    " dur=", dur, " tier=", toString(tier),
                    " published=", published, " scale=", scale);
  }
}

TEST_CASE("property: larger backlog never lowers priority") {
  SeededRng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const bool isNew = rng.chance(0.5);
    const std::int64_t dur = rng.uniformInt(0, 10000);
    const Tier tier = rng.chance(0.5) ? Tier::Bronze : Tier::Gold;
    const std::int64_t published = rng.uniformInt(946684800, 1750000000);
    const int b1 = static_cast<int>(rng.uniformInt(0, 99));
    const int b2 = static_cast<int>(rng.uniformInt(b1 + 1, 100));
    const auto c = scaled(1000000);
    CHECK(computePriority(inputs(b2, isNew, dur, tier, published), c) <=
          computePriority(inputs(b1, isNew, dur, tier, published), c));
  }
}

TEST_CASE("property: a later publish date never lowers priority") {
  SeededRng rng(12);
  for (int i = 0; i < 2000; ++i) {
    const int backlog = static_cast<int>(rng.uniformInt(0, 100));
    const std::int64_t p1 = rng.uniformInt(946684800, 1749999999);
    const std::int64_t p2 = rng.uniformInt(p1 + 1, 1750000000);
    const auto c = scaled(3600);
    CHECK(computePriority(inputs(backlog, false, 60, Tier::Bronze, p2), c) <=
          computePriority(inputs(backlog, false, 60, Tier::Bronze, p1), c));
  }
}

TEST_CASE("property: tier above Bronze and fresh long uploads never lower priority") {
  SeededRng rng(13);
  for (int i = 0; i < 2000; ++i) {
    const int backlog = static_cast<int>(rng.uniformInt(0, 100));
    const std::int64_t published = rng.uniformInt(946684800, 1750000000);
    const std::int64_t dur = rng.uniformInt(0, 10000);
    const auto c = scaled(1000000);
    const auto bronze =
        computePriority(inputs(backlog, false, dur, Tier::Bronze, published), c);
    for (Tier t : {Tier::Silver, Tier::Gold, Tier::Diamond}) {
      CHECK(computePriority(inputs(backlog, false, dur, t, published), c) <=
            bronze);
    }
    if (dur > 300) {
      CHECK(computePriority(inputs(backlog, true, dur, Tier::Bronze, published),
                            c) <= bronze);
    } else {
      CHECK(computePriority(inputs(backlog, true, dur, Tier::Bronze, published),
                            c) == bronze);
    }
  }
}

TEST_CASE("modern publish dates saturate every priority to zero at scale 1") {
  const auto c = scaled(1);
  for (std::int64_t published : {1000000000ll, 1400000000ll, 1700000000ll}) {
    for (int backlog : {0, 50, 100}) {
      CHECK(computePriority(inputs(backlog, true, 600, Tier::Diamond, published),
                            c) == 0);
    }
  }
}

TEST_CASE("recalculation updates queued jobs only, from current channel state") {
  DurableStore store;
  ChannelRecord ch;
  ch.id = "ch-1";
  ch.userId = "u-1";
  ch.tier = Tier::Bronze;
  ch.backlogPct = 0;
  ch.status = ChannelStatus::Verified;
  store.putChannel(ch);

  VideoRecord v1;
  v1.id = "v-1";
  v1.channelId = "ch-1";
  v1.publishedAtS = 1500000000;
  store.putVideo(v1);
  VideoRecord v2 = v1;
  v2.id = "v-2";
  store.putVideo(v2);

  PriorityConstants c = scaled(3600);
  JobQueue q;
  q.enqueueFlow("v-1", "ch-1", 999, Stage::Download);
  q.enqueueFlow("v-2", "ch-1", 999, Stage::Download);

  // v-1 is mid-flight: recalculation must not touch it.
  const auto active = q.takeNextReady(Stage::Download);
  REQUIRE(active.has_value());
  REQUIRE(q.job(*active)->videoId == "v-1");

  ch.tier = Tier::Gold;
  ch.backlogPct = 80;
  store.putChannel(ch);
  const int updated = recalculateChannelPriorities(q, store, "ch-1", c);
  // v-2's whole flow is queued (4 stage jobs); v-1's download is active but
  // its downstream jobs are queued.
  CHECK(updated == 7);

  const auto expected = computePriority(
      inputs(80, false, 0, Tier::Gold, 1500000000), c);
  const auto next = q.takeNextReady(Stage::Download);
  REQUIRE(next.has_value());
  CHECK(q.job(*next)->videoId == "v-2");
  CHECK(q.job(*next)->priority == expected);
  CHECK(q.job(*active)->priority == 999);

  CHECK_THROWS_AS(recalculateChannelPriorities(q, store, "nope", c),
                  UnknownChannel);
}
