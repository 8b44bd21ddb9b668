#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "replisim/clock.hpp"
#include "replisim/platform.hpp"
#include "replisim/rng.hpp"
#include "replisim/time.hpp"

using namespace replisim;
using doctest::Approx;

TEST_CASE("api calls draw quota until the daily budget rejects them") {
  SimClock clock;
  PlatformSim sim(clock, SeededRng(1));

  // videos.list and channels.list cost 1, search.list costs 100.
  CHECK(sim.apiCall(ApiOp::VideosList, CallService::Sync).cost == 1);
  CHECK(sim.apiCall(ApiOp::SearchList, CallService::Sync).cost == 100);
  CHECK(sim.quotaSpentToday() == 101);

  for (int i = 0; i < 9899; ++i) {
    REQUIRE(sim.apiCall(ApiOp::VideosList, CallService::Sync).ok);
  }
  CHECK(sim.quotaSpentToday() == 10000);
  const ApiResult rejected = sim.apiCall(ApiOp::VideosList, CallService::Sync);
  CHECK(!rejected.ok);
  CHECK(rejected.error == "quotaExceeded");
  CHECK(sim.quotaRejectedTotal() == 1);
  // Rejected calls spend nothing.
  CHECK(sim.quotaSpentToday() == 10000);

  SUBCASE("token exchange is free and survives exhaustion") {
    const ApiResult tok = sim.apiCall(ApiOp::TokenExchange, CallService::Signup);
    CHECK(tok.ok);
    CHECK(tok.cost == 0);
  }

  SUBCASE("the budget resets on the virtual day boundary") {
    clock.advanceTo(kDayMs);
    CHECK(sim.quotaSpentToday() == 0);
    CHECK(sim.apiCall(ApiOp::VideosList, CallService::Sync).ok);
  }

  SUBCASE("an explicit cost overrides the per-op default") {
    clock.advanceTo(kDayMs);
    CHECK(sim.apiCall(ApiOp::VideosList, CallService::Sync, 9999).ok);
    CHECK(!sim.apiCall(ApiOp::VideosList, CallService::Sync, 2).ok);
    CHECK(sim.apiCall(ApiOp::VideosList, CallService::Sync, 1).ok);
  }
}

TEST_CASE("api downtime reports serviceUnavailable without spending") {
  SimClock clock;
  PlatformSim sim(clock, SeededRng(2));
  sim.setApiAvailable(false);
  const ApiResult r = sim.apiCall(ApiOp::ChannelsList, CallService::Signup);
  CHECK(!r.ok);
  CHECK(r.error == "serviceUnavailable");
  CHECK(sim.quotaSpentToday() == 0);
  CHECK(sim.quotaRejectedTotal() == 0);
  sim.setApiAvailable(true);
  CHECK(sim.apiCall(ApiOp::ChannelsList, CallService::Signup).ok);
}

TEST_CASE("rationing splits the day budget into signup and sync envelopes") {
  SimClock clock;
  QuotaConfig quota;
  quota.rationing = true;  // 500 signup / 9500 sync
  PlatformSim sim(clock, SeededRng(3), DetectorParams{}, quota);

  for (int i = 0; i < 5; ++i) {
    REQUIRE(sim.apiCall(ApiOp::SearchList, CallService::Signup).ok);
  }
  CHECK(!sim.apiCall(ApiOp::ChannelsList, CallService::Signup).ok);
  // Sync keeps its own envelope.
  CHECK(sim.apiCall(ApiOp::SearchList, CallService::Sync).ok);
  CHECK(sim.quotaSpentToday() == 600);

  clock.advanceTo(kDayMs);
  CHECK(sim.apiCall(ApiOp::ChannelsList, CallService::Signup).ok);
}

TEST_CASE("detection pressure accumulates per request and decays by half-life") {
  SimClock clock;
  PlatformSim sim(clock, SeededRng(4));

  // One request in a 10-minute window: rate term alpha * 0.1, no connections,
  // neutral regularity.
  CHECK((sim.scrapeRequest("id-a", RequestKind::CheckVideo) == ScrapeOutcome::Ok));
  CHECK(sim.detectionScore("id-a") == Approx(0.1));

  clock.advanceTo(minutesMs(30));
  CHECK(sim.detectionScore("id-a") == Approx(0.05));
  clock.advanceTo(minutesMs(60));
  CHECK(sim.detectionScore("id-a") == Approx(0.025));
  CHECK(sim.detectionScore("id-unknown") == 0.0);
}

TEST_CASE("open connections add fan-out pressure") {
  SimClock clock;
  PlatformSim sim(clock, SeededRng(5));
  sim.connectionOpened("id-c");
  sim.connectionOpened("id-c");
  sim.connectionOpened("id-c");
  sim.scrapeRequest("id-c", RequestKind::VideoFetch);
  // alpha * 0.1 + beta * 3 with beta 5.
  CHECK(sim.detectionScore("id-c") == Approx(15.1));
  sim.connectionClosed("id-c");
  sim.connectionClosed("id-c");
  sim.connectionClosed("id-c");
  sim.connectionClosed("id-c");  // extra close is a no-op
  clock.advanceTo(1);
  sim.scrapeRequest("id-c", RequestKind::VideoFetch);
  CHECK(sim.detectionScore("id-c") < 16.0);
}

TEST_CASE("metronome pacing scores higher than jittered pacing") {
  SimClock clock;
  PlatformSim sim(clock, SeededRng(6));

  // Same request count and span; gaps of exactly 1000ms versus alternating
  // 500/1500 (same mean, cv at the neutral pivot).
  VirtualMs tReg = 0;
  VirtualMs tJit = 0;
  std::vector<VirtualMs> regTimes, jitTimes;
  for (int i = 0; i < 20; ++i) {
    regTimes.push_back(tReg);
    jitTimes.push_back(tJit);
    tReg += 1000;
    tJit += (i % 2 == 0) ? 500 : 1500;
  }
  std::size_t ri = 0, ji = 0;
  while (ri < regTimes.size() || ji < jitTimes.size()) {
    const VirtualMs nextReg = ri < regTimes.size() ? regTimes[ri] : -1;
    const VirtualMs nextJit = ji < jitTimes.size() ? jitTimes[ji] : -1;
    if (nextJit == -1 || (nextReg != -1 && nextReg <= nextJit)) {
      clock.advanceTo(nextReg);
      sim.scrapeRequest("id-reg", RequestKind::CheckVideo);
      ++ri;
    } else {
      clock.advanceTo(nextJit);
      sim.scrapeRequest("id-jit", RequestKind::CheckVideo);
      ++ji;
    }
  }
  clock.advanceTo(20000);
  CHECK(sim.detectionScore("id-reg") > 3.0 * sim.detectionScore("id-jit"));
}

TEST_CASE("the observation window drops requests older than ten minutes") {
  SimClock clock;
  PlatformSim sim(clock, SeededRng(7));
  sim.scrapeRequest("id-w", RequestKind::CheckVideo);

  SUBCASE("a request at the exact window edge no longer counts") {
    clock.advanceTo(minutesMs(10));
    sim.scrapeRequest("id-w", RequestKind::CheckVideo);
    // Decayed 0.1 over 10min of a 30min half-life, plus a 1-element window.
    const double expected = 0.1 * std::pow(0.5, 1.0 / 3.0) + 0.1;
    CHECK(sim.requestTrace().back().scoreAfter == Approx(expected));
  }

  SUBCASE("a request just inside the window still counts") {
    clock.advanceTo(minutesMs(10) - 1);
    sim.scrapeRequest("id-w", RequestKind::CheckVideo);
    const double expected =
        0.1 * std::pow(0.5, (600000.0 - 1.0) / 1800000.0) + 0.2;
    CHECK(sim.requestTrace().back().scoreAfter == Approx(expected));
  }
}

TEST_CASE("crossing the threshold blocks the identity for the block window") {
  SimClock clock;
  DetectorParams det;
  det.threshold = 25.0;
  PlatformSim sim(clock, SeededRng(8), det);
  sim.connectionOpened("id-b");
  sim.connectionOpened("id-b");  // beta * 2 = 10 per request

  int untilChallenge = 0;
  while (sim.scrapeRequest("id-b", RequestKind::VideoFetch) == ScrapeOutcome::Ok) {
    ++untilChallenge;
    clock.advanceTo(clock.now() + 100);
    REQUIRE(untilChallenge < 100);
  }
  CHECK(untilChallenge >= 2);
  const VirtualMs blockedAt = clock.now();
  REQUIRE(sim.blockedUntil("id-b").has_value());
  CHECK(*sim.blockedUntil("id-b") == blockedAt + hoursMs(6));
  CHECK(*sim.firstBlockedAt("id-b") == blockedAt);
  CHECK(sim.blockedIdentityCount() == 1);

  // Every request inside the block window is challenged, even after the
  // score decays away, and the window end does not move.
  clock.advanceTo(blockedAt + hoursMs(5));
  CHECK(sim.detectionScore("id-b") < det.threshold);
  CHECK((sim.scrapeRequest("id-b", RequestKind::CheckVideo) ==
         ScrapeOutcome::BotChallenge));
  CHECK(*sim.blockedUntil("id-b") == blockedAt + hoursMs(6));

  // Past the window the identity serves again; firstBlockedAt is sticky.
  clock.advanceTo(blockedAt + hoursMs(6) + minutesMs(30));
  sim.connectionClosed("id-b");
  sim.connectionClosed("id-b");
  CHECK((sim.scrapeRequest("id-b", RequestKind::CheckVideo) == ScrapeOutcome::Ok));
  CHECK(sim.blockedIdentityCount() == 0);
  CHECK(*sim.firstBlockedAt("id-b") == blockedAt);
}

TEST_CASE("the request trace records outcomes, sleeps, and renders as text") {
  SimClock clock;
  PlatformSim sim(clock, SeededRng(9));
  sim.scrapeRequest("id-t", RequestKind::Thumbnail);
  sim.traceSleep("id-t", 12345);
  REQUIRE(sim.requestTrace().size() == 2);
  CHECK(sim.requestTrace()[0].kind == "thumbnail");
  CHECK(sim.requestTrace()[0].outcome == "ok");
  CHECK(sim.requestTrace()[1].kind == "sleep");
  CHECK(sim.requestTrace()[1].outcome == "12345");
  const std::string text = sim.requestTraceText();
  CHECK(text.find("kind=thumbnail outcome=ok") != std::string::npos);
  CHECK(text.find("kind=sleep outcome=12345") != std::string::npos);
}

TEST_CASE("access tokens expire after one hour, strictly") {
  SimClock clock;
  PlatformSim sim(clock, SeededRng(10));
  SeededRng tokenRng(11);
  TokenBundle b = sim.issueTokens(tokenRng);
  CHECK(b.accessToken.size() == 16);  // 8 bytes as hex
  CHECK(b.accessExpiryMs == hoursMs(1));
  CHECK((sim.tokenLifecycle(b) == TokenStatus::Valid));

  clock.advanceTo(hoursMs(1));
  CHECK((sim.tokenLifecycle(b) == TokenStatus::Valid));
  clock.advanceTo(hoursMs(1) + 1);
  CHECK((sim.tokenLifecycle(b) == TokenStatus::ExpiredAccess));

  sim.refreshAccess(b);
  CHECK((sim.tokenLifecycle(b) == TokenStatus::Valid));
  CHECK(b.accessExpiryMs == hoursMs(1) + 1 + hoursMs(1));
  CHECK(b.refreshLastUsedMs == hoursMs(1) + 1);
}

TEST_CASE("refresh tokens lapse after six idle months, strictly") {
  SimClock clock;
  PlatformSim sim(clock, SeededRng(12));
  SeededRng tokenRng(13);
  TokenBundle b = sim.issueTokens(tokenRng);

  clock.advanceTo(monthsMs(6));
  CHECK((sim.tokenLifecycle(b) == TokenStatus::ExpiredAccess));
  clock.advanceTo(monthsMs(6) + 1);
  CHECK((sim.tokenLifecycle(b) == TokenStatus::ExpiredRefresh));

  // Exercising the refresh token inside the window restarts the idle clock.
  TokenBundle kept = sim.issueTokens(tokenRng);
  SimClock clock2;  // fresh timeline for the kept bundle
  PlatformSim sim2(clock2, SeededRng(14));
  TokenBundle live = sim2.issueTokens(tokenRng);
  clock2.advanceTo(monthsMs(3));
  sim2.refreshAccess(live);
  clock2.advanceTo(monthsMs(6));
  CHECK((sim2.tokenLifecycle(live) == TokenStatus::ExpiredAccess));
  clock2.advanceTo(monthsMs(3) + monthsMs(6) + 1);
  CHECK((sim2.tokenLifecycle(live) == TokenStatus::ExpiredRefresh));
  (void)kept;

  b.revoked = true;
  CHECK((sim.tokenLifecycle(b) == TokenStatus::Revoked));
}

TEST_CASE("the operational path serves metadata without quota or tokens") {
  SimClock clock;
  PlatformSim sim(clock, SeededRng(15));
  CorpusChannel ch;
  ch.id = "ch-op";
  sim.addChannel(ch);
  CorpusVideo v;
  v.id = "vid-1";
  v.channelId = "ch-op";
  v.durationS = 90;
  v.sizeBytes = 5000000;
  v.transientMetaFailures = 2;
  sim.addVideo(v);

  auto r1 = sim.operationalVideoMeta("vid-1");
  CHECK(!r1.ok);
  CHECK(r1.transientFailure);
  auto r2 = sim.operationalVideoMeta("vid-1");
  CHECK(r2.transientFailure);
  auto r3 = sim.operationalVideoMeta("vid-1");
  CHECK(r3.ok);
  CHECK(r3.meta.durationS == 90);
  CHECK(sim.corpusVideo("vid-1")->transientMetaFailures == 0);

  CHECK(sim.operationalVideoMeta("vid-404").error == "missing");
  CHECK(sim.quotaSpentToday() == 0);

  sim.setOperationalApiUp(false);
  CHECK(sim.operationalVideoMeta("vid-1").error == "serviceUnavailable");
  sim.setOperationalApiUp(true);

  CHECK(sim.operationalFindByUrl("video://vid-1")->id == "vid-1");
  CHECK(sim.operationalFindByUrl("video://vid-404") == nullptr);
  CHECK(sim.operationalFindByUrl("https://vid-1") == nullptr);
}

TEST_CASE("corpus generation is deterministic and honors appearance times") {
  SimClock clockA, clockB;
  PlatformSim a(clockA, SeededRng(16));
  PlatformSim b(clockB, SeededRng(16));
  CorpusConfig cfg;
  cfg.channelCount = 3;
  cfg.videosPerChannel = 4;
  a.generateCorpus(cfg);
  b.generateCorpus(cfg);

  REQUIRE(a.channelIds() == b.channelIds());
  CHECK(a.channelIds() == std::vector<std::string>{"ch-0001", "ch-0002", "ch-0003"});
  const auto ids = a.listVideoIds("ch-0001");
  REQUIRE(ids.size() == 4);
  CHECK(ids[0] == "ch-0001-v0001");
  for (const auto& id : ids) {
    const CorpusVideo* va = a.corpusVideo(id);
    const CorpusVideo* vb = b.corpusVideo(id);
    REQUIRE(va != nullptr);
    REQUIRE(vb != nullptr);
    CHECK(va->sizeBytes == vb->sizeBytes);
    CHECK(va->durationS == vb->durationS);
    CHECK(va->publishedAtS == vb->publishedAtS);
    CHECK(va->durationS >= 10);
    CHECK(va->sizeBytes >= 1000000);
  }
  CHECK(a.corpusChannel("ch-0002")->videoCount == 4);

  // A video that appears later is invisible to listing until its instant.
  CorpusVideo late;
  late.id = "ch-0001-late";
  late.channelId = "ch-0001";
  late.appearsAtMs = 5000;
  a.addVideo(late);
  CHECK(a.listVideoIds("ch-0001").size() == 4);
  clockA.advanceTo(5000);
  CHECK(a.listVideoIds("ch-0001").size() == 5);
}
