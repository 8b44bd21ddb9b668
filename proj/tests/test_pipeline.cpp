#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "replisim/errors.hpp"
#include "replisim/harness.hpp"
#include "replisim/service.hpp"
#include "replisim/world.hpp"

using namespace replisim;

namespace {

// Deterministic drivetrain: sleeps off, detector effectively disabled,
// instant storage visibility, tight polling.
ScenarioConfig baseConfig() {
  ScenarioConfig cfg;
  cfg.seed = 21;
  cfg.pollIntervalMs = minutesMs(1);
  cfg.sleepEnabled = false;
  cfg.detector.threshold = 1e12;
  cfg.visibilityMinMs = 0;
  cfg.visibilityMaxMs = 0;
  return cfg;
}

VideoSeed newVideo(const std::string& id, std::int64_t sizeBytes = 25'000'000,
                   int durationS = 120) {
  VideoSeed v;
  v.id = id;
  v.publishedAtS = 1'690'000'000;
  v.durationS = durationS;
  v.sizeBytes = sizeBytes;
  return v;
}

ChannelSeed channelOf(const std::string& id, Tier tier,
                      std::vector<VideoSeed> videos) {
  ChannelSeed c;
  c.id = id;
  c.userId = "user-" + id;
  c.tier = tier;
  c.videos = std::move(videos);
  return c;
}

VideoState stateOf(const World& w, const std::string& ch, const std::string& id) {
  auto v = w.store.getVideo(ch, id);
  REQUIRE(v.has_value());
  return v->state;
}

}  // namespace

TEST_CASE("a video walks the four stages on an exact timetable") {
  ScenarioConfig cfg = baseConfig();
  // 25 MB at 12.5 MB/s transfers in exactly 2000ms; 120s of content takes
  // 1200ms of extraction.
  cfg.channels = {channelOf("ch-1", Tier::Silver, {newVideo("vid-1")})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(minutesMs(2));

  CHECK(w.metrics.counter("videosReplicated") == 1);
  CHECK(w.metrics.counter("downloadsCompleted") == 1);
  auto v = w.store.getVideo("ch-1", "vid-1");
  REQUIRE(v.has_value());
  CHECK((v->state == VideoState::UploadSucceeded));
  REQUIRE(v->sinkObjectId.has_value());
  CHECK(w.sink.chain.queryObjects("vid-1") == std::vector<std::string>{*v->sinkObjectId});

  // One channel means two prologue batches, so per-channel work starts at
  // 100ms. Download 2000ms, metadata 1200ms, then the 6s block boundary.
  REQUIRE(v->history.size() == 4);
  CHECK((v->history[0].to == VideoState::CreatingVideo));
  CHECK(v->history[0].atMs == 100 + 2000 + 1200);
  CHECK((v->history[1].to == VideoState::VideoCreated));
  CHECK(v->history[1].atMs == 6000);
  CHECK((v->history[2].to == VideoState::UploadStarted));
  CHECK(v->history[2].atMs == 6000);
  CHECK((v->history[3].to == VideoState::UploadSucceeded));
  CHECK(v->history[3].atMs == 6000);

  // Scratch media is deleted after replication and the store replays.
  CHECK(!w.disk.has("vid-1"));
  CHECK(DurableStore::replay(w.store.writeLog()).snapshot() == w.store.snapshot());
}

TEST_CASE("Bronze admission stops at five concurrent videos") {
  ScenarioConfig cfg = baseConfig();
  std::vector<VideoSeed> vids;
  for (int i = 1; i <= 6; ++i) vids.push_back(newVideo("vid-" + std::to_string(i)));
  cfg.channels = {channelOf("ch-1", Tier::Bronze, vids)};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(minutesMs(5));

  CHECK(w.metrics.counter("tierCapRejected") >= 1);
  CHECK(w.metrics.counter("videosReplicated") == 5);
  // Five replicated rows consume the cap for good; the sixth never enters.
  int stuck = 0;
  for (int i = 1; i <= 6; ++i)
    if (stateOf(w, "ch-1", "vid-" + std::to_string(i)) == VideoState::New) ++stuck;
  CHECK(stuck == 1);
}

TEST_CASE("Bronze admission counts stored bytes against the size cap") {
  ScenarioConfig cfg = baseConfig();
  VideoSeed big = newVideo("vid-big", 900'000'000);
  big.state = VideoState::UploadSucceeded;
  big.sinkObjectId = "obj-pre";
  VideoSeed over = newVideo("vid-over", 200'000'000);
  VideoSeed fits = newVideo("vid-fits", 50'000'000);
  cfg.channels = {channelOf("ch-1", Tier::Bronze, {big, over, fits})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(minutesMs(5));

  CHECK(w.metrics.counter("tierSizeRejected") >= 1);
  CHECK((stateOf(w, "ch-1", "vid-over") == VideoState::New));
  CHECK((stateOf(w, "ch-1", "vid-fits") == VideoState::UploadSucceeded));
}

TEST_CASE("tier caps gate only flows that enter at the download stage") {
  ScenarioConfig cfg = baseConfig();
  cfg.uploadsEnabled = false;
  std::vector<VideoSeed> retries;
  for (int i = 1; i <= 7; ++i) {
    VideoSeed v = newVideo("vid-" + std::to_string(i));
    v.state = VideoState::CreationFailed;
    retries.push_back(v);
  }
  cfg.channels = {channelOf("ch-1", Tier::Bronze, retries)};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(secondsMs(30));

  // Seven creation retries on a Bronze channel (cap 5) all run.
  CHECK(w.metrics.counter("videosCreated") == 7);
  CHECK(w.metrics.counter("tierCapRejected") == 0);
  CHECK(w.store.videosByState(VideoState::VideoCreated).size() == 7);
}

TEST_CASE("stage concurrency and the platform connection cap hold at every event") {
  ScenarioConfig cfg = baseConfig();
  cfg.platformConnectionCap = 3;
  std::vector<VideoSeed> vids;
  for (int i = 1; i <= 8; ++i)
    vids.push_back(newVideo("vid-" + std::to_string(i), 12'500'000, 60));
  cfg.channels = {channelOf("ch-1", Tier::Diamond, vids)};
  World w(cfg);
  ServiceProcess svc(w);

  std::int64_t maxDownload = 0, maxMetadata = 0, maxJoint = 0;
  w.clock.setAfterDispatchHook([&](std::uint64_t) {
    if (!svc.running()) return;
    const std::int64_t d = svc.jobs().activeCount(Stage::Download);
    const std::int64_t m = svc.jobs().activeCount(Stage::Metadata);
    maxDownload = std::max(maxDownload, d);
    maxMetadata = std::max(maxMetadata, m);
    maxJoint = std::max(maxJoint, d + m);
  });
  svc.start();
  w.clock.advanceTo(minutesMs(10));

  CHECK(w.metrics.counter("videosReplicated") == 8);
  CHECK(maxDownload <= 2);
  CHECK(maxMetadata <= 2);
  CHECK(maxJoint <= 3);
  CHECK(maxJoint == 3);  // the cap is actually exercised
}

TEST_CASE("creation batches chain sequential nonces across block boundaries") {
  ScenarioConfig cfg = baseConfig();
  cfg.uploadsEnabled = false;
  std::vector<VideoSeed> retries;
  for (int i = 1; i <= 25; ++i) {
    VideoSeed v = newVideo("vid-" + std::to_string(i));
    v.state = VideoState::CreationFailed;
    retries.push_back(v);
  }
  cfg.channels = {channelOf("ch-1", Tier::Diamond, retries)};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(minutesMs(1));

  // 25 ready rows fill batches of 10, 10, 5 on consecutive blocks.
  CHECK(w.metrics.counter("batchesSubmitted") == 3);
  CHECK(w.metrics.counter("videosCreated") == 25);
  CHECK(w.sink.chain.totalObjects() == 25);
  CHECK(w.sink.chain.duplicateObjects() == 0);
  CHECK(w.sink.chain.nextNonce() == 25);
}

TEST_CASE("bot challenges rotate endpoints and exclude them for the TTL") {
  ScenarioConfig cfg = baseConfig();
  cfg.detector.threshold = 0.05;  // the first scrape from any identity trips
  cfg.proxy.endpoints = {"p-1", "p-2"};
  cfg.channels = {channelOf("ch-1", Tier::Silver, {newVideo("vid-1")})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(secondsMs(10));

  CHECK(w.metrics.counter("botChallenges") == 2);
  CHECK(svc.proxy().eligibleCount() == 0);
  CHECK(svc.jobs().retriedTotal(Stage::Download) == 2);
  CHECK(w.metrics.counter("videosReplicated") == 0);
  CHECK((stateOf(w, "ch-1", "vid-1") == VideoState::New));
  CHECK(w.platform.blockedIdentityCount() == 2);
}

TEST_CASE("pre-download checks filter unavailable videos without a fetch") {
  ScenarioConfig cfg = baseConfig();
  VideoSeed gone = newVideo("vid-gone");
  gone.deleted = true;
  VideoSeed priv = newVideo("vid-priv");
  priv.privateVideo = true;
  VideoSeed tooLong = newVideo("vid-long");
  tooLong.durationS = 10801;
  VideoSeed tooBig = newVideo("vid-big");
  tooBig.sizeBytes = 15'000'000'001;
  cfg.channels = {channelOf("ch-1", Tier::Diamond, {gone, priv, tooLong, tooBig})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(secondsMs(5));

  CHECK(w.metrics.counter("videosFiltered") == 4);
  CHECK(w.metrics.counter("downloadsCompleted") == 0);
  CHECK((stateOf(w, "ch-1", "vid-gone") == VideoState::Deleted));
  CHECK((stateOf(w, "ch-1", "vid-priv") == VideoState::Private));
  CHECK((stateOf(w, "ch-1", "vid-long") == VideoState::Skipped));
  CHECK((stateOf(w, "ch-1", "vid-big") == VideoState::Skipped));
}

TEST_CASE("without pre-download checks a dead source burns a pipeline error per cycle") {
  ScenarioConfig cfg = baseConfig();
  cfg.preDownloadChecks = false;
  VideoSeed gone = newVideo("vid-gone");
  gone.deleted = true;
  cfg.channels = {channelOf("ch-1", Tier::Silver, {gone})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(minutesMs(3) + secondsMs(30));

  // Four cycles ran (t=0,1,2,3 min); the verdict is never durable, so every
  // cycle rediscovers, re-downloads, and fails the same video.
  CHECK(w.metrics.counter("pipelineErrors") == 4);
  CHECK(w.metrics.counter("videosFiltered") == 0);
  CHECK((stateOf(w, "ch-1", "vid-gone") == VideoState::New));
  CHECK(notesInWindow(w.metrics.trace(), "downloadError", 0, minutesMs(4)) == 4);
}

TEST_CASE("an empty payload is durable regardless of the check toggle") {
  ScenarioConfig cfg = baseConfig();
  cfg.preDownloadChecks = false;
  VideoSeed empty = newVideo("vid-empty");
  empty.emptyDownload = true;
  cfg.channels = {channelOf("ch-1", Tier::Silver, {empty})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(secondsMs(30));

  CHECK((stateOf(w, "ch-1", "vid-empty") == VideoState::EmptyDownload));
  CHECK(w.metrics.counter("videosFiltered") == 1);
}

TEST_CASE("a transfer that cannot finish inside the timeout is marked timed out") {
  ScenarioConfig cfg = baseConfig();
  cfg.downloadTimeoutMs = secondsMs(1);  // 25 MB needs 2s at this bandwidth
  cfg.channels = {channelOf("ch-1", Tier::Silver, {newVideo("vid-slow")})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(secondsMs(10));

  CHECK((stateOf(w, "ch-1", "vid-slow") == VideoState::DownloadTimedOut));
  // The failure lands exactly downloadTimeoutMs after the fetch request.
  auto v = w.store.getVideo("ch-1", "vid-slow");
  REQUIRE(v->history.size() == 1);
  CHECK(v->history[0].atMs == 100 + 1000);
}

TEST_CASE("metadata that overruns its budget marks a postprocessing error") {
  ScenarioConfig cfg = baseConfig();
  cfg.metadataTimeoutMs = secondsMs(1);  // 120s content needs 1200ms
  cfg.channels = {channelOf("ch-1", Tier::Silver, {newVideo("vid-meta")})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(secondsMs(30));

  CHECK((stateOf(w, "ch-1", "vid-meta") == VideoState::PostprocessingError));
  CHECK(w.metrics.counter("videosFiltered") == 1);
  CHECK(w.metrics.counter("videosReplicated") == 0);
}

TEST_CASE("a 250-channel prologue paces eight batches before channel work") {
  ScenarioConfig cfg = baseConfig();
  for (int i = 1; i <= 250; ++i) {
    ChannelSeed c = channelOf("ch-" + std::to_string(1000 + i), Tier::Bronze, {});
    cfg.channels.push_back(c);
  }
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();

  // 3 store pages + 5 listing batches, 100ms apart: the cycle completes at
  // 700ms, not at 0.
  w.clock.advanceTo(699);
  CHECK(svc.pipeline().cyclesCompleted() == 0);
  w.clock.advanceTo(700);
  CHECK(svc.pipeline().cyclesCompleted() == 1);
  // One channels.list per 50 channels plus one playlist listing per channel.
  CHECK(w.platform.quotaSpentToday() == 255);
}

TEST_CASE("the legacy write path never records intents") {
  ScenarioConfig cfg = baseConfig();
  cfg.walEnabled = false;
  cfg.channels = {channelOf("ch-1", Tier::Silver, {newVideo("vid-1")})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(minutesMs(1));

  CHECK(w.metrics.counter("videosReplicated") == 1);
  auto v = w.store.getVideo("ch-1", "vid-1");
  CHECK((v->state == VideoState::UploadSucceeded));
  // Result-only writes: no intent states in the log, no history entries.
  CHECK(v->history.empty());
  const std::string log = w.store.writeLogText();
  CHECK(log.find("CreatingVideo") == std::string::npos);
  CHECK(log.find("UploadStarted") == std::string::npos);
}

TEST_CASE("the durable path records an intent before each sink effect") {
  ScenarioConfig cfg = baseConfig();
  cfg.channels = {channelOf("ch-1", Tier::Silver, {newVideo("vid-1")})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(minutesMs(1));

  const std::string log = w.store.writeLogText();
  const std::size_t intent = log.find("CreatingVideo");
  const std::size_t created = log.find("VideoCreated");
  const std::size_t started = log.find("UploadStarted");
  const std::size_t succeeded = log.find("UploadSucceeded");
  REQUIRE(intent != std::string::npos);
  REQUIRE(created != std::string::npos);
  REQUIRE(started != std::string::npos);
  REQUIRE(succeeded != std::string::npos);
  CHECK(intent < created);
  CHECK(created < started);
  CHECK(started < succeeded);
}

TEST_CASE("a saturated bind queue backs off instead of spinning") {
  ScenarioConfig cfg = baseConfig();
  cfg.proxy.endpoints = {"p-1"};
  cfg.downloadConcurrency = 50;
  cfg.platformConnectionCap = 50;
  std::vector<VideoSeed> vids;
  for (int i = 10; i < 22; ++i)
    vids.push_back(newVideo("vid-" + std::to_string(i), 12'500'000, 60));
  cfg.channels = {channelOf("ch-1", Tier::Diamond, vids)};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(minutesMs(10));

  // One endpoint, a ten-waiter cap, twelve jobs: at least one admission hits
  // the full queue, and everything still drains.
  CHECK(w.metrics.counter("proxyQueueRejections") >= 1);
  CHECK(w.metrics.counter("videosReplicated") == 12);
}

TEST_CASE("a flaky metadata source parks instead of starving the stage") {
  ScenarioConfig cfg = baseConfig();
  cfg.metadataConcurrency = 1;
  VideoSeed flaky = newVideo("vid-a");
  flaky.transientMetaFailures = 99;
  cfg.channels = {channelOf("ch-1", Tier::Diamond, {flaky, newVideo("vid-b")})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();
  w.clock.advanceTo(minutesMs(10));

  // vid-a reaches the lone metadata slot first (same priority, earlier
  // sequence), fails transiently, and parks for the retry gap; vid-b then
  // takes the slot and completes.
  CHECK(w.metrics.counter("metadataTransientFailures") >= 1);
  CHECK(w.metrics.counter("videosReplicated") == 1);
  CHECK((stateOf(w, "ch-1", "vid-b") == VideoState::UploadSucceeded));
  CHECK(svc.jobs().queuedCount(Stage::Metadata) == 1);  // parked, still owned
  CHECK(svc.jobs().hasLiveFlow("vid-a"));
}

TEST_CASE("startup reconciliation resolves every intent row against the sink") {
  ScenarioConfig cfg = baseConfig();
  VideoSeed adopt = newVideo("v-adopt");
  adopt.state = VideoState::CreatingVideo;
  VideoSeed reset = newVideo("v-reset");
  reset.state = VideoState::CreatingVideo;
  VideoSeed done = newVideo("v-done");
  done.state = VideoState::UploadStarted;
  done.sinkObjectId = "obj-done";
  // The pre-start batch below mints obj-1 for v-adopt and obj-2 for v-resume.
  VideoSeed resume = newVideo("v-resume");
  resume.state = VideoState::UploadStarted;
  resume.sinkObjectId = "obj-2";
  cfg.channels = {channelOf("ch-1", Tier::Diamond, {adopt, reset, done, resume})};
  World w(cfg);

  // v-adopt's batch landed before the crash; v-done's assets are fully
  // accepted; v-resume's object exists but was never accepted anywhere.
  w.sink.chain.submitBatch({{"v-adopt", 0}, {"v-resume", 1}}, nullptr);
  w.clock.advanceTo(6000);
  const std::string adoptObj = w.sink.chain.queryObjects("v-adopt")[0];
  w.sink.nodes[0]->forceAccept("obj-done", AssetKind::Media);
  w.sink.nodes[1]->forceAccept("obj-done", AssetKind::Thumbnail);
  // v-resume uploads need media on disk to push.
  w.disk.put("v-resume", {25'000'000, 25'000, "hash"});

  ServiceProcess svc(w);
  svc.start();

  // Reconciliation runs before any worker: verdicts are visible immediately.
  CHECK(w.metrics.counter("reconciledCreated") == 1);
  CHECK(w.metrics.counter("reconciledReset") == 1);
  CHECK(w.metrics.counter("reconciledUploaded") == 1);
  CHECK(w.metrics.counter("reconciledRequeued") == 1);

  auto adopted = w.store.getVideo("ch-1", "v-adopt");
  CHECK((adopted->state == VideoState::VideoCreated));
  CHECK(adopted->sinkObjectId == adoptObj);
  CHECK((stateOf(w, "ch-1", "v-reset") == VideoState::New));
  auto resetRow = w.store.getVideo("ch-1", "v-reset");
  REQUIRE(resetRow->history.size() == 1);
  CHECK((resetRow->history[0].from == VideoState::CreatingVideo));
  CHECK((resetRow->history[0].to == VideoState::New));
  CHECK((stateOf(w, "ch-1", "v-done") == VideoState::UploadSucceeded));

  // The pipeline then finishes what reconciliation handed back.
  w.clock.advanceTo(6000 + minutesMs(2));
  CHECK((stateOf(w, "ch-1", "v-resume") == VideoState::UploadSucceeded));
  CHECK((stateOf(w, "ch-1", "v-adopt") == VideoState::UploadSucceeded));
  CHECK((stateOf(w, "ch-1", "v-reset") == VideoState::UploadSucceeded));
  // v-adopt gained no second sink object: reconciliation adopted, not redid.
  CHECK(w.sink.chain.queryObjects("v-adopt").size() == 1);
  CHECK(DurableStore::replay(w.store.writeLog()).snapshot() == w.store.snapshot());
}

TEST_CASE("reconciliation backs off while the sink is unreachable") {
  ScenarioConfig cfg = baseConfig();
  VideoSeed parked = newVideo("v-parked");
  parked.state = VideoState::CreatingVideo;
  cfg.channels = {channelOf("ch-1", Tier::Silver, {parked})};
  World w(cfg);
  w.sink.chain.setUnreachable(true);

  ServiceProcess svc(w);
  svc.start();
  CHECK(w.metrics.counter("reconcileRetries") == 1);
  CHECK((stateOf(w, "ch-1", "v-parked") == VideoState::CreatingVideo));
  // Workers are held: no cycle runs while reconciliation is blocked.
  w.clock.advanceTo(secondsMs(4));
  CHECK(svc.pipeline().cyclesCompleted() == 0);

  w.sink.chain.setUnreachable(false);
  w.clock.advanceTo(secondsMs(5));  // the 5s backoff retry fires
  CHECK((stateOf(w, "ch-1", "v-parked") == VideoState::New));
  w.clock.advanceTo(secondsMs(5) + minutesMs(2));
  CHECK((stateOf(w, "ch-1", "v-parked") == VideoState::UploadSucceeded));
}

TEST_CASE("a crash mid-download leaves the world clean and the video retries") {
  ScenarioConfig cfg = baseConfig();
  cfg.channels = {channelOf("ch-1", Tier::Silver, {newVideo("vid-1")})};
  World w(cfg);
  ServiceProcess svc(w);
  svc.start();

  // The transfer completes at 2100ms; kill the process in the middle.
  w.clock.advanceTo(1000);
  svc.restart(5000);
  CHECK(!svc.running());
  CHECK(w.disk.fileCount() == 0);

  w.clock.advanceTo(minutesMs(2));
  CHECK(svc.running());
  CHECK(svc.incarnation() == 2);
  CHECK(w.metrics.counter("crashes") == 1);
  CHECK(w.metrics.counter("serviceStarts") == 2);
  CHECK(w.metrics.counter("staleJobsFlushed") == 0);
  CHECK(w.metrics.counter("videosReplicated") == 1);
  CHECK((stateOf(w, "ch-1", "vid-1") == VideoState::UploadSucceeded));
  CHECK(w.sink.chain.duplicateObjects() == 0);
  CHECK(DurableStore::replay(w.store.writeLog()).snapshot() == w.store.snapshot());
}
