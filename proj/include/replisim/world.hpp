#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "replisim/clock.hpp"
#include "replisim/disk.hpp"
#include "replisim/metrics.hpp"
#include "replisim/platform.hpp"
#include "replisim/rng.hpp"
#include "replisim/scenario.hpp"
#include "replisim/sink.hpp"
#include "replisim/store.hpp"

namespace replisim {

// Everything outside the service process: clock, source platform, sink
// cluster, durable store, scratch disk, telemetry. A process crash never
// touches any of this.
struct World {
  explicit World(ScenarioConfig config);

  ScenarioConfig cfg;  // runtime-mutable knobs; overrides land here
  SimClock clock;
  EventScope worldScope;
  SeededRng rootRng;
  MetricsRecorder metrics;
  DurableStore store;
  PlatformSim platform;
  SinkCluster sink;
  LocalDisk disk;

  std::int64_t nowUnixS() const { return cfg.epochUnixS + clock.now() / 1000; }
  std::int64_t nextSinkChannelId() { return nextSinkChannelId_++; }

  // Applies a scheduled parameter change. Throws ConfigInvalid for unknown
  // keys or malformed values.
  void applyOverride(const std::string& key, const nlohmann::json& value);

 private:
  void seedPopulation();
  std::int64_t nextSinkChannelId_ = 1;
};

}  // namespace replisim
