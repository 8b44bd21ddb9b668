#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "replisim/clock.hpp"
#include "replisim/time.hpp"

namespace replisim {

struct TraceEntry {
  VirtualMs atMs = 0;
  std::string event;
  std::string detail;
};

// Deterministic telemetry: named monotonic counters, point-in-time gauges,
// an ordered event trace, and a periodic emission stream with a fixed field
// order. Two runs with the same seed must produce byte-identical stream and
// trace text.
class MetricsRecorder {
 public:
  explicit MetricsRecorder(SimClock& clock) : clock_(clock) {}

  void incr(const std::string& name, std::int64_t delta = 1) {
    counters_[name] += delta;
  }
  std::int64_t counter(const std::string& name) const {
    auto it = counters_.find(name);
    return it == counters_.end() ? 0 : it->second;
  }
  void setGauge(const std::string& name, std::int64_t value) {
    gauges_[name] = value;
  }

  void note(const std::string& event, const std::string& detail = "") {
    trace_.push_back({clock_.now(), event, detail});
  }

  // Invoked at the start of every emission tick to refresh gauges.
  void setSampler(std::function<void(MetricsRecorder&)> sampler) {
    sampler_ = std::move(sampler);
  }

  // Emits one stream line every periodMs on the given scope.
  void startEmission(VirtualMs periodMs, const EventScope& scope);
  void emitNow();

  const std::map<std::string, std::int64_t>& counters() const { return counters_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }

  std::string streamText() const { return stream_; }
  std::string traceText() const;
  std::string summaryCsv() const;

 private:
  SimClock& clock_;
  std::map<std::string, std::int64_t> counters_;
  std::map<std::string, std::int64_t> gauges_;
  std::vector<TraceEntry> trace_;
  std::function<void(MetricsRecorder&)> sampler_;
  std::string stream_;
};

}  // namespace replisim
