#include "replisim/metrics.hpp"

namespace replisim {

void MetricsRecorder::startEmission(VirtualMs periodMs, const EventScope& scope) {
  // Self-rescheduling tick; map iteration keeps the field order fixed.
  auto tick = std::make_shared<std::function<void()>>();
  *tick = [this, periodMs, &scope, tick] {
    emitNow();
    clock_.scheduleAfter(periodMs, scope.wrap(*tick));
  };
  clock_.scheduleAfter(periodMs, scope.wrap(*tick));
}

void MetricsRecorder::emitNow() {
  if (sampler_) sampler_(*this);
  stream_ += "t=" + std::to_string(clock_.now());
  for (const auto& [name, value] : counters_)
    stream_ += " " + name + "=" + std::to_string(value);
  for (const auto& [name, value] : gauges_)
    stream_ += " " + name + "~" + std::to_string(value);
  stream_ += "\n";
}

std::string MetricsRecorder::traceText() const {
  std::string out;
  for (const auto& e : trace_) {
    out += std::to_string(e.atMs) + " " + e.event;
    if (!e.detail.empty()) out += " " + e.detail;
    out += "\n";
  }
  return out;
}

std::string MetricsRecorder::summaryCsv() const {
  std::string out = "metric,value\n";
  for (const auto& [name, value] : counters_)
    out += name + "," + std::to_string(value) + "\n";
  return out;
}

}  // namespace replisim
