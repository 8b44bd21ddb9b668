#pragma once

#include <cstdint>

namespace replisim {

// Virtual time in milliseconds since scenario start. The simulation never
// reads a wall clock; every timestamp in the system derives from this type.
using VirtualMs = std::int64_t;

inline constexpr VirtualMs kSecondMs = 1000;
inline constexpr VirtualMs kMinuteMs = 60 * kSecondMs;
inline constexpr VirtualMs kHourMs = 60 * kMinuteMs;
inline constexpr VirtualMs kDayMs = 24 * kHourMs;
// Calendar-free month: 30 virtual days.
inline constexpr VirtualMs kMonthMs = 30 * kDayMs;

constexpr VirtualMs secondsMs(std::int64_t s) { return s * kSecondMs; }
constexpr VirtualMs minutesMs(std::int64_t m) { return m * kMinuteMs; }
constexpr VirtualMs hoursMs(std::int64_t h) { return h * kHourMs; }
constexpr VirtualMs daysMs(std::int64_t d) { return d * kDayMs; }
constexpr VirtualMs monthsMs(std::int64_t m) { return m * kMonthMs; }

}  // namespace replisim
