#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>

namespace primo {

// Virtual simulation time. Stored as integer ticks (1 time unit = 1000
// ticks) so that fractional configuration values such as a 0.5-unit retry
// backoff stay exact and every run is bit-reproducible.
using SimTime = std::int64_t;

inline constexpr SimTime kTicksPerUnit = 1000;

template <std::integral T>
constexpr SimTime sim_units(T units) {
    return static_cast<SimTime>(units) * kTicksPerUnit;
}

inline SimTime sim_units(double units) {
    return static_cast<SimTime>(std::llround(units * static_cast<double>(kTicksPerUnit)));
}

constexpr double to_units(SimTime t) { return static_cast<double>(t) / static_cast<double>(kTicksPerUnit); }

// Fixed-point rendering (three decimals), used by the event trace so that
// equal runs produce byte-identical files.
inline std::string format_time(SimTime t) {
    bool neg = t < 0;
    std::uint64_t v = neg ? static_cast<std::uint64_t>(-t) : static_cast<std::uint64_t>(t);
    std::string frac = std::to_string(v % kTicksPerUnit);
    frac.insert(0, 3 - frac.size(), '0');
    return (neg ? "-" : "") + std::to_string(v / kTicksPerUnit) + "." + frac;
}

}  // namespace primo
