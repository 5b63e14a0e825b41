#pragma once

#include <cstdint>
#include <vector>

#include "rpack/geometry.hpp"
#include "rpack/intensity.hpp"
#include "rpack/rng.hpp"

namespace rpack {

struct TimedPoint {
  std::int64_t id = 0;
  Position pos{0.0, 0.0};
  double timer = 0.0;
};

struct TimedPattern {
  std::vector<TimedPoint> points;
  Window window;
  double horizon = 1.0;

  std::size_t size() const { return points.size(); }
};

/// Half-open timer interval [lo, hi).
struct TimerInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Poisson process on window-region × [0, t_max) with ids 0.. in candidate order.
TimedPattern sample_poisson(const Window& window, const IntensityModel& intensity, double t_max,
                            const SeedSpec& seed);

TimedPattern timer_thin(const TimedPattern& pattern, TimerInterval interval);

/// Indices sorted by (timer, id). `ties` receives the number of equal-timer neighbours.
std::vector<std::uint32_t> timer_order(const TimedPattern& pattern, std::size_t* ties = nullptr);

/// Throws InvariantViolation on duplicate ids, duplicate positions, or timers outside the horizon.
void validate_pattern(const TimedPattern& pattern);

}  // namespace rpack
