#include "rpack/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rpack/errors.hpp"

namespace rpack {

TimedPattern sample_poisson(const Window& window, const IntensityModel& intensity, double t_max,
                            const SeedSpec& seed) {
  if (!std::isfinite(t_max) || t_max <= 0.0) throw InvalidArgument("t_max must be > 0");
  const Box region = window.region();
  const double mean = t_max * intensity.rate_max() * region.volume();
  if (!std::isfinite(mean)) throw InvalidArgument("window volume must be finite");

  TimedPattern out;
  out.window = window;
  out.horizon = t_max;
  if (mean <= 0.0) return out;

  CounterEngine count_engine(seed.master_seed, stream::count, seed.positions);
  std::poisson_distribution<std::int64_t> count_dist(mean);
  const std::int64_t n = count_dist(count_engine);

  const std::uint64_t s = seed.master_seed;
  const bool rejection = !intensity.is_homogeneous();
  out.points.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    TimedPoint p;
    p.id = i;
    for (int a = 0; a < window.dim(); ++a)
      p.pos[a] = region.lo[a] + (region.hi[a] - region.lo[a]) *
                                    counter_uniform(s, seed.positions, idx, static_cast<std::uint32_t>(a));
    if (rejection) {
      const double lam = intensity.at(p.pos);
      if (!(lam <= intensity.rate_max()) || lam < 0.0)
        throw InvalidArgument("intensity exceeds its declared bound during rejection sampling");
      if (counter_uniform(s, seed.positions, idx, 2) * intensity.rate_max() >= lam) continue;
    }
    p.timer = t_max * counter_uniform(s, seed.timers, idx);
    if (p.timer >= t_max) p.timer = std::nextafter(t_max, 0.0);
    out.points.push_back(p);
  }
  validate_pattern(out);
  return out;
}

TimedPattern timer_thin(const TimedPattern& pattern, TimerInterval interval) {
  TimedPattern out;
  out.window = pattern.window;
  out.horizon = pattern.horizon;
  for (const auto& p : pattern.points)
    if (p.timer >= interval.lo && p.timer < interval.hi) out.points.push_back(p);
  return out;
}

std::vector<std::uint32_t> timer_order(const TimedPattern& pattern, std::size_t* ties) {
  std::vector<std::uint32_t> order(pattern.size());
  std::iota(order.begin(), order.end(), 0u);
  const auto& pts = pattern.points;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (pts[a].timer != pts[b].timer) return pts[a].timer < pts[b].timer;
    return pts[a].id < pts[b].id;
  });
  if (ties) {
    *ties = 0;
    for (std::size_t i = 1; i < order.size(); ++i)
      if (pts[order[i]].timer == pts[order[i - 1]].timer) ++*ties;
  }
  return order;
}

void validate_pattern(const TimedPattern& pattern) {
  const auto& pts = pattern.points;
  std::vector<std::uint32_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(),
            [&](std::uint32_t a, std::uint32_t b) { return pts[a].pos < pts[b].pos; });
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (pts[idx[i]].pos == pts[idx[i - 1]].pos)
      throw InvariantViolation("pattern is not simple: repeated coordinates");
  std::sort(idx.begin(), idx.end(),
            [&](std::uint32_t a, std::uint32_t b) { return pts[a].id < pts[b].id; });
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (pts[idx[i]].id == pts[idx[i - 1]].id)
      throw InvariantViolation("duplicate point id " + std::to_string(pts[idx[i]].id));
  for (const auto& p : pts)
    if (!(p.timer >= 0.0 && p.timer < pattern.horizon))
      throw InvariantViolation("timer outside [0, horizon)");
}

}  // namespace rpack
