#include "rpack/neighbor_grid.hpp"

#include <algorithm>
#include <cmath>

namespace rpack {

NeighborGrid::NeighborGrid(const Box& region, double radius, bool periodic,
                           std::size_t expected_points)
    : dim_(region.dim), periodic_(periodic), lo_(region.lo) {
  const double cap_total = std::max<double>(64.0, 4.0 * static_cast<double>(expected_points));
  const double cap_axis = dim_ == 2 ? std::sqrt(cap_total) : cap_total;
  for (int a = 0; a < 2; ++a) {
    const double len = a < dim_ ? region.hi[a] - region.lo[a] : 1.0;
    int n = 1;
    if (a < dim_ && radius > 0.0) n = static_cast<int>(std::floor(len / radius));
    n = std::clamp(n, 1, static_cast<int>(std::max(1.0, cap_axis)));
    n_[a] = n;
    width_[a] = len / n;
    std::vector<int> offs;
    if (a < dim_) {
      for (int d = -1; d <= 1; ++d) {
        if (periodic_) {
          const int canon = ((d % n) + n) % n;
          bool seen = false;
          for (int o : offs) seen |= (((o % n) + n) % n) == canon;
          if (seen) continue;
        }
        offs.push_back(d);
      }
    } else {
      offs.push_back(0);
    }
    offsets_[a] = std::move(offs);
  }
  cells_.resize(static_cast<std::size_t>(n_[0]) * n_[1]);
}

void NeighborGrid::clear() {
  for (auto& c : cells_) c.clear();
}

int NeighborGrid::cell_coord(const Position& p, int axis) const {
  int c = static_cast<int>(std::floor((p[axis] - lo_[axis]) / width_[axis]));
  if (periodic_) {
    c %= n_[axis];
    if (c < 0) c += n_[axis];
    return c;
  }
  return std::clamp(c, 0, n_[axis] - 1);
}

void NeighborGrid::insert(std::uint32_t index, const Position& p) {
  const int cx = cell_coord(p, 0);
  const int cy = dim_ == 2 ? cell_coord(p, 1) : 0;
  cells_[static_cast<std::size_t>(cy) * n_[0] + cx].push_back(index);
}

}  // namespace rpack
