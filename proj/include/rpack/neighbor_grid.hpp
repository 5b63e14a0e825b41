#pragma once

#include <cstdint>
#include <vector>

#include "rpack/geometry.hpp"

namespace rpack {

/// Uniform cell list over a box. Cells are at least `radius` wide so every point within
/// `radius` of a query lies in the 3^d block around the query cell.
class NeighborGrid {
 public:
  NeighborGrid(const Box& region, double radius, bool periodic, std::size_t expected_points = 0);

  void clear();
  void insert(std::uint32_t index, const Position& p);

  template <class F>
  void for_each_near(const Position& p, F&& fn) const {
    const int cx = cell_coord(p, 0);
    const int cy = dim_ == 2 ? cell_coord(p, 1) : 0;
    for (int dx : offsets_[0]) {
      const int ix = shift(cx, dx, 0);
      if (ix < 0) continue;
      for (int dy : offsets_[1]) {
        const int iy = dim_ == 2 ? shift(cy, dy, 1) : 0;
        if (iy < 0) continue;
        for (std::uint32_t j : cells_[static_cast<std::size_t>(iy) * n_[0] + ix]) fn(j);
      }
    }
  }

  int cells(int axis) const { return n_[axis]; }

 private:
  int cell_coord(const Position& p, int axis) const;
  int shift(int c, int d, int axis) const {
    int v = c + d;
    if (periodic_) {
      if (v < 0) v += n_[axis];
      if (v >= n_[axis]) v -= n_[axis];
      return v;
    }
    return (v < 0 || v >= n_[axis]) ? -1 : v;
  }

  int dim_;
  bool periodic_;
  Position lo_;
  Position width_;
  int n_[2] = {1, 1};
  std::vector<int> offsets_[2];
  std::vector<std::vector<std::uint32_t>> cells_;
};

}  // namespace rpack
