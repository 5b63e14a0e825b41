#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace rpack {

/// Coordinates; the second component is unused (zero) in 1D.
using Position = std::array<double, 2>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const Interval&) const = default;
};

enum class BoundaryMode { torus, dilate };

/// Axis-aligned box in 1 or 2 dimensions.
struct Box {
  int dim = 2;
  Position lo{0.0, 0.0};
  Position hi{0.0, 0.0};

  double volume() const;
  bool contains(const Position& p) const;
  bool operator==(const Box&) const = default;
};

/// Observation window. The simulation region is the window itself (torus) or the
/// window grown by `margin` on every side (dilate).
class Window {
 public:
  Window() = default;
  Window(int dim, std::vector<Interval> bounds, BoundaryMode mode, double margin = 0.0);

  static Window square(double side, BoundaryMode mode = BoundaryMode::torus, double margin = 0.0);
  static Window box(const Box& b, BoundaryMode mode = BoundaryMode::torus, double margin = 0.0);
  static Window segment(double length, BoundaryMode mode = BoundaryMode::torus,
                        double margin = 0.0);

  int dim() const { return dim_; }
  BoundaryMode mode() const { return mode_; }
  double margin() const { return margin_; }
  const Interval& axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }

  Box core() const;
  Box region() const;  ///< simulation region
  double volume() const { return core().volume(); }
  double region_volume() const { return region().volume(); }

  bool in_core(const Position& p) const { return core().contains(p); }
  bool in_region(const Position& p) const { return region().contains(p); }

  /// b − a, wrapped to the minimal image on a torus.
  Position displacement(const Position& a, const Position& b) const;
  double distance2(const Position& a, const Position& b) const;

  bool operator==(const Window&) const = default;

 private:
  int dim_ = 2;
  std::vector<Interval> axes_;
  BoundaryMode mode_ = BoundaryMode::torus;
  double margin_ = 0.0;
};

/// Plane displacement b − a.
inline Position plane_displacement(const Position& a, const Position& b) {
  return {b[0] - a[0], b[1] - a[1]};
}

inline double norm2(const Position& d) { return d[0] * d[0] + d[1] * d[1]; }

}  // namespace rpack
