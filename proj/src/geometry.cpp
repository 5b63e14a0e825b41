#include "rpack/geometry.hpp"

#include <string>

#include "rpack/errors.hpp"

namespace rpack {

double Box::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim; ++i) v *= hi[i] - lo[i];
  return v;
}

bool Box::contains(const Position& p) const {
  for (int i = 0; i < dim; ++i)
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  return true;
}

Window::Window(int dim, std::vector<Interval> bounds, BoundaryMode mode, double margin)
    : dim_(dim), axes_(std::move(bounds)), mode_(mode), margin_(margin) {
  if (dim != 1 && dim != 2) throw InvalidArgument("window dimension must be 1 or 2");
  if (static_cast<int>(axes_.size()) != dim)
    throw InvalidArgument("window needs one interval per axis");
  for (const auto& a : axes_) {
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi))
      throw InvalidArgument("window bounds must be finite");
    if (!(a.hi > a.lo)) throw InvalidArgument("window interval must be nonempty");
  }
  if (!std::isfinite(margin) || margin < 0.0)
    throw InvalidArgument("dilate margin must be a finite nonnegative length");
  if (mode == BoundaryMode::torus) margin_ = 0.0;
}

Window Window::square(double side, BoundaryMode mode, double margin) {
  return Window(2, {{0.0, side}, {0.0, side}}, mode, margin);
}

Window Window::box(const Box& b, BoundaryMode mode, double margin) {
  std::vector<Interval> axes;
  for (int i = 0; i < b.dim; ++i) axes.push_back({b.lo[i], b.hi[i]});
  return Window(b.dim, std::move(axes), mode, margin);
}

Window Window::segment(double length, BoundaryMode mode, double margin) {
  return Window(1, {{0.0, length}}, mode, margin);
}

Box Window::core() const {
  Box b;
  b.dim = dim_;
  for (int i = 0; i < dim_; ++i) {
    b.lo[i] = axes_[i].lo;
    b.hi[i] = axes_[i].hi;
  }
  return b;
}

Box Window::region() const {
  Box b = core();
  for (int i = 0; i < dim_; ++i) {
    b.lo[i] -= margin_;
    b.hi[i] += margin_;
  }
  return b;
}

Position Window::displacement(const Position& a, const Position& b) const {
  Position d{0.0, 0.0};
  for (int i = 0; i < dim_; ++i) {
    d[i] = b[i] - a[i];
    if (mode_ == BoundaryMode::torus) {
      const double len = axes_[i].length();
      d[i] -= len * std::nearbyint(d[i] / len);
    }
  }
  return d;
}

double Window::distance2(const Position& a, const Position& b) const {
  return norm2(displacement(a, b));
}

}  // namespace rpack
