#include "rpack/test_function.hpp"

#include <algorithm>
#include <cmath>

#include "rpack/errors.hpp"
#include "rpack/quadrature.hpp"

namespace rpack {

Region Region::make_box(const Box& b, double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw InvalidArgument("region coefficient must lie in [0,1]");
  for (int a = 0; a < b.dim; ++a)
    if (!(b.hi[a] > b.lo[a])) throw InvalidArgument("region box must be nonempty");
  Region r;
  r.shape = Shape::box;
  r.box = b;
  r.c = c;
  return r;
}

Region Region::make_disc(int dim, const Position& center, double radius, double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw InvalidArgument("region coefficient must lie in [0,1]");
  if (!(radius > 0.0)) throw InvalidArgument("region disc radius must be > 0");
  Region r;
  r.shape = Shape::disc;
  r.center = center;
  r.radius = radius;
  r.c = c;
  r.box = Box{dim, {center[0] - radius, dim == 2 ? center[1] - radius : 0.0},
              {center[0] + radius, dim == 2 ? center[1] + radius : 0.0}};
  return r;
}

bool Region::contains(const Position& p) const {
  if (shape == Shape::box) return box.contains(p);
  return norm2(plane_displacement(center, p)) < radius * radius;
}

double Region::volume() const {
  if (shape == Shape::box) return box.volume();
  return dim() == 1 ? 2.0 * radius : M_PI * radius * radius;
}

Box Region::bounds() const { return box; }

namespace {

bool interiors_overlap(const Region& a, const Region& b) {
  const int d = a.dim();
  for (int i = 0; i < d; ++i)
    if (a.box.hi[i] <= b.box.lo[i] || b.box.hi[i] <= a.box.lo[i]) return false;
  if (a.shape == Region::Shape::box && b.shape == Region::Shape::box) return true;
  if (a.shape == Region::Shape::disc && b.shape == Region::Shape::disc)
    return norm2(plane_displacement(a.center, b.center)) < (a.radius + b.radius) * (a.radius + b.radius);
  const Region& disc = a.shape == Region::Shape::disc ? a : b;
  const Region& box = a.shape == Region::Shape::disc ? b : a;
  Position nearest = disc.center;
  for (int i = 0; i < d; ++i) nearest[i] = std::clamp(nearest[i], box.box.lo[i], box.box.hi[i]);
  return norm2(plane_displacement(disc.center, nearest)) < disc.radius * disc.radius;
}

}  // namespace

TestFunction TestFunction::one(int dim) {
  if (dim != 1 && dim != 2) throw InvalidArgument("dimension must be 1 or 2");
  TestFunction v;
  v.dim_ = dim;
  return v;
}

TestFunction TestFunction::indicator_mix(std::vector<Region> regions) {
  TestFunction v;
  if (!regions.empty()) v.dim_ = regions.front().dim();
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].dim() != v.dim_) throw InvalidArgument("regions must share a dimension");
    for (std::size_t j = 0; j < i; ++j)
      if (interiors_overlap(regions[i], regions[j]))
        throw InvalidArgument("test-function regions must be disjoint");
  }
  std::erase_if(regions, [](const Region& r) { return r.c == 0.0; });
  v.regions_ = std::move(regions);
  return v;
}

TestFunction TestFunction::transformed(const Position& x, const ContentionKernel& k) const {
  return with_anchors({x}, k);
}

TestFunction TestFunction::with_anchors(const std::vector<Position>& xs,
                                        const ContentionKernel& k) const {
  if (kernel_ && !(*kernel_ == k))
    throw InvalidArgument("all H-transform factors of a test function must use one kernel");
  TestFunction v = *this;
  v.kernel_ = k;
  v.anchors_.insert(v.anchors_.end(), xs.begin(), xs.end());
  return v;
}

double TestFunction::base(const Position& y) const {
  for (const auto& r : regions_)
    if (r.contains(y)) return 1.0 - r.c;
  return 1.0;
}

double TestFunction::operator()(const Position& y) const {
  double v = base(y);
  if (v == 0.0 || anchors_.empty()) return v;
  for (const auto& a : anchors_) {
    v *= 1.0 - (*kernel_)(a, y);
    if (v == 0.0) break;
  }
  return v;
}

double TestFunction::eval(const Position& y, const Window& geom) const {
  double v = base(y);
  if (v == 0.0 || anchors_.empty()) return v;
  for (const auto& a : anchors_) {
    v *= 1.0 - kernel_->profile(geom.distance2(a, y));
    if (v == 0.0) break;
  }
  return v;
}

bool TestFunction::is_one() const { return regions_.empty() && !has_anchors(); }

double TestFunction::base_deficiency_volume() const {
  double s = 0.0;
  for (const auto& r : regions_) s += r.c * r.volume();
  return s;
}

double TestFunction::deficiency(const IntensityModel& intensity) const {
  double base_part = 0.0;
  if (intensity.is_homogeneous()) {
    base_part = intensity.rate_max() * base_deficiency_volume();
  } else {
    for (const auto& r : regions_)
      base_part += r.c * integrate_box(
                             [&](const Position& y) { return r.contains(y) ? intensity.at(y) : 0.0; },
                             r.bounds(), 1e-8)
                             .value;
  }
  if (!has_anchors()) return base_part;
  // ∫ base(y) (1 − ∏(1 − h(a,y))) λ(y) dy over the anchor supports.
  double extra = 0.0;
  for (const auto& cell : support_cells({this})) {
    extra += integrate_box(
                 [&](const Position& y) {
                   double prod = 1.0;
                   for (const auto& a : anchors_) prod *= 1.0 - (*kernel_)(a, y);
                   return base(y) * (1.0 - prod) * intensity.at(y);
                 },
                 cell, 1e-7, 10)
                 .value;
  }
  return base_part + extra;
}

double TestFunction::deficiency_bound(const IntensityModel& intensity) const {
  double b = intensity.rate_max() * base_deficiency_volume();
  if (has_anchors())
    b += static_cast<double>(anchors_.size()) * intensity.rate_max() * kernel_->mass(dim_);
  return b;
}

std::optional<Box> TestFunction::support_bounds() const {
  std::optional<Box> out;
  auto grow = [&](const Box& b) {
    if (!out) {
      out = b;
      return;
    }
    for (int i = 0; i < dim_; ++i) {
      out->lo[i] = std::min(out->lo[i], b.lo[i]);
      out->hi[i] = std::max(out->hi[i], b.hi[i]);
    }
  };
  for (const auto& r : regions_) grow(r.bounds());
  if (has_anchors()) {
    const double R = kernel_->cutoff(dim_);
    for (const auto& a : anchors_)
      grow(Box{dim_, {a[0] - R, dim_ == 2 ? a[1] - R : 0.0}, {a[0] + R, dim_ == 2 ? a[1] + R : 0.0}});
  }
  return out;
}

std::vector<Box> support_cells(const std::vector<const TestFunction*>& fs) {
  std::vector<Box> cells;
  if (fs.empty()) return cells;
  const int dim = fs.front()->dim();
  std::vector<double> cuts[2];
  std::vector<Box> pieces;
  for (const auto* f : fs) {
    for (const auto& r : f->regions()) pieces.push_back(r.bounds());
    if (f->has_anchors()) {
      const double R = f->kernel()->cutoff(dim);
      for (const auto& a : f->anchors())
        pieces.push_back(Box{dim, {a[0] - R, dim == 2 ? a[1] - R : 0.0},
                             {a[0] + R, dim == 2 ? a[1] + R : 0.0}});
    }
  }
  for (const auto& b : pieces)
    for (int i = 0; i < dim; ++i) {
      cuts[i].push_back(b.lo[i]);
      cuts[i].push_back(b.hi[i]);
    }
  for (int i = 0; i < dim; ++i) {
    std::sort(cuts[i].begin(), cuts[i].end());
    cuts[i].erase(std::unique(cuts[i].begin(), cuts[i].end()), cuts[i].end());
  }
  if (dim == 1) cuts[1] = {0.0, 0.0};
  auto covered = [&](const Box& c) {
    for (const auto& b : pieces) {
      bool inside = true;
      for (int i = 0; i < dim; ++i)
        inside &= c.lo[i] >= b.lo[i] && c.hi[i] <= b.hi[i];
      if (inside) return true;
    }
    return false;
  };
  for (std::size_t i = 1; i < cuts[0].size(); ++i) {
    const std::size_t ny = dim == 2 ? cuts[1].size() : 2;
    for (std::size_t j = 1; j < ny; ++j) {
      Box c{dim, {cuts[0][i - 1], dim == 2 ? cuts[1][j - 1] : 0.0},
            {cuts[0][i], dim == 2 ? cuts[1][j] : 0.0}};
      if (covered(c)) cells.push_back(c);
    }
  }
  return cells;
}

}  // namespace rpack
