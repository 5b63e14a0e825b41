#include "rpack/contention.hpp"

#include <algorithm>
#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "rpack/errors.hpp"

namespace rpack {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

double erf_window(double lo, double hi, double theta) {
  const double s = std::sqrt(theta);
  return 0.5 * std::sqrt(kPi * theta) * (std::erf(hi / s) - std::erf(lo / s));
}

double lens_area(double d, double a, double b) {
  if (a <= 0.0 || b <= 0.0 || d >= a + b) return 0.0;
  if (d <= std::abs(a - b)) {
    const double m = std::min(a, b);
    return kPi * m * m;
  }
  const double ca = std::clamp((d * d + a * a - b * b) / (2.0 * d * a), -1.0, 1.0);
  const double cb = std::clamp((d * d + b * b - a * a) / (2.0 * d * b), -1.0, 1.0);
  const double k = (-d + a + b) * (d + a - b) * (d - a + b) * (d + a + b);
  return a * a * std::acos(ca) + b * b * std::acos(cb) - 0.5 * std::sqrt(std::max(0.0, k));
}

}  // namespace

ContentionKernel ContentionKernel::hard_disc(double r) {
  if (!std::isfinite(r) || r < 0.0) throw InvalidArgument("disc radius must be >= 0");
  ContentionKernel k;
  k.kind_ = Kind::hard_disc;
  k.r_ = r;
  k.reach2_ = 4.0 * r * r;
  return k;
}

ContentionKernel ContentionKernel::bernoulli_disc(double r, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("contention probability must lie in [0,1]");
  ContentionKernel k = hard_disc(r);
  k.kind_ = Kind::bernoulli_disc;
  k.q_ = q;
  return k;
}

ContentionKernel ContentionKernel::rayleigh(double theta) {
  if (!std::isfinite(theta) || theta <= 0.0) throw InvalidArgument("rayleigh theta must be > 0");
  ContentionKernel k;
  k.kind_ = Kind::rayleigh;
  k.theta_ = theta;
  return k;
}

ContentionKernel ContentionKernel::with_trunc_eps(double eps) const {
  if (!(eps > 0.0)) throw InvalidArgument("trunc_eps must be > 0");
  ContentionKernel k = *this;
  k.trunc_eps_ = eps;
  return k;
}

bool ContentionKernel::is_null() const {
  switch (kind_) {
    case Kind::hard_disc: return r_ == 0.0;
    case Kind::bernoulli_disc: return r_ == 0.0 || q_ == 0.0;
    case Kind::rayleigh: return false;
  }
  return false;
}

double ContentionKernel::mass(int dim) const {
  const double reach = 2.0 * r_;
  switch (kind_) {
    case Kind::hard_disc: return dim == 1 ? 2.0 * reach : kPi * reach * reach;
    case Kind::bernoulli_disc: return q_ * (dim == 1 ? 2.0 * reach : kPi * reach * reach);
    case Kind::rayleigh: return dim == 1 ? std::sqrt(kPi * theta_) : kPi * theta_;
  }
  return 0.0;
}

double ContentionKernel::interaction_radius(int dim, double eps) const {
  if (!(eps > 0.0)) throw InvalidArgument("interaction radius tolerance must be > 0");
  if (compact()) return is_null() ? 0.0 : 2.0 * r_;
  const double n = mass(dim);
  if (eps >= n) return 0.0;
  if (dim == 1) return std::sqrt(theta_) * boost::math::erfc_inv(eps / n);
  return std::sqrt(theta_ * std::log(n / eps));
}

Position ContentionKernel::sample_offset(int dim, double u1, double u2, double u3) const {
  (void)u3;
  if (compact()) {
    const double reach = 2.0 * r_;
    if (dim == 1) return {reach * (2.0 * u1 - 1.0), 0.0};
    const double rho = reach * std::sqrt(u1);
    const double phi = 2.0 * kPi * u2;
    return {rho * std::cos(phi), rho * std::sin(phi)};
  }
  const double rho = std::sqrt(-theta_ * std::log1p(-u1));
  const double phi = 2.0 * kPi * u2;
  if (dim == 1) return {rho * std::cos(phi), 0.0};
  return {rho * std::cos(phi), rho * std::sin(phi)};
}

namespace {

/// Area of the origin-centred disc of radius R inside {u < X, w < Y}.
double quadrant_area(double R, double X, double Y) {
  if (X <= -R || Y <= -R) return 0.0;
  auto prim = [R](double u) {
    u = std::clamp(u, -R, R);
    return 0.5 * (u * std::sqrt(std::max(0.0, R * R - u * u)) + R * R * std::asin(u / R));
  };
  const double Xc = std::min(X, R);
  if (Y >= R) return 2.0 * (prim(Xc) - prim(-R));
  const double w = std::sqrt(R * R - Y * Y);
  double area = 0.0;
  // |u| < w: chord clipped at Y from above, width Y + s(u).
  const double a = -w, b = std::min(Xc, w);
  if (b > a) area += Y * (b - a) + (prim(b) - prim(a));
  if (Y > 0.0) {
    // |u| ≥ w: full chord.
    if (Xc > -R) area += 2.0 * (prim(std::min(Xc, -w)) - prim(-R));
    if (Xc > w) area += 2.0 * (prim(Xc) - prim(w));
  }
  return area;
}

}  // namespace

double ContentionKernel::box_integral(const Position& x, const Box& box) const {
  if (is_null()) return 0.0;
  if (kind_ == Kind::rayleigh) {
    double v = erf_window(box.lo[0] - x[0], box.hi[0] - x[0], theta_);
    if (box.dim == 2) v *= erf_window(box.lo[1] - x[1], box.hi[1] - x[1], theta_);
    return v;
  }
  const double reach = 2.0 * r_;
  const double scale = kind_ == Kind::bernoulli_disc ? q_ : 1.0;
  if (box.dim == 1) {
    return scale *
           std::max(0.0, std::min(box.hi[0], x[0] + reach) - std::max(box.lo[0], x[0] - reach));
  }
  const double dx1 = box.lo[0] - x[0], dx2 = box.hi[0] - x[0];
  const double dy1 = box.lo[1] - x[1], dy2 = box.hi[1] - x[1];
  const double area = quadrant_area(reach, dx2, dy2) - quadrant_area(reach, dx1, dy2) -
                      quadrant_area(reach, dx2, dy1) + quadrant_area(reach, dx1, dy1);
  return scale * std::max(0.0, area);
}

double ContentionKernel::disc_integral(const Position& x, const Position& c, double radius,
                                       int dim) const {
  if (is_null() || radius <= 0.0) return 0.0;
  if (dim == 1) {
    Box b{1, {c[0] - radius, 0.0}, {c[0] + radius, 0.0}};
    return box_integral(x, b);
  }
  if (compact()) {
    const double scale = kind_ == Kind::bernoulli_disc ? q_ : 1.0;
    return scale * lens_area(std::sqrt(norm2(plane_displacement(x, c))), 2.0 * r_, radius);
  }
  auto strip = [&](double y1) {
    const double dy = y1 - c[0];
    const double w = std::sqrt(std::max(0.0, radius * radius - dy * dy));
    const double gx = std::exp(-(y1 - x[0]) * (y1 - x[0]) / theta_);
    return gx * erf_window(c[1] - w - x[1], c[1] + w - x[1], theta_);
  };
  return integrate_1d(strip, c[0] - radius, c[0] + radius, 1e-11).value;
}

double kernel_mass(const ContentionKernel& kernel, int dim, MassScope scope,
                   const IntensityModel* intensity, const Box* domain) {
  const double n = kernel.mass(dim);
  if (scope == MassScope::geometric) return n;
  if (!intensity) throw InvalidArgument("weighted kernel mass needs an intensity");
  if (intensity->is_homogeneous()) return intensity->rate_max() * n;
  if (!domain) throw InvalidArgument("weighted kernel mass of a density intensity needs a domain");
  const double reach = kernel.interaction_radius(dim, 1e-12);
  double best = 0.0;
  constexpr int kGrid = 8;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < (dim == 2 ? kGrid : 1); ++j) {
      Position x{domain->lo[0] + (i + 0.5) / kGrid * (domain->hi[0] - domain->lo[0]),
                 dim == 2 ? domain->lo[1] + (j + 0.5) / kGrid * (domain->hi[1] - domain->lo[1])
                          : 0.0};
      double value;
      if (dim == 1) {
        value = integrate_1d([&](double s) { return kernel.profile(s * s) * intensity->at({x[0] + s, 0.0}); },
                             -reach, reach, 1e-9).value;
      } else {
        auto ring = [&](double rho) {
          auto around = [&](double phi) {
            return intensity->at({x[0] + rho * std::cos(phi), x[1] + rho * std::sin(phi)});
          };
          return rho * kernel.profile(rho * rho) * integrate_1d(around, 0.0, 2.0 * kPi, 1e-9).value;
        };
        value = integrate_1d(ring, 0.0, reach, 1e-9).value;
      }
      best = std::max(best, value);
    }
  }
  return best;
}

QuadResult kernel_mass_quadrature(const ContentionKernel& kernel, int dim) {
  auto radial = [&](double rho) { return kernel.profile(rho * rho); };
  const double upper = kernel.compact() ? 2.0 * kernel.r() : std::numeric_limits<double>::infinity();
  if (upper == 0.0) return {0.0, 0.0};
  if (dim == 1) {
    auto r = integrate_1d(radial, 0.0, upper, 1e-12);
    return {2.0 * r.value, 2.0 * r.error};
  }
  auto r = integrate_1d([&](double rho) { return rho * radial(rho); }, 0.0, upper, 1e-12);
  return {2.0 * kPi * r.value, 2.0 * kPi * r.error};
}

double interaction_radius(const ContentionKernel& kernel, int dim, double eps) {
  return kernel.interaction_radius(dim, eps);
}

ContentionField::ContentionField(ContentionKernel kernel, std::uint64_t seed, std::uint32_t label,
                                 std::optional<Window> geometry)
    : kernel_(std::move(kernel)), seed_(seed), label_(label), geometry_(std::move(geometry)) {
  cutoff_ = kernel_.cutoff(dim());
  cutoff2_ = cutoff_ * cutoff_;
  key_ = counter_bits(seed_, label_, 0, 0xF1E1Du);
}

double ContentionField::pair_uniform(std::int64_t a, std::int64_t b) const {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  const std::uint64_t key = key_;
  const auto out = philox4x32(
      {static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(lo >> 32),
       static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)},
      {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)});
  return bits_to_unit((static_cast<std::uint64_t>(out[0]) << 32) | out[1]);
}

bool ContentionField::contends(std::int64_t ida, std::int64_t idb, double d2) const {
  if (ida == idb) throw InvalidArgument("a point cannot contend with itself");
  if (!(d2 < cutoff2_)) return false;
  const double h = kernel_.profile(d2);
  if (h >= 1.0) return true;
  if (h <= 0.0) return false;
  return pair_uniform(ida, idb) < h;
}

}  // namespace rpack
