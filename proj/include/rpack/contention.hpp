#pragma once

#include <cstdint>
#include <optional>

#include "rpack/geometry.hpp"
#include "rpack/intensity.hpp"
#include "rpack/pattern.hpp"
#include "rpack/quadrature.hpp"
#include "rpack/rng.hpp"

namespace rpack {

/// Translation-invariant pair contention probability h(x,y) = h(0, y−x).
class ContentionKernel {
 public:
  enum class Kind { hard_disc, bernoulli_disc, rayleigh };

  static constexpr double default_trunc_eps = 1e-9;

  /// h = 1 for |d| < 2r. hard_disc(0) is the contention-free kernel.
  static ContentionKernel hard_disc(double r);
  /// h = q for |d| < 2r.
  static ContentionKernel bernoulli_disc(double r, double q);
  /// h = exp(−|d|²/θ).
  static ContentionKernel rayleigh(double theta);
  static ContentionKernel none() { return hard_disc(0.0); }

  ContentionKernel with_trunc_eps(double eps) const;

  Kind kind() const { return kind_; }
  double r() const { return r_; }
  double q() const { return q_; }
  double theta() const { return theta_; }
  double trunc_eps() const { return trunc_eps_; }
  bool compact() const { return kind_ != Kind::rayleigh; }
  /// h ≡ 0.
  bool is_null() const;

  /// h as a function of the squared distance.
  double profile(double d2) const {
    switch (kind_) {
      case Kind::hard_disc: return d2 < reach2_ ? 1.0 : 0.0;
      case Kind::bernoulli_disc: return d2 < reach2_ ? q_ : 0.0;
      case Kind::rayleigh: return std::exp(-d2 / theta_);
    }
    return 0.0;
  }
  double operator()(const Position& x, const Position& y) const {
    return profile(norm2(plane_displacement(x, y)));
  }

  /// N = ∫h(0,x)dx in dimension `dim` (closed form).
  double mass(int dim) const;
  /// Smallest R with ∫_{|x|>R} h(0,x)dx ≤ eps; the support radius for compact kernels.
  double interaction_radius(int dim, double eps) const;
  /// Radius used for graph construction.
  double cutoff(int dim) const { return interaction_radius(dim, trunc_eps_); }

  /// Sample an offset from the normalized density h(0,·)/N, from three uniforms.
  Position sample_offset(int dim, double u1, double u2, double u3) const;

  /// ∫_box h(x,y) dy.
  double box_integral(const Position& x, const Box& box) const;
  /// ∫_{|y−c|<radius} h(x,y) dy.
  double disc_integral(const Position& x, const Position& c, double radius, int dim) const;

  bool operator==(const ContentionKernel& o) const {
    return kind_ == o.kind_ && r_ == o.r_ && q_ == o.q_ && theta_ == o.theta_ &&
           trunc_eps_ == o.trunc_eps_;
  }

 private:
  Kind kind_ = Kind::hard_disc;
  double r_ = 0.0;
  double q_ = 1.0;
  double theta_ = 0.0;
  double reach2_ = 0.0;
  double trunc_eps_ = default_trunc_eps;
};

inline double h_eval(const ContentionKernel& k, const Position& x, const Position& y) {
  return k(x, y);
}

enum class MassScope { geometric, weighted };

/// N (geometric) or 𝒩 = sup_x ∫h(x,y)λ(y)dy (weighted, grid approximation for densities).
double kernel_mass(const ContentionKernel& kernel, int dim, MassScope scope,
                   const IntensityModel* intensity = nullptr, const Box* domain = nullptr);

/// N by radial quadrature, independent of the closed forms.
QuadResult kernel_mass_quadrature(const ContentionKernel& kernel, int dim);

double interaction_radius(const ContentionKernel& kernel, int dim, double eps);

/// Deterministic realization of the Boolean contention field.
class ContentionField {
 public:
  ContentionField(ContentionKernel kernel, std::uint64_t seed,
                  std::uint32_t label = stream::field, std::optional<Window> geometry = {});
  ContentionField(ContentionKernel kernel, const SeedSpec& seed,
                  std::optional<Window> geometry = {})
      : ContentionField(std::move(kernel), seed.master_seed, seed.field, std::move(geometry)) {}

  const ContentionKernel& kernel() const { return kernel_; }
  const std::optional<Window>& geometry() const { return geometry_; }
  int dim() const { return geometry_ ? geometry_->dim() : 2; }
  double cutoff() const { return cutoff_; }

  /// Uniform keyed by the unordered id pair.
  double pair_uniform(std::int64_t a, std::int64_t b) const;

  double distance2(const Position& a, const Position& b) const {
    return geometry_ ? geometry_->distance2(a, b) : norm2(plane_displacement(a, b));
  }

  /// Contention given the squared distance; ids must differ.
  bool contends(std::int64_t ida, std::int64_t idb, double d2) const;
  bool contends(const TimedPoint& a, const TimedPoint& b) const {
    return contends(a.id, b.id, distance2(a.pos, b.pos));
  }

 private:
  ContentionKernel kernel_;
  std::uint64_t seed_;
  std::uint32_t label_;
  std::optional<Window> geometry_;
  double cutoff_ = 0.0;
  double cutoff2_ = 0.0;
  std::uint64_t key_ = 0;
};

}  // namespace rpack
