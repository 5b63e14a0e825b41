#include "rpack/functional.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "rpack/errors.hpp"
#include "rpack/parallel.hpp"
#include "rpack/quadrature.hpp"
#include "rpack/rng.hpp"
#include "rpack/stats.hpp"

namespace rpack {

std::string method_name(GfMethod m) {
  switch (m) {
    case GfMethod::series: return "series";
    case GfMethod::bound_lower: return "bound_lower";
    case GfMethod::bound_upper: return "bound_upper";
    case GfMethod::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

double series_tail_bound(double t, double M, double NN, int K) {
  if (t <= 0.0 || M <= 0.0) return 0.0;
  if (t * NN >= 1.0)
    throw NumericalError("series has no convergence certificate: t * weighted kernel mass >= 1");
  double term = 1.0;
  for (int k = 0; k <= K; ++k) term *= t * (M + k * NN) / (k + 1);
  double sum = 0.0;
  for (long k = K + 1; k < K + 200000L; ++k) {
    sum += term;
    const double r = t * (M + static_cast<double>(k) * NN) / static_cast<double>(k + 1);
    const double rho = std::max(r, t * NN);
    if (rho < 0.5 || (rho < 1.0 && term < 1e-300)) return sum + term * rho / (1.0 - rho);
    term *= r;
  }
  throw NumericalError("series tail bound did not settle");
}

namespace {

/// Importance sampler for series paths: x_i is drawn from the mixture proportional to
/// (1 − base) + Σ_anchors h(a,·) + Σ_{j<i} h(x_j,·), whose mass is Z_i.
class PathSampler {
 public:
  PathSampler(const TestFunction& v, const ContentionKernel& kernel)
      : v_(v), kernel_(kernel), dim_(v.dim()), n_(kernel.mass(v.dim())) {
    for (const auto& r : v.regions()) {
      base_mass_ += r.c * r.volume();
      cum_.push_back(base_mass_);
    }
    if (v.has_anchors()) anchors_ = v.anchors();
  }

  double mass(int i) const {
    return base_mass_ + static_cast<double>(anchors_.size() + static_cast<std::size_t>(i - 1)) * n_;
  }

  /// Fills w[0..K] with running products of f_i/g_i and the path itself.
  void draw(std::uint64_t seed, std::uint64_t s, int K, double* w,
            std::vector<Position>& path) const {
    path.clear();
    w[0] = 1.0;
    double prod = 1.0;
    for (int i = 1; i <= K; ++i) {
      if (prod == 0.0 || mass(i) <= 0.0) {
        w[i] = 0.0;
        prod = 0.0;
        continue;
      }
      const auto sub = static_cast<std::uint32_t>(4 * i);
      const double u0 = counter_uniform(seed, stream::cubature, s, sub);
      const double u1 = counter_uniform(seed, stream::cubature, s, sub + 1);
      const double u2 = counter_uniform(seed, stream::cubature, s, sub + 2);
      const double pick = u0 * mass(i);
      Position x{0.0, 0.0};
      if (pick < base_mass_) {
        std::size_t j = 0;
        while (j + 1 < cum_.size() && pick >= cum_[j]) ++j;
        x = sample_region(v_.regions()[j], u1, u2);
      } else {
        auto idx = static_cast<std::size_t>((pick - base_mass_) / n_);
        idx = std::min(idx, anchors_.size() + path.size() - 1);
        const Position& c = idx < anchors_.size() ? anchors_[idx] : path[idx - anchors_.size()];
        const auto off = kernel_.sample_offset(dim_, u1, u2, 0.0);
        x = {c[0] + off[0], c[1] + off[1]};
      }
      double g = 1.0 - v_.base(x);
      for (const auto& a : anchors_) g += kernel_(a, x);
      double keep = v_(x);
      for (const auto& p : path) {
        const double h = kernel_(p, x);
        g += h;
        keep *= 1.0 - h;
      }
      const double f = 1.0 - keep;
      prod *= g > 0.0 ? std::min(1.0, f / g) : 0.0;
      w[i] = prod;
      path.push_back(x);
    }
  }

 private:
  Position sample_region(const Region& r, double u1, double u2) const {
    if (r.shape == Region::Shape::box) {
      return {r.box.lo[0] + u1 * (r.box.hi[0] - r.box.lo[0]),
              dim_ == 2 ? r.box.lo[1] + u2 * (r.box.hi[1] - r.box.lo[1]) : 0.0};
    }
    if (dim_ == 1) return {r.center[0] + r.radius * (2.0 * u1 - 1.0), 0.0};
    const double rho = r.radius * std::sqrt(u1);
    const double phi = 2.0 * M_PI * u2;
    return {r.center[0] + rho * std::cos(phi), r.center[1] + rho * std::sin(phi)};
  }

  const TestFunction& v_;
  const ContentionKernel& kernel_;
  int dim_;
  double n_;
  double base_mass_ = 0.0;
  std::vector<double> cum_;
  std::vector<Position> anchors_;
};

void require_series_inputs(double t, const IntensityModel& intensity, int order) {
  if (!std::isfinite(t) || t < 0.0) throw InvalidArgument("t must be a finite value >= 0");
  if (!intensity.is_homogeneous())
    throw InvalidArgument("series evaluation needs a homogeneous intensity");
  if (order < 1) throw InvalidArgument("series order must be >= 1");
}

double exact_or_bound_deficiency(const TestFunction& v, const IntensityModel& intensity) {
  return v.has_anchors() ? v.deficiency_bound(intensity) : v.deficiency(intensity);
}

/// Deterministic error bound of a (possibly stepped) series evaluation.
double stepped_error(double tau, double M, double NN, int K, double h, int depth) {
  if (depth == 0) return series_tail_bound(tau, M, NN, K);
  double sum = 0.0, coef = 1.0;
  for (int k = 1; k <= K; ++k) {
    coef *= h * (M + (k - 1) * NN) / k;
    sum += coef;
  }
  return series_tail_bound(h, M, NN, K) + stepped_error(tau - h, M, NN, K, h, depth - 1) +
         stepped_error(tau - h, M + K * NN, NN, K, h, depth - 1) * sum;
}

GfEstimate series_impl(double t, const TestFunction& v, const IntensityModel& intensity,
                       const ContentionKernel& kernel, int K, const CubatureSpec& cub,
                       bool want_partials) {
  GfEstimate est;
  est.method = GfMethod::series;
  est.t = t;
  est.order = K;
  est.seed = cub.seed;
  if (t == 0.0 || v.is_one()) {
    est.value = 1.0;
    if (want_partials) est.partial_sums.assign(static_cast<std::size_t>(K) + 1, 1.0);
    return est;
  }
  const double lam = intensity.rate_max();
  const double NN = lam * kernel.mass(v.dim());
  const double M = exact_or_bound_deficiency(v, intensity);
  const double t0 = NN > 0.0 ? cub.step_fraction / NN : std::numeric_limits<double>::infinity();

  const PathSampler sampler(v, kernel);
  std::vector<double> scale(static_cast<std::size_t>(K) + 1, 1.0);
  for (int k = 1; k <= K; ++k) scale[k] = scale[k - 1] * lam * sampler.mass(k);

  if (t <= t0) {
    std::vector<double> coef(static_cast<std::size_t>(K) + 1, 1.0);
    for (int k = 1; k <= K; ++k) coef[k] = coef[k - 1] * (-t) / k;
    std::vector<double> values(cub.samples);
    std::vector<std::vector<double>> terms(cub.samples);
    parallel_for(cub.samples, cub.threads, [&](std::size_t s) {
      std::vector<double> w(static_cast<std::size_t>(K) + 1);
      std::vector<Position> path;
      sampler.draw(cub.seed, s, K, w.data(), path);
      double y = 1.0;
      for (int k = 1; k <= K; ++k) y += coef[k] * scale[k] * w[k];
      values[s] = y;
      if (want_partials) terms[s] = std::move(w);
    });
    const auto sum = summarize(values);
    est.value = sum.mean;
    est.sigma = sum.sigma;
    est.error = series_tail_bound(t, M, NN, K);
    if (want_partials) {
      est.partial_sums.assign(static_cast<std::size_t>(K) + 1, 1.0);
      std::vector<double> col(cub.samples);
      for (int k = 1; k <= K; ++k) {
        for (std::size_t s = 0; s < cub.samples; ++s) col[s] = terms[s][k];
        est.partial_sums[k] = est.partial_sums[k - 1] + coef[k] * scale[k] * summarize(col).mean;
      }
    }
    return est;
  }

  const int steps = static_cast<int>(std::ceil(t / t0)) - 1;
  if (steps > cub.max_steps)
    throw InvalidArgument("t needs " + std::to_string(steps) +
                          " series steps; raise max_steps or lower t");
  const double h = t / (steps + 1);
  const double b = t - h;

  CubatureSpec base_cub = cub;
  base_cub.seed = derive_seed(cub.seed, 0xBA5Eu);
  const GfEstimate base = series_impl(b, v, intensity, kernel, K, base_cub, false);

  std::vector<double> coef(static_cast<std::size_t>(K) + 1, 1.0);
  for (int k = 1; k <= K; ++k) coef[k] = coef[k - 1] * (-h) / k;
  std::vector<double> values(cub.samples);
  parallel_for(cub.samples, cub.threads, [&](std::size_t s) {
    std::vector<double> w(static_cast<std::size_t>(K) + 1);
    std::vector<Position> path;
    sampler.draw(cub.seed, s, K, w.data(), path);
    CubatureSpec inner = cub;
    inner.samples = cub.inner_samples;
    inner.threads = 1;
    double y = 0.0;
    for (int k = 1; k <= K; ++k) {
      if (w[k] == 0.0) break;
      inner.seed = derive_seed(cub.seed, s * static_cast<std::uint64_t>(K + 1) + k);
      const TestFunction vk =
          v.with_anchors(std::vector<Position>(path.begin(), path.begin() + k), kernel);
      y += coef[k] * scale[k] * w[k] * series_impl(b, vk, intensity, kernel, K, inner, false).value;
    }
    values[s] = y;
  });
  const auto sum = summarize(values);
  est.value = base.value + sum.mean;
  est.sigma = std::sqrt(base.sigma * base.sigma + sum.sigma * sum.sigma);
  est.error = stepped_error(t, M, NN, K, h, steps);
  est.steps = steps;
  return est;
}

}  // namespace

GfEstimate gf_series_inf(double t, const TestFunction& v, const IntensityModel& intensity,
                         const ContentionKernel& kernel, int order, const CubatureSpec& cub) {
  require_series_inputs(t, intensity, order);
  if (cub.samples < 2) throw InvalidArgument("cubature needs at least two samples");
  return series_impl(t, v, intensity, kernel, order, cub, true);
}

std::vector<std::vector<double>> series_term_samples(const TestFunction& v, double lambda,
                                                     const ContentionKernel& kernel, int K,
                                                     std::size_t samples, std::uint64_t seed,
                                                     unsigned threads) {
  const PathSampler sampler(v, kernel);
  std::vector<double> scale(static_cast<std::size_t>(K) + 1, 1.0);
  for (int k = 1; k <= K; ++k) scale[k] = scale[k - 1] * lambda * sampler.mass(k);
  std::vector<std::vector<double>> rows(samples);
  parallel_for(samples, threads, [&](std::size_t s) {
    std::vector<double> w(static_cast<std::size_t>(K) + 1);
    std::vector<Position> path;
    sampler.draw(seed, s, K, w.data(), path);
    for (int k = 0; k <= K; ++k) w[k] *= scale[k];
    rows[s] = std::move(w);
  });
  return rows;
}

namespace {

double integrate_region(const Region& r, const std::function<double(const Position&)>& fn,
                        double tol, const std::array<std::vector<double>, 2>& kinks) {
  if (r.shape == Region::Shape::box) {
    std::array<std::vector<double>, 2> cuts;
    for (int a = 0; a < r.dim(); ++a) {
      cuts[a] = {r.box.lo[a], r.box.hi[a]};
      for (double c : kinks[a])
        if (c > r.box.lo[a] && c < r.box.hi[a]) cuts[a].push_back(c);
      std::sort(cuts[a].begin(), cuts[a].end());
    }
    if (r.dim() == 1) cuts[1] = {0.0, 0.0};
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts[0].size(); ++i)
      for (std::size_t j = 0; j + 1 < cuts[1].size(); ++j) {
        const Box cell{r.dim(), {cuts[0][i], cuts[1][j]}, {cuts[0][i + 1], cuts[1][j + 1]}};
        if (cell.volume() > 0.0) sum += integrate_box(fn, cell, tol, 10).value;
      }
    return sum;
  }
  if (r.dim() == 1)
    return integrate_1d([&](double x) { return fn({x, 0.0}); }, r.center[0] - r.radius,
                        r.center[0] + r.radius, tol)
        .value;
  auto ring = [&](double rho) {
    return rho * integrate_1d(
                     [&](double phi) {
                       return fn({r.center[0] + rho * std::cos(phi), r.center[1] + rho * std::sin(phi)});
                     },
                     0.0, 2.0 * M_PI, tol, 10)
                     .value;
  };
  return integrate_1d(ring, 0.0, r.radius, tol, 10).value;
}

double relaxation(double t, double a) {
  if (a * t < 1e-8) return t - 0.5 * t * t * a;
  return -std::expm1(-t * a) / a;
}

}  // namespace

double bound_rate(const Position& x, const TestFunction& v, const IntensityModel& intensity,
                  const ContentionKernel& kernel, double deficiency) {
  const int dim = v.dim();
  if (intensity.is_homogeneous() && !v.has_anchors()) {
    double covered = kernel.mass(dim);
    for (const auto& r : v.regions())
      covered -= r.c * (r.shape == Region::Shape::box
                            ? kernel.box_integral(x, r.box)
                            : kernel.disc_integral(x, r.center, r.radius, dim));
    return deficiency + intensity.rate_max() * covered;
  }
  const double R = kernel.interaction_radius(dim, 1e-12);
  auto weight = [&](const Position& y) { return v(y) * intensity.at(y); };
  double extra;
  if (dim == 1) {
    extra = integrate_1d([&](double s) { return kernel.profile(s * s) * weight({x[0] + s, 0.0}); },
                         -R, R, 1e-8, 10)
                .value;
  } else {
    extra = integrate_1d(
                [&](double rho) {
                  return rho * kernel.profile(rho * rho) *
                         integrate_1d(
                             [&](double phi) {
                               return weight({x[0] + rho * std::cos(phi), x[1] + rho * std::sin(phi)});
                             },
                             0.0, 2.0 * M_PI, 1e-8, 8)
                             .value;
                },
                0.0, R, 1e-8, 8)
                .value;
  }
  return deficiency + extra;
}

GfBounds gf_bounds_inf(double t, const TestFunction& v, const IntensityModel& intensity,
                       const ContentionKernel& kernel, double tol) {
  if (!std::isfinite(t) || t < 0.0) throw InvalidArgument("t must be a finite value >= 0");
  GfBounds out;
  out.lower.method = GfMethod::bound_lower;
  out.upper.method = GfMethod::bound_upper;
  out.lower.t = out.upper.t = t;
  if (v.is_one() || t == 0.0) return out;

  const double D = v.deficiency(intensity);
  out.lower.value = std::exp(-t * D);

  double integral = 0.0;
  if (!v.has_anchors()) {
    // a(x) has kinks where the kernel support touches a region edge.
    std::array<std::vector<double>, 2> kinks;
    if (kernel.compact()) {
      const double R = kernel.cutoff(v.dim());
      for (const auto& r : v.regions()) {
        const Box b = r.bounds();
        for (int a = 0; a < v.dim(); ++a)
          kinks[a].insert(kinks[a].end(), {b.lo[a] - R, b.lo[a] + R, b.hi[a] - R, b.hi[a] + R});
      }
    }
    for (const auto& r : v.regions())
      integral += r.c * integrate_region(
                            r,
                            [&](const Position& x) {
                              return relaxation(t, bound_rate(x, v, intensity, kernel, D)) *
                                     intensity.at(x);
                            },
                            tol, kinks);
  } else {
    for (const auto& cell : support_cells({&v}))
      integral += integrate_box(
                      [&](const Position& x) {
                        const double def = 1.0 - v(x);
                        if (def == 0.0) return 0.0;
                        return def * relaxation(t, bound_rate(x, v, intensity, kernel, D)) *
                               intensity.at(x);
                      },
                      cell, std::max(tol, 1e-6), 8)
                      .value;
  }
  if (!std::isfinite(integral)) throw NumericalError("bound quadrature did not converge");
  out.upper.value = 1.0 - integral;
  out.upper.error = out.lower.error = tol * std::max(1.0, std::abs(integral));
  return out;
}

Measured moment_density_inf(double t, const Position& x, const IntensityModel& intensity,
                            const ContentionKernel& kernel, const MomentEvaluator& ev) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("t must be > 0");
  const TestFunction w = TestFunction::one(ev.dim).transformed(x, kernel);
  Measured out;
  if (ev.kind == MomentEvaluator::Kind::callable) {
    if (!ev.gf) throw InvalidArgument("callable moment evaluator has no estimator");
    double var = 0.0;
    for (auto [tau, wt] : gauss_legendre(ev.tau_nodes, 0.0, t)) {
      const Measured m = ev.gf(tau, w);
      out.value += wt * m.value;
      out.error += wt * m.error;
      var += wt * wt * m.sigma * m.sigma;
    }
    out.sigma = std::sqrt(var);
    return out;
  }
  require_series_inputs(t, intensity, ev.order);
  const int K = ev.order;
  const double lam = intensity.rate_max();
  const double NN = lam * kernel.mass(ev.dim);
  const double t0 = NN > 0.0 ? ev.cubature.step_fraction / NN : std::numeric_limits<double>::infinity();
  if (t <= t0) {
    // ∫₀ᵗ of the series integrates term by term.
    std::vector<double> coef(static_cast<std::size_t>(K) + 1, t);
    for (int k = 1; k <= K; ++k) coef[k] = coef[k - 1] * (-t) / (k + 1);
    const auto rows = series_term_samples(w, lam, kernel, K, ev.cubature.samples, ev.cubature.seed,
                                          ev.cubature.threads);
    std::vector<double> values(rows.size());
    for (std::size_t s = 0; s < rows.size(); ++s) {
      double y = t;
      for (int k = 1; k <= K; ++k) y += coef[k] * rows[s][k];
      values[s] = y;
    }
    const auto sum = summarize(values);
    out.value = sum.mean;
    out.sigma = sum.sigma;
    out.error = t * series_tail_bound(t, NN, NN, K);
    return out;
  }
  double var = 0.0;
  std::uint64_t node = 0;
  for (auto [tau, wt] : gauss_legendre(ev.tau_nodes, 0.0, t)) {
    CubatureSpec cub = ev.cubature;
    cub.seed = derive_seed(ev.cubature.seed, node++);
    const GfEstimate g = series_impl(tau, w, intensity, kernel, K, cub, false);
    out.value += wt * g.value;
    out.error += wt * g.error;
    var += wt * wt * g.sigma * g.sigma;
  }
  out.sigma = std::sqrt(var);
  return out;
}

double birth_rate(const Position& x, const std::vector<Position>& phi, double lambda,
                  const ContentionKernel& kernel) {
  double r = lambda;
  for (const auto& z : phi) {
    r *= 1.0 - kernel(x, z);
    if (r == 0.0) break;
  }
  return r;
}

int transformed_from(int k, int i) { return i < k / 2 ? k - i : k - i - 1; }

std::vector<TestFunction> gk_arguments(const std::vector<TestFunction>& vs, int i,
                                       const Position& x, const ContentionKernel& kernel) {
  const int k = static_cast<int>(vs.size()) - 1;
  std::vector<TestFunction> args = vs;
  for (int j = transformed_from(k, i); j <= k; ++j) args[j] = vs[j].transformed(x, kernel);
  return args;
}

std::vector<TestFunction> fk_embedding(int k, const TestFunction& v) {
  if (k < 0) throw InvalidArgument("k must be >= 0");
  std::vector<TestFunction> vs;
  const int ones = (k + 1) / 2;
  for (int j = 0; j <= k; ++j) vs.push_back(j < ones ? TestFunction::one(v.dim()) : v);
  return vs;
}

std::vector<std::pair<Position, double>> support_nodes(const std::vector<const TestFunction*>& fs,
                                                       const IntensityModel& intensity,
                                                       int nodes_per_axis) {
  std::vector<std::pair<Position, double>> out;
  for (const auto& cell : support_cells(fs))
    for (auto [p, w] : gauss_legendre_box(nodes_per_axis, cell)) out.emplace_back(p, w * intensity.at(p));
  return out;
}

Measured gk_rhs(double t, const std::vector<TestFunction>& vs, const IntensityModel& intensity,
                const ContentionKernel& kernel, const GEstimator& g, int nodes_per_axis) {
  if (vs.empty()) throw InvalidArgument("g_k needs k+1 test functions");
  const int k = static_cast<int>(vs.size()) - 1;
  Measured total;
  double var = 0.0;
  const double D0 = vs[0].deficiency(intensity);
  if (D0 > 0.0) {
    const auto m = g(t, vs);
    total.value -= D0 * m.value;
    var += D0 * D0 * m.sigma * m.sigma;
    total.error += D0 * m.error;
  }
  for (int i = 0; i < k; ++i) {
    if (vs[i] == vs[i + 1]) continue;
    for (const auto& [x, w] : support_nodes({&vs[i], &vs[i + 1]}, intensity, nodes_per_axis)) {
      const double diff = vs[i](x) - vs[i + 1](x);
      if (diff == 0.0) continue;
      const auto m = g(t, gk_arguments(vs, i, x, kernel));
      const double c = w * diff;
      total.value -= c * m.value;
      var += c * c * m.sigma * m.sigma;
      total.error += std::abs(c) * m.error;
    }
  }
  total.sigma = std::sqrt(var);
  return total;
}

Measured fk_rhs(double t, int k, const TestFunction& v, const IntensityModel& intensity,
                const ContentionKernel& kernel, const GEstimator& g, int nodes_per_axis) {
  return gk_rhs(t, fk_embedding(k, v), intensity, kernel, g, nodes_per_axis);
}

double l1_distance(const TestFunction& v, const TestFunction& w, const IntensityModel& intensity) {
  if (v == w) return 0.0;
  if (v.is_one()) return w.deficiency(intensity);
  if (w.is_one()) return v.deficiency(intensity);
  double s = 0.0;
  for (const auto& [x, wt] : support_nodes({&v, &w}, intensity, 8)) s += wt * std::abs(v(x) - w(x));
  return s;
}

double taylor_truncation_bound(int l, const std::vector<TestFunction>& vs,
                               const IntensityModel& intensity, const ContentionKernel& kernel) {
  if (vs.empty()) throw InvalidArgument("needs at least one test function");
  if (l < 0) throw InvalidArgument("l must be >= 0");
  double M = vs[0].deficiency(intensity);
  for (std::size_t i = 0; i + 1 < vs.size(); ++i) M += l1_distance(vs[i], vs[i + 1], intensity);
  double NN;
  if (intensity.is_homogeneous()) {
    NN = kernel_mass(kernel, vs[0].dim(), MassScope::weighted, &intensity);
  } else {
    std::optional<Box> dom;
    for (const auto& v : vs)
      if (auto b = v.support_bounds()) dom = b;
    if (!dom) return l == 0 ? 1.0 : 0.0;
    NN = kernel_mass(kernel, vs[0].dim(), MassScope::weighted, &intensity, &*dom);
  }
  double prod = 1.0;
  for (int i = 0; i < l; ++i) prod *= M + i * NN;
  return prod;
}

}  // namespace rpack
