#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rpack/contention.hpp"
#include "rpack/intensity.hpp"
#include "rpack/test_function.hpp"

namespace rpack {

/// A number with a statistical standard error and a deterministic error bound.
struct Measured {
  double value = 0.0;
  double sigma = 0.0;
  double error = 0.0;
};

enum class GfMethod { series, bound_lower, bound_upper, monte_carlo };
std::string method_name(GfMethod m);

struct GfEstimate {
  GfMethod method = GfMethod::series;
  double t = 0.0;
  double value = 1.0;
  double error = 0.0;  ///< truncation / quadrature bound
  double sigma = 0.0;  ///< cubature or Monte Carlo standard error
  int order = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<double> partial_sums;  ///< S_0..S_K for unstepped series
  int steps = 0;
};

struct CubatureSpec {
  std::size_t samples = 20000;  ///< proposal paths per series evaluation
  std::uint64_t seed = 1;
  double step_fraction = 0.8;   ///< step length as a fraction of 1/𝒩
  std::size_t inner_samples = 32;
  int max_steps = 2;
  unsigned threads = 0;
};

/// Σ_{k>K} t^k/k! ∏_{i<k}(M + i𝒩). Throws NumericalError when t𝒩 ≥ 1.
double series_tail_bound(double t, double M, double NN, int K);

/// f_∞(t, v) by the alternating series with importance-sampled term integrals.
GfEstimate gf_series_inf(double t, const TestFunction& v, const IntensityModel& intensity,
                         const ContentionKernel& kernel, int order, const CubatureSpec& cub = {});

/// Per-sample unbiased estimates of the series terms T_1..T_K for v, where
/// T_k = ∫ ∏_i (1 − v(x_i) ∏_{j<i}(1 − h(x_j, x_i))) λ^k dx. Row s holds T_0 = 1, T_1, ..., T_K.
std::vector<std::vector<double>> series_term_samples(const TestFunction& v, double lambda,
                                                     const ContentionKernel& kernel, int K,
                                                     std::size_t samples, std::uint64_t seed,
                                                     unsigned threads = 0);

struct GfBounds {
  GfEstimate lower;
  GfEstimate upper;
};

/// lower = exp(−t D), upper = 1 − ∫ (1 − e^{−t a(x)})/a(x) (1 − v(x)) λ dx,
/// a(x) = ∫ (1 − (1 − h(x,y)) v(y)) λ dy, D = ∫(1 − v)λ.
GfBounds gf_bounds_inf(double t, const TestFunction& v, const IntensityModel& intensity,
                       const ContentionKernel& kernel, double tol = 1e-7);

/// a(x) of the upper bound.
double bound_rate(const Position& x, const TestFunction& v, const IntensityModel& intensity,
                  const ContentionKernel& kernel, double deficiency);

/// Estimator of f(τ, w) used by moment_density_inf when not using the series.
using GfCallable = std::function<Measured(double tau, const TestFunction& w)>;

struct MomentEvaluator {
  enum class Kind { series, callable };
  Kind kind = Kind::series;
  int order = 16;
  CubatureSpec cubature;
  GfCallable gf;
  int tau_nodes = 12;
  int dim = 2;
};

/// m¹(t, x) = ∫₀ᵗ f(τ, H(1, x)) dτ, relative to Λ.
Measured moment_density_inf(double t, const Position& x, const IntensityModel& intensity,
                            const ContentionKernel& kernel, const MomentEvaluator& evaluator);

/// λ ∏_{z ∈ φ} (1 − h(x, z)).
double birth_rate(const Position& x, const std::vector<Position>& phi, double lambda,
                  const ContentionKernel& kernel);

/// Estimator of g_k(t, v₀..v_k).
using GEstimator = std::function<Measured(double t, const std::vector<TestFunction>& args)>;

/// First slot that is H-transformed in the i-th sum term of the g_k equation.
int transformed_from(int k, int i);

/// Argument tuple of the i-th term: slots from transformed_from(k,i) on replaced by H(v_j, x).
std::vector<TestFunction> gk_arguments(const std::vector<TestFunction>& vs, int i,
                                       const Position& x, const ContentionKernel& kernel);

/// (1,…,1, v,…,v) with ⌊(k+1)/2⌋ ones: f_k(t,v) = g_k(t, fk_embedding(k, v)).
std::vector<TestFunction> fk_embedding(int k, const TestFunction& v);

/// Spatial quadrature nodes (position, weight incl. λ) of ∫ w(x)·(·) λ dx over the support
/// cells of the functions in `fs`.
std::vector<std::pair<Position, double>> support_nodes(const std::vector<const TestFunction*>& fs,
                                                       const IntensityModel& intensity,
                                                       int nodes_per_axis);

/// Right-hand side of the evolution equation of g_k.
Measured gk_rhs(double t, const std::vector<TestFunction>& vs, const IntensityModel& intensity,
                const ContentionKernel& kernel, const GEstimator& g, int nodes_per_axis = 6);

/// gk_rhs specialised to f_k.
Measured fk_rhs(double t, int k, const TestFunction& v, const IntensityModel& intensity,
                const ContentionKernel& kernel, const GEstimator& g, int nodes_per_axis = 6);

/// ∫ |v − w| dΛ.
double l1_distance(const TestFunction& v, const TestFunction& w, const IntensityModel& intensity);

/// ∏_{i=0}^{l−1} (M + i𝒩) with M = ∫|1 − v₀|dΛ + Σ ∫|v_i − v_{i+1}|dΛ.
double taylor_truncation_bound(int l, const std::vector<TestFunction>& vs,
                               const IntensityModel& intensity, const ContentionKernel& kernel);

}  // namespace rpack
