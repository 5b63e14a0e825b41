#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rpack/contention.hpp"
#include "rpack/geometry.hpp"
#include "rpack/intensity.hpp"
#include "rpack/pattern.hpp"
#include "rpack/rng.hpp"
#include "rpack/test_function.hpp"

namespace rpack {

enum class Model { poisson, matern1, maternK, maternInf };
std::string model_name(Model m);
Model parse_model(const std::string& s);

struct ModelSpec {
  Window window = Window::square(10.0);
  IntensityModel intensity = IntensityModel::homogeneous(1.0);
  ContentionKernel kernel = ContentionKernel::hard_disc(0.5);
  Model model = Model::maternInf;
  int k = 1;  ///< level for maternK
  double t = 1.0;

  int dim() const { return window.dim(); }
  /// Level of the thinning: 0 for poisson, 1 for matern1, k for maternK, −1 for maternInf.
  int level() const;
  void validate() const;
};

struct RunOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double level = 0.95;
};

struct Estimate {
  double mean = 0.0;
  double sigma = 0.0;       ///< standard error
  double half_width = 0.0;  ///< normal-approximation CI half-width at `level`
  double level = 0.95;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
};

Estimate make_estimate(const std::vector<double>& per_replicate, const RunOptions& opts);
/// Ratio of means with a delta-method standard error.
Estimate make_ratio_estimate(const std::vector<double>& num, const std::vector<double>& den,
                             const RunOptions& opts);

/// One replicate: the Poisson candidates up to spec.t and the retention flag of each.
struct Realization {
  TimedPattern pattern;
  std::vector<std::uint8_t> retained;
};

Realization simulate(const ModelSpec& spec, const SeedSpec& seed);
/// Seeds of replicate r under master seed `seed`.
SeedSpec replicate_seed_of(std::uint64_t seed, std::size_t r);

/// Mean of ∏_{retained} v over replicates.
Estimate estimate_gf(const ModelSpec& spec, const TestFunction& v, const RunOptions& opts);

/// Retained points per unit volume in `region`.
Estimate estimate_intensity(const ModelSpec& spec, const Box& region, const RunOptions& opts);

/// E[Σ_{x ∈ B(c,δ)} ∏_{z≠x} v(z)] / E[#retained in B(c,δ)]. δ ≤ 0 selects cutoff/20.
Estimate estimate_palm_gf(const ModelSpec& spec, const TestFunction& v, const Position& center,
                          double delta, const RunOptions& opts);

/// Outcome of an identity check. `value` is the residual or the statistic being tested.
struct CheckReport {
  std::string check;
  std::map<std::string, double> inputs;
  std::map<std::string, double> details;
  double value = 0.0;
  double sigma = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
  std::string note;
};

struct OdeOptions {
  double delta = 0.05;   ///< finite-difference half-step
  int nodes = 6;         ///< Gauss-Legendre nodes per axis and support cell
};

/// Centered difference of f̂(·, v) plus ∫ f̂(t, H(v,x))(1 − v(x))λdx, common random numbers.
CheckReport check_ode_inf(const ModelSpec& spec, const TestFunction& v, double t,
                          const RunOptions& opts, const OdeOptions& ode = {});

/// Centered difference of ĝ_k(·, vs) minus the g_k right-hand side, common random numbers.
CheckReport check_ode_g(const ModelSpec& spec, const std::vector<TestFunction>& vs, double t,
                        const RunOptions& opts, const OdeOptions& ode = {});

/// check_ode_g for f_k(t, v) with k = spec.k (maternK) or 1 (matern1).
CheckReport check_ode_k(const ModelSpec& spec, const TestFunction& v, double t,
                        const RunOptions& opts, const OdeOptions& ode = {});

/// Envelope of (1 − f(ε,v))/ε: [D e^{−ε𝒩} − ϑ, D + ϑ] with ϑ = (e^{εD} − 1 − εD)/ε.
struct QuasiEnvelope {
  double lower = 0.0;
  double upper = 0.0;
};
QuasiEnvelope quasi_poisson_envelope(double eps, double deficiency, double weighted_mass);

/// Weights w with Σ w_i y_i the least-squares intercept of a line through (x_i, y_i).
std::vector<double> intercept_weights(const std::vector<double>& xs);

CheckReport check_quasi_poisson(const ModelSpec& spec, const TestFunction& v,
                                const std::vector<double>& eps, const RunOptions& opts);

struct Density1dResult {
  Estimate density;
  std::size_t saturated = 0;  ///< replicates without an admissible gap
  std::size_t replicates = 0;
};

/// ∞-Matérn unit rods on a ring of length L at rate λ up to time t. With `fill_gaps` the
/// remaining admissible gaps are filled exactly, giving the saturated packing.
Density1dResult packing_density_1d(double length, double t, const RunOptions& opts,
                                   double lambda = 1.0, bool fill_gaps = true);

struct BlockedOptions {
  double radius = 0.5;       ///< disc radius r; blocking distance is 2r
  double lambda_n = 50.0;    ///< λ·π(2r)²
  double side = 20.0;        ///< torus side
  double grid_step = 0.0;    ///< ≤ 0 selects 2r/20
  Model model = Model::matern1;
  bool require_jamming = true;
};

/// Fraction of a torus within distance 2r of a retained point.
Estimate blocked_fraction_2d(const BlockedOptions& bo, const RunOptions& opts);

struct MomentDensity {
  int order = 1;
  double t = 0.0;
  std::vector<Position> nodes;  ///< cell centres (n=1) or bin midpoints in the first coordinate (n=2)
  std::vector<double> values;   ///< Lebesgue density
  std::vector<double> sigma;
  std::vector<std::uint8_t> undersampled;
};

struct FactorialGrid {
  Box domain;             ///< n=1: cell grid domain
  int cells_per_axis = 5;
  double r_max = 2.0;     ///< n=2: largest pair distance
  int bins = 20;
  std::size_t min_count = 10;  ///< total events below which a bin is flagged
};

MomentDensity estimate_factorial_density(const ModelSpec& spec, int n, const FactorialGrid& grid,
                                         const RunOptions& opts);

struct PalmCheckOptions {
  Position center{0.0, 0.0};
  double delta = 1.0;      ///< ball radius; the ball-integrated identity holds for every δ
  int tau_nodes = 8;
  int space_nodes = 6;
};

/// Ball-integrated n = 1 Palm identity: L − R₁ + R₂ = 0 with
/// L = E Σ_{y∈Ξ_t∩B} ∏_{z≠y} v(z), R₁ = ∫₀ᵗ∫_B f(τ, H(v,y))λ dy dτ,
/// R₂ = ∫₀ᵗ∫(1−v(x))λ E Σ_{y∈Ξ_τ∩B}(1−h(x,y))∏_{z≠y} v(z)(1−h(x,z)) dx dτ.
CheckReport check_palm_identity(const ModelSpec& spec, const TestFunction& v,
                                const PalmCheckOptions& po, const RunOptions& opts);

/// Mean size of the undirected conflict cluster of a typical point.
Estimate mean_cluster_size(const ModelSpec& spec, const RunOptions& opts);

}  // namespace rpack
