#include <doctest.h>

#include <cmath>

#include "rpack/errors.hpp"
#include "rpack/functional.hpp"
#include "rpack/packing.hpp"
#include "rpack/pattern.hpp"
#include "rpack/rng.hpp"
#include "rpack/stats.hpp"

using namespace rpack;

namespace {

const Box unit_block{2, {0.0, 0.0}, {2.0, 2.0}};

TestFunction block_hole(double c = 1.0) {
  return TestFunction::indicator_mix({Region::make_box(unit_block, c)});
}

/// Direct simulation on a torus: fraction of replicates with no retained point in the block,
/// and the retained intensity relative to λ.
struct SimOracle {
  Summary empty_block;
  Summary relative_density;
};

SimOracle simulate_oracle(double t, double lambda, const ContentionKernel& kernel,
                          std::size_t reps) {
  const Window torus = Window::box(Box{2, {-4.0, -4.0}, {6.0, 6.0}}, BoundaryMode::torus);
  const auto intensity = IntensityModel::homogeneous(lambda);
  std::vector<double> empty(reps), density(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    SeedSpec seed;
    seed.master_seed = derive_seed(977, r);
    const auto pattern = sample_poisson(torus, intensity, t, seed);
    const ContentionField field(kernel, seed, torus);
    const auto keep = matern_inf(pattern, field);
    double inside = 0.0, total = 0.0;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      if (!keep[i]) continue;
      total += 1.0;
      if (unit_block.contains(pattern.points[i].pos)) inside += 1.0;
    }
    empty[r] = inside == 0.0 ? 1.0 : 0.0;
    density[r] = total / (lambda * torus.volume());
  }
  return {summarize(empty), summarize(density)};
}

}  // namespace

TEST_CASE("series tail bound dominates the exact tail") {
  // 𝒩 = 0: exact tail is e^{tM} − Σ_{k≤K}(tM)^k/k!.
  const double t = 0.5, M = 1.0;
  double partial = 0.0, term = 1.0;
  for (int k = 0; k <= 3; ++k) {
    partial += term;
    term *= t * M / (k + 1);
  }
  const double exact = std::exp(t * M) - partial;
  const double bound = series_tail_bound(t, M, 0.0, 3);
  CHECK(bound >= exact);
  CHECK(bound <= 1.1 * exact);

  // 𝒩 > 0 against a long explicit sum.
  const double NN = 0.8;
  double tail = 0.0;
  term = 1.0;
  for (int k = 0; k < 4000; ++k) {
    if (k > 6) tail += term;
    term *= t * (M + k * NN) / (k + 1);
  }
  const double b2 = series_tail_bound(t, M, NN, 6);
  CHECK(b2 >= tail * (1 - 1e-12));
  CHECK(b2 <= 1.5 * tail);
  CHECK_THROWS_AS(series_tail_bound(2.0, M, 0.5, 4), NumericalError);
  CHECK(series_tail_bound(0.0, M, NN, 4) == 0.0);
}

TEST_CASE("series at t = 0 and for v = 1 is exactly one") {
  const auto lam = IntensityModel::homogeneous(0.2);
  const auto k = ContentionKernel::hard_disc(0.5);
  CHECK(gf_series_inf(0.0, block_hole(), lam, k, 8).value == 1.0);
  CHECK(gf_series_inf(1.0, TestFunction::one(), lam, k, 8).value == 1.0);
  CHECK_THROWS_AS(gf_series_inf(-1.0, block_hole(), lam, k, 8), InvalidArgument);
  const auto dens = IntensityModel::density([](const Position&) { return 0.1; }, 0.1, "flat");
  CHECK_THROWS_AS(gf_series_inf(1.0, block_hole(), dens, k, 8), InvalidArgument);
}

TEST_CASE("without contention the series and bounds reduce to the Poisson void probability") {
  const auto lam = IntensityModel::homogeneous(0.3);
  const auto none = ContentionKernel::none();
  for (double c : {1.0, 0.4}) {
    const auto v = block_hole(c);
    for (double t : {0.5, 2.0, 5.0}) {
      const double exact = std::exp(-t * c * 0.3 * 4.0);
      CubatureSpec cub;
      cub.samples = 16;
      const auto s = gf_series_inf(t, v, lam, none, 40, cub);
      CHECK(s.sigma == doctest::Approx(0.0));
      CHECK(std::abs(s.value - exact) <= s.error + 1e-12);
      const auto b = gf_bounds_inf(t, v, lam, none);
      CHECK(b.lower.value == doctest::Approx(exact).epsilon(1e-12));
      CHECK(b.upper.value == doctest::Approx(exact).epsilon(1e-7));
    }
  }
}

TEST_CASE("partial sums end at the reported value and bracket it") {
  const auto lam = IntensityModel::homogeneous(0.2);
  const auto k = ContentionKernel::hard_disc(0.5);
  CubatureSpec cub;
  cub.samples = 4000;
  const auto s = gf_series_inf(1.0, block_hole(), lam, k, 14, cub);
  REQUIRE(s.partial_sums.size() == 15);
  CHECK(s.partial_sums.back() == doctest::Approx(s.value).epsilon(1e-12));
  CHECK(s.partial_sums[0] == 1.0);
  // Consecutive low-order partial sums alternate around the value.
  for (int K = 1; K <= 4; ++K) {
    const double lo = std::min(s.partial_sums[K - 1], s.partial_sums[K]);
    const double hi = std::max(s.partial_sums[K - 1], s.partial_sums[K]);
    CHECK(s.value >= lo - 4 * s.sigma);
    CHECK(s.value <= hi + 4 * s.sigma);
  }
}

TEST_CASE("series, bounds and direct simulation agree for hard discs") {
  const double lambda = 0.2;
  const auto lam = IntensityModel::homogeneous(lambda);
  const auto k = ContentionKernel::hard_disc(0.5);
  const auto sim = simulate_oracle(1.0, lambda, k, 12000);
  CubatureSpec cub;
  cub.samples = 20000;
  const auto s = gf_series_inf(1.0, block_hole(), lam, k, 16, cub);
  const double tol = 4.0 * std::hypot(s.sigma, sim.empty_block.sigma) + s.error;
  CHECK(std::abs(s.value - sim.empty_block.mean) <= tol);

  const auto b = gf_bounds_inf(1.0, block_hole(), lam, k);
  CHECK(b.lower.value <= s.value + 4 * s.sigma + s.error);
  CHECK(s.value <= b.upper.value + 4 * s.sigma + s.error);
  CHECK(b.lower.value < b.upper.value);
}

TEST_CASE("stepped series stays consistent with simulation beyond the direct radius") {
  const double lambda = 0.2;
  const auto lam = IntensityModel::homogeneous(lambda);
  const auto k = ContentionKernel::hard_disc(0.5);
  CubatureSpec cub;
  cub.samples = 1500;
  cub.inner_samples = 16;
  const auto s = gf_series_inf(2.0, block_hole(), lam, k, 10, cub);
  CHECK(s.steps == 1);
  CHECK(s.partial_sums.empty());
  CHECK(s.error > 0.0);
  const auto sim = simulate_oracle(2.0, lambda, k, 8000);
  // The certified error is loose after stepping; the estimate itself must still match.
  const double tol = 4.0 * std::hypot(s.sigma, sim.empty_block.sigma);
  CHECK(std::abs(s.value - sim.empty_block.mean) <= tol);
  const auto b = gf_bounds_inf(2.0, block_hole(), lam, k);
  CHECK(b.lower.value <= s.value + tol);
  CHECK(s.value <= b.upper.value + tol);

  cub.max_steps = 0;
  CHECK_THROWS_AS(gf_series_inf(2.0, block_hole(), lam, k, 10, cub), InvalidArgument);
}

TEST_CASE("bounds sandwich for disc regions and Rayleigh kernels") {
  const auto lam = IntensityModel::homogeneous(0.15);
  const auto k = ContentionKernel::rayleigh(0.3);
  const auto v = TestFunction::indicator_mix({Region::make_disc(2, {0.0, 0.0}, 1.0, 0.7)});
  for (double t : {0.5, 1.5}) {
    const auto b = gf_bounds_inf(t, v, lam, k, 1e-7);
    CubatureSpec cub;
    cub.samples = 6000;
    cub.inner_samples = 8;
    const auto s = gf_series_inf(t, v, lam, k, 12, cub);
    CHECK(b.lower.value <= s.value + 4 * s.sigma + s.error);
    CHECK(s.value <= b.upper.value + 4 * s.sigma + s.error);
  }
}

TEST_CASE("upper bound rate without contention equals the deficiency") {
  const auto lam = IntensityModel::homogeneous(0.5);
  const auto v = block_hole(0.5);
  const double D = v.deficiency(lam);
  CHECK(D == doctest::Approx(1.0));
  CHECK(bound_rate({1.0, 1.0}, v, lam, ContentionKernel::none(), D) == doctest::Approx(D));
  // Hard disc far from the block sees the full kernel mass.
  const auto k = ContentionKernel::hard_disc(0.5);
  CHECK(bound_rate({20.0, 20.0}, v, lam, k, D) == doctest::Approx(D + 0.5 * M_PI));
}

TEST_CASE("H-transform multiplies by one minus the kernel") {
  const auto k = ContentionKernel::rayleigh(0.5);
  const auto v = block_hole(0.6);
  const Position x{0.5, 1.5};
  const auto w = v.transformed(x, k);
  CounterEngine eng(5, stream::aux, 0);
  for (int i = 0; i < 100; ++i) {
    const Position y{-2.0 + 6.0 * eng.uniform(), -2.0 + 6.0 * eng.uniform()};
    const double base = unit_block.contains(y) ? 0.4 : 1.0;
    const double h = std::exp(-((y[0] - x[0]) * (y[0] - x[0]) + (y[1] - x[1]) * (y[1] - x[1])) / 0.5);
    CHECK(w(y) == doctest::Approx(base * (1.0 - h)).epsilon(1e-12));
  }
}

TEST_CASE("birth rate") {
  const auto k = ContentionKernel::hard_disc(0.5);
  CHECK(birth_rate({0.0, 0.0}, {}, 2.0, k) == 2.0);
  CHECK(birth_rate({0.0, 0.0}, {{3.0, 0.0}}, 2.0, k) == 2.0);
  CHECK(birth_rate({0.0, 0.0}, {{3.0, 0.0}, {0.5, 0.5}}, 2.0, k) == 0.0);
  const auto g = ContentionKernel::rayleigh(1.0);
  const double h1 = std::exp(-1.0), h2 = std::exp(-4.0);
  CHECK(birth_rate({0.0, 0.0}, {{1.0, 0.0}, {0.0, 2.0}}, 3.0, g) ==
        doctest::Approx(3.0 * (1 - h1) * (1 - h2)));
}

TEST_CASE("g_k argument layout") {
  CHECK(transformed_from(1, 0) == 0);
  CHECK(transformed_from(2, 0) == 2);
  CHECK(transformed_from(2, 1) == 0);
  CHECK(transformed_from(4, 0) == 4);
  CHECK(transformed_from(4, 1) == 3);
  CHECK(transformed_from(4, 2) == 1);
  CHECK(transformed_from(4, 3) == 0);
  const auto v = block_hole();
  for (int k = 0; k <= 5; ++k) {
    const auto vs = fk_embedding(k, v);
    REQUIRE(vs.size() == static_cast<std::size_t>(k + 1));
    int ones = 0;
    for (const auto& w : vs) ones += w.is_one() ? 1 : 0;
    CHECK(ones == (k + 1) / 2);
  }
  const auto k = ContentionKernel::hard_disc(0.5);
  const std::vector<TestFunction> vs{TestFunction::one(), v, v};
  const auto args = gk_arguments(vs, 0, {1.0, 1.0}, k);
  CHECK(args[0] == vs[0]);
  CHECK(args[1] == v);
  CHECK(args[2] == v.transformed({1.0, 1.0}, k));
}

TEST_CASE("g_k right-hand side") {
  const auto lam = IntensityModel::homogeneous(0.25);
  const auto k = ContentionKernel::hard_disc(0.5);
  const auto v = block_hole(0.8);
  const double D = 0.25 * 0.8 * 4.0;
  int calls = 0;
  const GEstimator unit = [&](double, const std::vector<TestFunction>&) {
    ++calls;
    return Measured{1.0, 0.1, 0.0};
  };
  const auto ones = fk_embedding(3, TestFunction::one());
  CHECK(gk_rhs(1.0, ones, lam, k, unit).value == 0.0);
  CHECK(calls == 0);

  // k = 0: −D g(v).
  const auto r0 = gk_rhs(1.0, {v}, lam, k, unit);
  CHECK(r0.value == doctest::Approx(-D));
  CHECK(r0.sigma == doctest::Approx(0.1 * D));

  // k = 1 with g ≡ 1: −∫(1 − v)λ = −D.
  const auto r1 = fk_rhs(1.0, 1, v, lam, k, unit);
  CHECK(r1.value == doctest::Approx(-D).epsilon(1e-12));

  // k = 1 with g = v-argument evaluated at the transform centre picks up ∫(1−v)(x)·(1−h(x,x))... = 0.
  const GEstimator probe = [&](double, const std::vector<TestFunction>& a) {
    return Measured{a[1](a[1].anchors().back()), 0.0, 0.0};
  };
  CHECK(fk_rhs(1.0, 1, v, lam, k, probe).value == doctest::Approx(0.0));
}

TEST_CASE("L1 distance and Taylor truncation bound") {
  const auto lam = IntensityModel::homogeneous(0.5);
  const auto k = ContentionKernel::hard_disc(0.5);
  const auto v = block_hole(1.0);
  const auto w = block_hole(0.25);
  CHECK(l1_distance(v, v, lam) == 0.0);
  CHECK(l1_distance(TestFunction::one(), v, lam) == doctest::Approx(2.0));
  CHECK(l1_distance(v, w, lam) == doctest::Approx(0.75 * 2.0));
  const double NN = 0.5 * M_PI;
  const double M = 2.0;
  CHECK(taylor_truncation_bound(0, {v}, lam, k) == 1.0);
  CHECK(taylor_truncation_bound(3, {v}, lam, k) ==
        doctest::Approx(M * (M + NN) * (M + 2 * NN)));
  CHECK(taylor_truncation_bound(2, {TestFunction::one(), v}, lam, k) ==
        doctest::Approx(M * (M + NN)));
  // Growth ratio between consecutive orders is M + l𝒩.
  for (int l = 1; l < 6; ++l)
    CHECK(taylor_truncation_bound(l + 1, {v}, lam, k) / taylor_truncation_bound(l, {v}, lam, k) ==
          doctest::Approx(M + l * NN));
  CHECK_THROWS_AS(taylor_truncation_bound(-1, {v}, lam, k), InvalidArgument);
}

TEST_CASE("first moment density") {
  const auto lam = IntensityModel::homogeneous(0.2);
  MomentEvaluator ev;
  ev.cubature.samples = 64;
  const auto m0 = moment_density_inf(1.7, {0.0, 0.0}, lam, ContentionKernel::none(), ev);
  CHECK(m0.value == doctest::Approx(1.7));
  CHECK(m0.sigma == doctest::Approx(0.0));

  const auto k = ContentionKernel::hard_disc(0.5);
  ev.cubature.samples = 20000;
  const auto m = moment_density_inf(1.0, {0.0, 0.0}, lam, k, ev);
  const auto sim = simulate_oracle(1.0, 0.2, k, 3000);
  const double tol = 4.0 * std::hypot(m.sigma, sim.relative_density.sigma) + m.error;
  CHECK(std::abs(m.value - sim.relative_density.mean) <= tol);

  // Callable route with an exact estimator: f(τ, ·) = e^{−τ} integrates to 1 − e^{−t}.
  MomentEvaluator cb;
  cb.kind = MomentEvaluator::Kind::callable;
  cb.gf = [](double tau, const TestFunction&) { return Measured{std::exp(-tau), 0.0, 0.0}; };
  CHECK(moment_density_inf(2.0, {0.0, 0.0}, lam, k, cb).value ==
        doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-10));
  CHECK_THROWS_AS(moment_density_inf(0.0, {0.0, 0.0}, lam, k, cb), InvalidArgument);
}
