#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rpack/errors.hpp"
#include "rpack/functional.hpp"
#include "rpack/montecarlo.hpp"
#include "rpack/packing.hpp"

using namespace rpack;

namespace {

const Box block{2, {0.0, 0.0}, {2.0, 2.0}};

TestFunction hole() { return TestFunction::indicator_mix({Region::make_box(block)}); }

ModelSpec desk(Model m = Model::maternInf, double t = 1.0) {
  ModelSpec s;
  s.window = Window::box(Box{2, {-4.0, -4.0}, {6.0, 6.0}}, BoundaryMode::torus);
  s.intensity = IntensityModel::homogeneous(0.2);
  s.kernel = ContentionKernel::hard_disc(0.5);
  s.model = m;
  s.t = t;
  return s;
}

RunOptions runs(std::size_t n, std::uint64_t seed = 3) {
  RunOptions o;
  o.replicates = n;
  o.seed = seed;
  return o;
}

bool within(const Estimate& e, double target, double k = 3.0) {
  return std::abs(e.mean - target) <= k * e.sigma + 1e-12;
}

}  // namespace

TEST_CASE("estimate helpers") {
  const auto e = make_estimate({1.0, 2.0, 3.0, 4.0}, runs(4));
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.sigma == doctest::Approx(std::sqrt((5.0 / 3.0) / 4.0)));
  CHECK(e.half_width == doctest::Approx(1.959964 * e.sigma).epsilon(1e-5));
  const auto r = make_ratio_estimate({2.0, 4.0, 6.0}, {1.0, 2.0, 3.0}, runs(3));
  CHECK(r.mean == doctest::Approx(2.0));
  CHECK(r.sigma == doctest::Approx(0.0));
  CHECK_THROWS_AS(make_ratio_estimate({1.0, 1.0}, {0.0, 0.0}, runs(2)), NumericalError);
}

TEST_CASE("least-squares intercept weights") {
  const std::vector<double> xs{0.01, 0.02, 0.05};
  const auto w = intercept_weights(xs);
  CHECK(w[0] == doctest::Approx(0.846).epsilon(2e-3));
  CHECK(w[1] == doctest::Approx(0.538).epsilon(2e-3));
  CHECK(w[2] == doctest::Approx(-0.385).epsilon(2e-3));
  // Exact on lines.
  double one = 0.0, slope = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    one += w[i];
    slope += w[i] * xs[i];
  }
  CHECK(one == doctest::Approx(1.0));
  CHECK(slope == doctest::Approx(0.0));
  CHECK_THROWS_AS(intercept_weights({0.1, 0.1}), InvalidArgument);
}

TEST_CASE("quasi-Poisson envelope") {
  for (double eps : {1e-4, 0.01, 0.05}) {
    const auto env = quasi_poisson_envelope(eps, 0.8, 0.63);
    CHECK(env.lower <= 0.8);
    CHECK(env.upper >= 0.8);
  }
  const auto tiny = quasi_poisson_envelope(1e-8, 0.8, 0.63);
  CHECK(tiny.lower == doctest::Approx(0.8));
  CHECK(tiny.upper == doctest::Approx(0.8));
  // The Poisson value (1 − e^{−εD})/ε must lie inside.
  const auto env = quasi_poisson_envelope(0.05, 0.8, 0.0);
  const double poisson = -std::expm1(-0.05 * 0.8) / 0.05;
  CHECK(poisson >= env.lower);
  CHECK(poisson <= env.upper);
}

TEST_CASE("simulate is a deterministic function of the seed") {
  const auto spec = desk();
  const auto a = simulate(spec, replicate_seed_of(9, 4));
  const auto b = simulate(spec, replicate_seed_of(9, 4));
  REQUIRE(a.pattern.size() == b.pattern.size());
  for (std::size_t i = 0; i < a.pattern.size(); ++i) {
    CHECK(a.pattern.points[i].pos == b.pattern.points[i].pos);
    CHECK(a.pattern.points[i].timer == b.pattern.points[i].timer);
  }
  CHECK(a.retained == b.retained);
  const auto c = simulate(desk(Model::poisson), replicate_seed_of(9, 4));
  CHECK(std::all_of(c.retained.begin(), c.retained.end(), [](auto x) { return x == 1; }));
  CHECK(c.pattern.size() == a.pattern.size());
}

TEST_CASE("generating functional estimates") {
  const auto one = estimate_gf(desk(), TestFunction::one(), runs(50));
  CHECK(one.mean == 1.0);
  CHECK(one.sigma == 0.0);

  const auto pois = estimate_gf(desk(Model::poisson, 1.5), hole(), runs(20000));
  CHECK(within(pois, std::exp(-1.5 * 0.2 * 4.0)));

  const auto spec = desk(Model::maternInf, 0.8);
  const auto mc = estimate_gf(spec, hole(), runs(20000));
  const auto b = gf_bounds_inf(0.8, hole(), spec.intensity, spec.kernel);
  CHECK(mc.mean >= b.lower.value - 3 * mc.sigma);
  CHECK(mc.mean <= b.upper.value + 3 * mc.sigma);

  const auto far = TestFunction::indicator_mix({Region::make_box(Box{2, {5.0, 5.0}, {7.0, 7.0}})});
  CHECK_THROWS_AS(estimate_gf(spec, far, runs(10)), InvalidArgument);
}

TEST_CASE("intensity estimates") {
  ModelSpec pois = desk(Model::poisson);
  pois.intensity = IntensityModel::homogeneous(2.0);
  CHECK(within(estimate_intensity(pois, Box{2, {-4.0, -4.0}, {6.0, 6.0}}, runs(400)), 2.0));

  // Matérn II: retention probability integrated over timers.
  for (double lamN : {0.5, 2.0, 10.0}) {
    ModelSpec s = desk(Model::matern1);
    const double N = kernel_mass(s.kernel, 2, MassScope::geometric);
    s.intensity = IntensityModel::homogeneous(lamN / N);
    const double lam = lamN / N;
    const auto e = estimate_intensity(s, Box{2, {-4.0, -4.0}, {6.0, 6.0}}, runs(600, 17));
    CHECK(within(e, lam * -std::expm1(-lamN) / lamN));
  }

  ModelSpec free = desk(Model::maternInf, 2.0);
  free.kernel = ContentionKernel::none();
  CHECK(within(estimate_intensity(free, Box{2, {-4.0, -4.0}, {6.0, 6.0}}, runs(400)), 0.4));

  CHECK_THROWS_AS(estimate_intensity(pois, Box{2, {0.0, 0.0}, {0.0, 1.0}}, runs(10)), InvalidArgument);
  CHECK_THROWS_AS(estimate_intensity(pois, Box{2, {0.0, 0.0}, {9.0, 1.0}}, runs(10)), InvalidArgument);
}

TEST_CASE("CI shrinks as one over root replicates") {
  const auto spec = desk(Model::matern1);
  const Box region{2, {-4.0, -4.0}, {6.0, 6.0}};
  const auto a = estimate_intensity(spec, region, runs(1000, 5));
  const auto b = estimate_intensity(spec, region, runs(4000, 6));
  CHECK(a.half_width / b.half_width == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("brute-force enumeration: Matern II retention is 1/(1+degree)") {
  CounterEngine eng(21, stream::aux, 0);
  const auto kernel = ContentionKernel::hard_disc(0.5);
  const Window w = Window::square(2.0, BoundaryMode::dilate, 0.0);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 3 + trial % 6;
    TimedPattern p;
    p.window = w;
    p.horizon = 1.0;
    for (int i = 0; i < n; ++i) p.points.push_back({i, {2.0 * eng.uniform(), 2.0 * eng.uniform()}, 0.0});
    const ContentionField field(kernel, 1);
    std::vector<int> degree(n, 0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && norm2(plane_displacement(p.points[i].pos, p.points[j].pos)) < 1.0) ++degree[i];
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> kept(n, 0.0);
    double orderings = 0.0;
    do {
      for (int i = 0; i < n; ++i) p.points[i].timer = (perm[i] + 0.5) / n;
      const auto marks = matern_k(p, field, 1);
      for (int i = 0; i < n; ++i) kept[i] += marks.at(static_cast<std::uint32_t>(i), 1);
      orderings += 1.0;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (int i = 0; i < n; ++i) CHECK(kept[i] / orderings == doctest::Approx(1.0 / (1 + degree[i])));
  }
  // Mixing over a Poisson number of contenders gives the closed form.
  for (double mu : {0.5, 2.0, 10.0}) {
    double s = 0.0, pk = std::exp(-mu);
    for (int k = 0; k < 200; ++k) {
      s += pk / (k + 1);
      pk *= mu / (k + 1);
    }
    CHECK(s == doctest::Approx(-std::expm1(-mu) / mu).epsilon(1e-12));
  }
}

TEST_CASE("Palm generating functional") {
  const auto spec = desk(Model::maternInf);
  CHECK(estimate_palm_gf(spec, TestFunction::one(), {3.0, 3.0}, 0.5, runs(2000)).mean ==
        doctest::Approx(1.0));
  // Without contention the Palm version only adds the conditioning point.
  auto pois = desk(Model::poisson);
  const auto palm = estimate_palm_gf(pois, hole(), {4.0, 4.0}, 0.5, runs(40000));
  const auto plain = estimate_gf(pois, hole(), runs(20000, 8));
  CHECK(std::abs(palm.mean - plain.mean) <= 3.0 * std::hypot(palm.sigma, plain.sigma));
  auto empty = desk();
  empty.intensity = IntensityModel::homogeneous(0.0);
  CHECK_THROWS_AS(estimate_palm_gf(empty, hole(), {3.0, 3.0}, 0.5, runs(20)), NumericalError);
}

TEST_CASE("ODE residual for the infinite model") {
  const auto spec = desk();
  const auto trivial = check_ode_inf(spec, TestFunction::one(), 0.5, runs(100));
  CHECK(trivial.value == 0.0);
  CHECK(trivial.pass);

  auto free = desk();
  free.kernel = ContentionKernel::none();
  CHECK(check_ode_inf(free, hole(), 0.5, runs(20000)).pass);

  const auto r = check_ode_inf(spec, hole(), 0.5, runs(20000));
  CHECK(r.pass);
  CHECK(r.details.at("integral") > 0.0);
  CHECK_THROWS_AS(check_ode_inf(spec, hole(), 0.04, runs(10)), InvalidArgument);
  CHECK_THROWS_AS(check_ode_inf(desk(Model::matern1), hole(), 0.5, runs(10)), InvalidArgument);
}

TEST_CASE("ODE residual for k-Matern") {
  auto s1 = desk(Model::matern1);
  CHECK(check_ode_k(s1, TestFunction::one(), 0.5, runs(100)).value == 0.0);
  CHECK(check_ode_k(s1, hole(), 0.5, runs(20000)).pass);
  auto s2 = desk(Model::maternK);
  s2.k = 2;
  CHECK(check_ode_k(s2, hole(), 1.0, runs(20000)).pass);
  CHECK_THROWS_AS(check_ode_k(desk(Model::maternInf), hole(), 0.5, runs(10)), InvalidArgument);
}

TEST_CASE("quasi-Poisson slope") {
  const std::vector<double> eps{0.01, 0.02, 0.05};
  const auto r = check_quasi_poisson(desk(), hole(), eps, runs(400000));
  CHECK(r.pass);
  CHECK(r.details.at("target_slope") == doctest::Approx(-0.8));
  auto free = desk();
  free.kernel = ContentionKernel::none();
  CHECK(check_quasi_poisson(free, hole(), eps, runs(400000)).pass);
  const auto trivial = check_quasi_poisson(desk(), TestFunction::one(), eps, runs(100));
  CHECK(trivial.value == 0.0);
  CHECK(trivial.pass);
  CHECK_THROWS_AS(check_quasi_poisson(desk(), hole(), {0.01, 0.5}, runs(10)), InvalidArgument);
}

TEST_CASE("one-dimensional packing density") {
  // Sparse regime: almost nothing is thinned.
  const auto sparse = packing_density_1d(400.0, 0.01, runs(200), 1.0, false);
  CHECK(std::abs(sparse.density.mean - 0.01) < 0.002);
  CHECK(sparse.saturated == 0);

  const auto a = packing_density_1d(100.0, 5.0, runs(300, 1));
  const auto b = packing_density_1d(200.0, 5.0, runs(300, 2));
  CHECK(a.density.sigma / b.density.sigma == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
  CHECK(std::abs(a.density.mean - 0.7476) < 0.02);
  CHECK_THROWS_AS(packing_density_1d(1.0, 1.0, runs(10)), InvalidArgument);
}

TEST_CASE("blocked fraction") {
  BlockedOptions sparse;
  sparse.lambda_n = 0.01;
  sparse.side = 6.0;
  sparse.require_jamming = false;
  CHECK(blocked_fraction_2d(sparse, runs(20)).mean < 0.03);
  sparse.require_jamming = true;
  CHECK_THROWS_AS(blocked_fraction_2d(sparse, runs(5)), InvalidArgument);

  BlockedOptions two;
  two.side = 8.0;
  two.lambda_n = 20.0;
  const auto m2 = blocked_fraction_2d(two, runs(20, 4));
  two.model = Model::maternInf;
  const auto mi = blocked_fraction_2d(two, runs(20, 4));
  CHECK(mi.mean > m2.mean + 3 * std::hypot(mi.sigma, m2.sigma));
}

TEST_CASE("factorial moment densities") {
  ModelSpec pois = desk(Model::poisson);
  FactorialGrid g;
  g.r_max = 2.0;
  g.bins = 4;
  const auto m2 = estimate_factorial_density(pois, 2, g, runs(3000));
  for (std::size_t b = 0; b < m2.values.size(); ++b)
    CHECK(std::abs(m2.values[b] - 0.04) <= 3.0 * m2.sigma[b]);

  const auto spec = desk(Model::maternInf);
  g.bins = 8;  // bins of width 0.25; hard core at 1
  const auto hc = estimate_factorial_density(spec, 2, g, runs(500));
  for (int b = 0; b < 4; ++b) CHECK(hc.values[b] == 0.0);
  CHECK(hc.values[5] > 0.0);

  FactorialGrid cells;
  cells.domain = Box{2, {-4.0, -4.0}, {6.0, 6.0}};
  cells.cells_per_axis = 2;
  const auto m1 = estimate_factorial_density(spec, 1, cells, runs(2000));
  MomentEvaluator ev;
  ev.cubature.samples = 20000;
  const auto m = moment_density_inf(1.0, {0.0, 0.0}, spec.intensity, spec.kernel, ev);
  for (std::size_t c = 0; c < m1.values.size(); ++c) {
    CHECK(m1.undersampled[c] == 0);
    CHECK(std::abs(m1.values[c] - 0.2 * m.value) <= 3.0 * std::hypot(m1.sigma[c], 0.2 * m.sigma) + 0.2 * m.error);
  }
  CHECK_THROWS_AS(estimate_factorial_density(spec, 3, cells, runs(10)), InvalidArgument);
}

TEST_CASE("Palm identity in ball-integrated form") {
  auto free = desk(Model::maternInf, 1.0);
  free.kernel = ContentionKernel::none();
  PalmCheckOptions po;
  po.center = {3.0, 1.0};
  CHECK(check_palm_identity(free, hole(), po, runs(5000)).pass);
  const auto r = check_palm_identity(desk(), hole(), po, runs(5000));
  CHECK(r.pass);
  CHECK(r.details.at("lhs") > 0.0);
}

TEST_CASE("mean conflict cluster size") {
  auto s = desk(Model::maternInf);
  const double N = kernel_mass(s.kernel, 2, MassScope::geometric);
  s.intensity = IntensityModel::homogeneous(0.5 / N);
  const auto e = mean_cluster_size(s, runs(300));
  CHECK(e.mean > 1.0);
  CHECK(e.mean <= 2.0 + 3.0 * e.sigma);
  s.kernel = ContentionKernel::none();
  CHECK(mean_cluster_size(s, runs(50)).mean == doctest::Approx(1.0));
}
