#include <doctest.h>

#include <cmath>
#include <functional>

#include "rpack/contention.hpp"
#include "rpack/errors.hpp"
#include "rpack/quadrature.hpp"
#include "rpack/stats.hpp"

using namespace rpack;

namespace {
Position random_pos(std::uint64_t seed, std::uint64_t i, double scale) {
  return {scale * (counter_uniform(seed, 90, i, 0) - 0.5),
          scale * (counter_uniform(seed, 90, i, 1) - 0.5)};
}
}  // namespace

TEST_CASE("hard disc threshold is strict at 2r") {
  const auto k = ContentionKernel::hard_disc(0.5);
  CHECK(h_eval(k, {0, 0}, {1.5, 0}) == 0.0);
  CHECK(h_eval(k, {0, 0}, {1.0, 0}) == 0.0);
  CHECK(h_eval(k, {0, 0}, {0.999, 0}) == 1.0);
}

TEST_CASE("kernels are symmetric, translation invariant and in [0,1]") {
  for (const auto& k : {ContentionKernel::hard_disc(0.7), ContentionKernel::bernoulli_disc(0.4, 0.3),
                        ContentionKernel::rayleigh(1.7)}) {
    for (std::uint64_t i = 0; i < 500; ++i) {
      const auto x = random_pos(1, i, 4.0), y = random_pos(2, i, 4.0), s = random_pos(3, i, 50.0);
      const double h = h_eval(k, x, y);
      CHECK(h >= 0.0);
      CHECK(h <= 1.0);
      CHECK(h == h_eval(k, y, x));
      CHECK(h == doctest::Approx(h_eval(k, {x[0] + s[0], x[1] + s[1]}, {y[0] + s[0], y[1] + s[1]})));
    }
  }
}

TEST_CASE("kernel mass: closed forms and quadrature agree") {
  CHECK(kernel_mass(ContentionKernel::hard_disc(0.5), 2, MassScope::geometric) == doctest::Approx(M_PI));
  CHECK(kernel_mass(ContentionKernel::hard_disc(0.25), 1, MassScope::geometric) == doctest::Approx(1.0));
  CHECK(std::abs(kernel_mass(ContentionKernel::rayleigh(2.0), 2, MassScope::geometric) - 2 * M_PI) < 1e-12);
  CHECK(std::abs(kernel_mass_quadrature(ContentionKernel::rayleigh(2.0), 2).value - 2 * M_PI) < 1e-8);
  CHECK(std::abs(kernel_mass_quadrature(ContentionKernel::rayleigh(2.0), 1).value -
                 std::sqrt(2 * M_PI)) < 1e-8);
  CHECK(kernel_mass_quadrature(ContentionKernel::hard_disc(0.5), 2).value == doctest::Approx(M_PI));
  CHECK(kernel_mass_quadrature(ContentionKernel::bernoulli_disc(0.5, 0.3), 1).value ==
        doctest::Approx(0.6));
  CHECK(kernel_mass(ContentionKernel::hard_disc(0.0), 2, MassScope::geometric) == 0.0);
}

TEST_CASE("weighted kernel mass") {
  const auto k = ContentionKernel::hard_disc(0.5);
  const auto lam = IntensityModel::homogeneous(0.2);
  CHECK(kernel_mass(k, 2, MassScope::weighted, &lam) == doctest::Approx(0.2 * M_PI));
  const auto dens = IntensityModel::density([](const Position&) { return 0.2; }, 1.0);
  const Box dom{2, {0, 0}, {10, 10}};
  CHECK(kernel_mass(k, 2, MassScope::weighted, &dens, &dom) == doctest::Approx(0.2 * M_PI).epsilon(1e-5));
  CHECK_THROWS_AS(kernel_mass(k, 2, MassScope::weighted), InvalidArgument);
}

TEST_CASE("interaction radius") {
  CHECK(interaction_radius(ContentionKernel::hard_disc(0.3), 2, 1e-3) == doctest::Approx(0.6));
  CHECK(interaction_radius(ContentionKernel::hard_disc(0.3), 2, 1e3) == doctest::Approx(0.6));
  const auto ray = ContentionKernel::rayleigh(1.0);
  const double R = interaction_radius(ray, 2, 1e-6);
  CHECK(M_PI * std::exp(-R * R) == doctest::Approx(1e-6));
  auto tail = integrate_1d([](double r) { return 2 * M_PI * r * std::exp(-r * r); }, R,
                           std::numeric_limits<double>::infinity(), 1e-12);
  CHECK(tail.value == doctest::Approx(1e-6).epsilon(1e-6));
  const double R1 = interaction_radius(ray, 1, 1e-6);
  auto tail1 = integrate_1d([](double r) { return 2 * std::exp(-r * r); }, R1,
                            std::numeric_limits<double>::infinity(), 1e-12);
  CHECK(tail1.value == doctest::Approx(1e-6).epsilon(1e-6));
  CHECK(interaction_radius(ray, 2, 10.0) == 0.0);
}

TEST_CASE("contends is symmetric and repeatable") {
  const auto k = ContentionKernel::bernoulli_disc(1.0, 0.5);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    ContentionField f(k, derive_seed(3, i));
    TimedPoint a{static_cast<std::int64_t>(i), random_pos(4, i, 3.0), 0.1};
    TimedPoint b{static_cast<std::int64_t>(i + 17), random_pos(5, i, 3.0), 0.2};
    const bool ab = f.contends(a, b);
    CHECK(ab == f.contends(b, a));
    CHECK(ab == f.contends(a, b));
  }
  ContentionField f(k, 1);
  TimedPoint a{3, {0, 0}, 0.1};
  CHECK_THROWS_AS(f.contends(a, a), InvalidArgument);
}

TEST_CASE("hard disc contention holds for every seed") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    ContentionField f(ContentionKernel::hard_disc(0.5), s);
    CHECK(f.contends({1, {0, 0}, 0.1}, {2, {0.9, 0}, 0.2}));
    CHECK_FALSE(f.contends({1, {0, 0}, 0.1}, {2, {1.1, 0}, 0.2}));
  }
}

TEST_CASE("bernoulli disc contention frequency matches q") {
  ContentionField f(ContentionKernel::bernoulli_disc(0.5, 0.3), 77);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i)
    hits += f.contends({2 * i, {0, 0}, 0.1}, {2 * i + 1, {0.5, 0.2}, 0.2});
  const double p = static_cast<double>(hits) / n;
  CHECK(std::abs(p - 0.3) < 3.0 * std::sqrt(0.3 * 0.7 / n));
}

TEST_CASE("marginal law over field seeds for a fixed rayleigh pair") {
  const auto k = ContentionKernel::rayleigh(1.0);
  TimedPoint a{10, {0, 0}, 0.1}, b{11, {0.8, 0.3}, 0.2};
  const double h = h_eval(k, a.pos, b.pos);
  const int n = 40000;
  int hits = 0;
  for (int s = 0; s < n; ++s) hits += ContentionField(k, static_cast<std::uint64_t>(s)).contends(a, b);
  CHECK(std::abs(static_cast<double>(hits) / n - h) < 3.0 * std::sqrt(h * (1 - h) / n));
}

TEST_CASE("truncated rayleigh never contends beyond the cutoff") {
  const auto k = ContentionKernel::rayleigh(1.0).with_trunc_eps(1e-3);
  ContentionField f(k, 5);
  const double R = k.cutoff(2);
  int hits = 0;
  for (int i = 0; i < 1000; ++i) hits += f.contends({2 * i, {0, 0}, 0}, {2 * i + 1, {R * 1.01, 0}, 0});
  CHECK(hits == 0);
}

TEST_CASE("sample_offset follows the normalized kernel") {
  const auto hd = ContentionKernel::hard_disc(0.5);
  const auto ray = ContentionKernel::rayleigh(2.0);
  std::vector<double> rh, rr, r1;
  for (std::uint64_t i = 0; i < 5000; ++i) {
    const double u1 = counter_uniform(9, 1, i), u2 = counter_uniform(9, 2, i);
    rh.push_back(std::sqrt(norm2(hd.sample_offset(2, u1, u2, 0))));
    rr.push_back(std::sqrt(norm2(ray.sample_offset(2, u1, u2, 0))));
    r1.push_back(ray.sample_offset(1, u1, u2, 0)[0]);
  }
  CHECK(ks_one_sample_pvalue(rh, [](double r) { return r * r; }) > 0.001);
  CHECK(ks_one_sample_pvalue(rr, [](double r) { return 1 - std::exp(-r * r / 2.0); }) > 0.001);
  CHECK(ks_one_sample_pvalue(r1, [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }) > 0.001);
}

namespace {
/// Midpoint rule on a fine grid; independent of the adaptive routes.
double grid_integral(const std::function<double(const Position&)>& f, const Box& b, int n) {
  const double hx = (b.hi[0] - b.lo[0]) / n, hy = (b.hi[1] - b.lo[1]) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += f({b.lo[0] + (i + 0.5) * hx, b.lo[1] + (j + 0.5) * hy});
  return s * hx * hy;
}
}  // namespace

TEST_CASE("box and disc integrals match a fine midpoint grid") {
  const Box box{2, {0, 0}, {2, 2}};
  for (const auto& k : {ContentionKernel::hard_disc(0.5), ContentionKernel::bernoulli_disc(0.4, 0.3),
                        ContentionKernel::rayleigh(0.7)}) {
    for (Position x : {Position{1, 1}, Position{-0.3, 0.5}, Position{2.2, 2.4}, Position{0.1, 1.9}}) {
      const double brute = grid_integral([&](const Position& y) { return k(x, y); }, box, 1500);
      CHECK(k.box_integral(x, box) == doctest::Approx(brute).epsilon(1e-3).scale(1.0));
      const Position c{1.2, 0.9};
      const double rad = 0.8;
      Box db{2, {c[0] - rad, c[1] - rad}, {c[0] + rad, c[1] + rad}};
      const double bd = grid_integral(
          [&](const Position& y) { return norm2(plane_displacement(c, y)) < rad * rad ? k(x, y) : 0.0; },
          db, 1500);
      CHECK(k.disc_integral(x, c, rad, 2) == doctest::Approx(bd).epsilon(1e-3).scale(1.0));
    }
  }
  const Box seg{1, {0, 0}, {3, 0}};
  CHECK(ContentionKernel::hard_disc(0.5).box_integral({0.5, 0}, seg) == doctest::Approx(1.5));
}
