#include "rpack/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <utility>

#include "rpack/errors.hpp"

namespace rpack {

namespace bq = boost::math::quadrature;

QuadResult integrate_1d(const std::function<double(double)>& f, double a, double b, double tol,
                        unsigned max_depth) {
  if (!(b > a)) return {0.0, 0.0};
  double err = 0.0;
  const double v = bq::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, tol, &err);
  if (!std::isfinite(v)) throw NumericalError("quadrature produced a nonfinite value");
  return {v, err};
}

QuadResult integrate_box(const std::function<double(const Position&)>& f, const Box& box,
                         double tol, unsigned max_depth) {
  if (box.dim == 1) {
    return integrate_1d([&](double x) { return f({x, 0.0}); }, box.lo[0], box.hi[0], tol,
                        max_depth);
  }
  double inner_err = 0.0;
  auto outer = [&](double x) {
    auto r = integrate_1d([&](double y) { return f({x, y}); }, box.lo[1], box.hi[1], tol,
                          max_depth);
    inner_err = std::max(inner_err, r.error);
    return r.value;
  };
  auto r = integrate_1d(outer, box.lo[0], box.hi[0], tol, max_depth);
  r.error += inner_err * (box.hi[0] - box.lo[0]);
  return r;
}

namespace {

template <int N>
void append_nodes(std::vector<GaussNode>& out, double a, double b) {
  const auto& xs = bq::gauss<double, N>::abscissa();
  const auto& ws = bq::gauss<double, N>::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] == 0.0) {
      out.push_back({mid, ws[i] * half});
    } else {
      out.push_back({mid - half * xs[i], ws[i] * half});
      out.push_back({mid + half * xs[i], ws[i] * half});
    }
  }
}

template <int... Ns>
bool dispatch(int n, std::vector<GaussNode>& out, double a, double b,
              std::integer_sequence<int, Ns...>) {
  return ((n == Ns + 2 ? (append_nodes<Ns + 2>(out, a, b), true) : false) || ...);
}

}  // namespace

std::vector<GaussNode> gauss_legendre(int n, double a, double b) {
  std::vector<GaussNode> out;
  if (!dispatch(n, out, a, b, std::make_integer_sequence<int, 29>{}))
    throw InvalidArgument("Gauss-Legendre order must lie in [2,30]");
  return out;
}

std::vector<std::pair<Position, double>> gauss_legendre_box(int n, const Box& box) {
  std::vector<std::pair<Position, double>> out;
  const auto gx = gauss_legendre(n, box.lo[0], box.hi[0]);
  if (box.dim == 1) {
    for (const auto& g : gx) out.push_back({{g.x, 0.0}, g.w});
    return out;
  }
  const auto gy = gauss_legendre(n, box.lo[1], box.hi[1]);
  for (const auto& a : gx)
    for (const auto& b : gy) out.push_back({{a.x, b.x}, a.w * b.w});
  return out;
}

}  // namespace rpack
