#include "rpack/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <cmath>

#include "rpack/errors.hpp"

namespace rpack {

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const auto half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

Summary summarize(std::span<const double> xs) {
  Summary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  s.mean = pairwise_sum(xs) / static_cast<double>(s.n);
  if (s.n > 1) {
    std::vector<double> dev(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = (xs[i] - s.mean) * (xs[i] - s.mean);
    s.variance = pairwise_sum(dev) / static_cast<double>(s.n - 1);
    s.sigma = std::sqrt(s.variance / static_cast<double>(s.n));
  }
  return s;
}

double normal_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0,1)");
  return boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
}

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

double ks_one_sample_pvalue(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw InvalidArgument("KS test needs data");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("KS test needs data");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
}

double chi_square_sf(double stat, double dof) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

double poisson_gof_pvalue(std::span<const std::int64_t> counts, double mean) {
  if (counts.empty()) throw InvalidArgument("goodness-of-fit needs data");
  const boost::math::poisson_distribution<> pois(mean);
  const double n = static_cast<double>(counts.size());
  const auto max_c = *std::max_element(counts.begin(), counts.end());
  const std::int64_t top = std::max<std::int64_t>(max_c, static_cast<std::int64_t>(mean * 3 + 10));
  std::vector<double> obs(static_cast<std::size_t>(top + 1), 0.0);
  for (auto c : counts) obs[static_cast<std::size_t>(c)] += 1.0;
  std::vector<double> expct(obs.size());
  for (std::int64_t k = 0; k <= top; ++k)
    expct[static_cast<std::size_t>(k)] = n * boost::math::pdf(pois, static_cast<double>(k));
  expct.back() += n * boost::math::cdf(boost::math::complement(pois, static_cast<double>(top)));

  std::vector<std::pair<double, double>> bins;
  double eo = 0.0, ee = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    eo += obs[k];
    ee += expct[k];
    if (ee >= 5.0) {
      bins.emplace_back(eo, ee);
      eo = ee = 0.0;
    }
  }
  if (ee > 0.0 || eo > 0.0) {
    if (bins.empty()) bins.emplace_back(eo, ee);
    else {
      bins.back().first += eo;
      bins.back().second += ee;
    }
  }
  if (bins.size() < 2) throw InvalidArgument("too few bins for a goodness-of-fit test");
  double stat = 0.0;
  for (const auto& [o, e] : bins) stat += (o - e) * (o - e) / e;
  return chi_square_sf(stat, static_cast<double>(bins.size() - 1));
}

}  // namespace rpack
