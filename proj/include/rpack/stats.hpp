#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rpack {

/// Pairwise (cascade) summation.
double pairwise_sum(std::span<const double> xs);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased sample variance
  double sigma = 0.0;     ///< standard error of the mean
};

Summary summarize(std::span<const double> xs);

/// Two-sided standard normal quantile for a confidence level, e.g. 0.95 → 1.95996.
double normal_z(double level);

/// Survival function of the Kolmogorov distribution.
double kolmogorov_sf(double x);

double ks_one_sample_pvalue(std::vector<double> xs, const std::function<double(double)>& cdf);
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

/// Upper tail probability of chi-square with `dof` degrees of freedom.
double chi_square_sf(double stat, double dof);

/// Pearson goodness-of-fit p-value of integer counts against Poisson(mean), with bins merged
/// until each expected count is at least 5.
double poisson_gof_pvalue(std::span<const std::int64_t> counts, double mean);

}  // namespace rpack
