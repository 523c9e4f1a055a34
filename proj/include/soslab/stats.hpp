#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace soslab::stats {

struct Estimate {
  double value = 0.0;
  double se = 0.0;

  double lo(double z = 3.0) const { return value - z * se; }
  double hi(double z = 3.0) const { return value + z * se; }
};

double mean(std::span<const double> x);
// Unbiased sample variance.
double variance(std::span<const double> x);
Estimate mean_estimate(std::span<const double> x);
// Mean with the standard error from non-overlapping batch means.
Estimate batch_mean_estimate(std::span<const double> x, std::size_t batches = 20);

// Delete-one-block jackknife of an arbitrary statistic.
Estimate jackknife(std::span<const double> x, const std::function<double(std::span<const double>)>& stat,
                   std::size_t blocks = 50);
Estimate variance_estimate(std::span<const double> x, std::size_t blocks = 50);
// Central moment ratio m_{2k} / ((2k−1)!! m_2^k).
Estimate wick_ratio(std::span<const double> x, int k, std::size_t blocks = 50);
Estimate central_moment(std::span<const double> x, int order, std::size_t blocks = 50);

// Integrated autocorrelation time with Sokal's automatic window (c = 6).
double integrated_autocorrelation_time(std::span<const double> x);

// Two-sided Kolmogorov–Smirnov statistic of sorted data against CDF values
// at those points.
double ks_statistic(std::span<const double> cdf_at_sorted);
double kolmogorov_pvalue(double d, std::size_t n);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// Hill estimator of the tail index from the k largest values.
double hill_estimator(std::vector<double> x, std::size_t k);

// Upper 95% bound for a proportion with zero successes in n trials.
inline double rule_of_three(std::size_t n) { return 3.0 / static_cast<double>(n); }

struct QuantileEstimate {
  double value = 0.0;
  double lo = 0.0;  // order-statistic confidence interval
  double hi = 0.0;
  double se = 0.0;  // half-width / z
};
// Sample quantile with a distribution-free order-statistic interval at z σ.
QuantileEstimate quantile(std::vector<double> x, double q, double z = 3.0);

// Proportion with binomial standard error.
Estimate proportion(std::size_t hits, std::size_t n);

}  // namespace soslab::stats
