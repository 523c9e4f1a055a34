#include "soslab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "soslab/errors.hpp"

namespace soslab::stats {

namespace {

void need(std::size_t have, std::size_t want, const char* what) {
  if (have < want)
    throw StatisticsError(std::string(what) + ": need at least " + std::to_string(want) + " values, got " +
                          std::to_string(have));
}

}  // namespace

double mean(std::span<const double> x) {
  need(x.size(), 1, "mean");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  need(x.size(), 2, "variance");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

Estimate mean_estimate(std::span<const double> x) {
  need(x.size(), 2, "mean_estimate");
  return {mean(x), std::sqrt(variance(x) / static_cast<double>(x.size()))};
}

Estimate batch_mean_estimate(std::span<const double> x, std::size_t batches) {
  need(x.size(), 2 * batches, "batch_mean_estimate");
  const std::size_t len = x.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) means.push_back(mean(x.subspan(b * len, len)));
  return {mean(x), std::sqrt(variance(means) / static_cast<double>(batches))};
}

Estimate jackknife(std::span<const double> x, const std::function<double(std::span<const double>)>& stat,
                   std::size_t blocks) {
  blocks = std::min(blocks, x.size());
  need(blocks, 2, "jackknife");
  const double full = stat(x);
  const std::size_t n = x.size();
  std::vector<double> loo;
  std::vector<double> rest;
  rest.reserve(n);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * n / blocks, hi = (b + 1) * n / blocks;
    rest.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (i < lo || i >= hi) rest.push_back(x[i]);
    loo.push_back(stat(rest));
  }
  const double m = mean(loo);
  double s = 0.0;
  for (double v : loo) s += (v - m) * (v - m);
  const double g = static_cast<double>(blocks);
  return {full, std::sqrt((g - 1.0) / g * s)};
}

namespace {

double central(std::span<const double> x, int order) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += std::pow(v - m, order);
  return s / static_cast<double>(x.size());
}

double double_factorial_odd(int k) {
  double r = 1.0;
  for (int j = 2 * k - 1; j > 1; j -= 2) r *= j;
  return r;
}

}  // namespace

Estimate variance_estimate(std::span<const double> x, std::size_t blocks) {
  need(x.size(), 4, "variance_estimate");
  return jackknife(x, [](std::span<const double> s) { return variance(s); }, blocks);
}

Estimate central_moment(std::span<const double> x, int order, std::size_t blocks) {
  need(x.size(), 4, "central_moment");
  return jackknife(x, [order](std::span<const double> s) { return central(s, order); }, blocks);
}

Estimate wick_ratio(std::span<const double> x, int k, std::size_t blocks) {
  need(x.size(), static_cast<std::size_t>(10 * k), "wick_ratio");
  return jackknife(
      x,
      [k](std::span<const double> s) {
        const double m2 = central(s, 2);
        return central(s, 2 * k) / (double_factorial_odd(k) * std::pow(m2, k));
      },
      blocks);
}

double integrated_autocorrelation_time(std::span<const double> x) {
  need(x.size(), 4, "integrated_autocorrelation_time");
  const std::size_t n = x.size();
  const double m = mean(x);
  double c0 = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  c0 /= static_cast<double>(n);
  if (c0 == 0.0) return 0.5;
  double tau = 0.5;
  for (std::size_t t = 1; t < n; ++t) {
    double c = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) c += (x[i] - m) * (x[i + t] - m);
    c /= static_cast<double>(n) * c0;
    tau += c;
    if (static_cast<double>(t) >= 6.0 * tau) break;
  }
  return std::max(tau, 0.5);
}

double ks_statistic(std::span<const double> cdf) {
  const auto n = static_cast<double>(cdf.size());
  double d = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    d = std::max(d, static_cast<double>(i + 1) / n - cdf[i]);
    d = std::max(d, cdf[i] - static_cast<double>(i) / n);
  }
  return d;
}

double kolmogorov_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double x = (sn + 0.12 + 0.11 / sn) * d;
  if (x < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    p += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatisticsError("linear_fit: size mismatch");
  need(x.size(), 3, "linear_fit");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double sse = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  f.slope_se = std::sqrt(sse / static_cast<double>(x.size() - 2) / sxx);
  return f;
}

double hill_estimator(std::vector<double> x, std::size_t k) {
  need(x.size(), k + 1, "hill_estimator");
  std::sort(x.begin(), x.end(), std::greater<>());
  const double ref = x[k];
  if (!(ref > 0.0)) throw StatisticsError("hill_estimator: needs positive order statistics");
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::log(x[i] / ref);
  return static_cast<double>(k) / s;
}

QuantileEstimate quantile(std::vector<double> x, double q, double z) {
  need(x.size(), 10, "quantile");
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  auto at = [&](double rank) {
    const auto i = static_cast<std::size_t>(std::clamp(std::floor(rank), 0.0, n - 1.0));
    return x[i];
  };
  QuantileEstimate r;
  r.value = at(q * n);
  const double half = z * std::sqrt(n * q * (1.0 - q));
  r.lo = at(q * n - half);
  r.hi = at(q * n + half);
  r.se = (r.hi - r.lo) / (2.0 * z);
  return r;
}

Estimate proportion(std::size_t hits, std::size_t n) {
  need(n, 1, "proportion");
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

}  // namespace soslab::stats
