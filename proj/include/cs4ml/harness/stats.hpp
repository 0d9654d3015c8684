#pragma once

// Aggregation helpers: geometric statistics for errors, arithmetic ones for
// counts and condition numbers, medians.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cs4ml/error.hpp"

namespace cs4ml {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Geometric mean and std factor exp(std(log x)); values clamped to >= 1e-16.
/// Sorted before reduction so the result does not depend on input order.
inline MeanStd geometric_stats(std::vector<double> x) {
  detail::require(!x.empty(), "geometric_stats: no values");
  for (double& v : x) v = std::log(std::max(v, 1e-16));
  std::sort(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += v;
  const double mu = s / static_cast<double>(x.size());
  double q = 0.0;
  for (double v : x) q += (v - mu) * (v - mu);
  const double sd = x.size() > 1 ? std::sqrt(q / static_cast<double>(x.size() - 1)) : 0.0;
  return {std::exp(mu), std::exp(sd)};
}

/// Sample mean and std (n - 1 denominator).
inline MeanStd arithmetic_stats(std::vector<double> x) {
  detail::require(!x.empty(), "arithmetic_stats: no values");
  std::sort(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += v;
  const double mu = s / static_cast<double>(x.size());
  double q = 0.0;
  for (double v : x) q += (v - mu) * (v - mu);
  const double sd = x.size() > 1 ? std::sqrt(q / static_cast<double>(x.size() - 1)) : 0.0;
  return {mu, sd};
}

inline double median(std::vector<double> x) {
  detail::require(!x.empty(), "median: no values");
  std::sort(x.begin(), x.end());
  const std::size_t k = x.size() / 2;
  return x.size() % 2 ? x[k] : 0.5 * (x[k - 1] + x[k]);
}

/// Fraction of entries satisfying pred.
template <class Pred>
double fraction(const std::vector<double>& x, Pred pred) {
  if (x.empty()) return 0.0;
  std::size_t c = 0;
  for (double v : x) c += pred(v) ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(x.size());
}

}  // namespace cs4ml
