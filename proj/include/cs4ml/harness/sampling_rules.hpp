#pragma once

// Sample-size rules: the c_gamma constant, the Christoffel-based recommended
// counts per channel and the ad-hoc polynomial rule.

#include <algorithm>
#include <cmath>
#include <vector>

#include "cs4ml/christoffel.hpp"
#include "cs4ml/error.hpp"

namespace cs4ml {

/// c_gamma = ((1 + gamma) log(1 + gamma) - gamma)^{-1}.
inline double c_gamma(double gamma) {
  detail::require(gamma > 0.0 && std::isfinite(gamma), "c_gamma: gamma must be positive");
  const double denom = (1.0 + gamma) * std::log1p(gamma) - gamma;
  if (!(denom > 0.0)) throw NumericalError("c_gamma: gamma too small for double precision");
  return 1.0 / denom;
}

/// m_c = ceil(c_{eps/2} kappa_c / alpha * log(2 d max(n,1) / delta)).
inline std::vector<Index> recommend_sample_sizes(const std::vector<ChristoffelProfile>& profiles, Index n,
                                                 Index d_subspaces, double eps, double delta, double alpha_hat) {
  detail::require(!profiles.empty(), "recommend_sample_sizes: no channels");
  detail::require(eps > 0.0 && eps < 1.0, "recommend_sample_sizes: eps must lie in (0,1)");
  detail::require(delta > 0.0 && delta < 1.0, "recommend_sample_sizes: delta must lie in (0,1)");
  detail::require(alpha_hat > 0.0 && std::isfinite(alpha_hat), "recommend_sample_sizes: alpha must be positive");
  detail::require(d_subspaces >= 1, "recommend_sample_sizes: need at least one subspace");
  detail::require(n >= 0, "recommend_sample_sizes: negative dimension");
  const double logf = std::log(2.0 * static_cast<double>(d_subspaces) * static_cast<double>(std::max<Index>(n, 1)) / delta);
  const double c = c_gamma(eps / 2.0);
  std::vector<Index> m;
  for (const auto& p : profiles) {
    detail::require(p.kappa >= 0.0 && std::isfinite(p.kappa), "recommend_sample_sizes: invalid kappa");
    m.push_back(static_cast<Index>(std::ceil(c * p.kappa / alpha_hat * logf)));
  }
  return m;
}

/// m = ceil(max(n, n log n) / (d + 1)).
inline Index poly_sample_rule(Index n, Index d) {
  detail::require(n >= 1 && d >= 1, "poly_sample_rule: n and d must be positive");
  const double nd = static_cast<double>(n);
  return static_cast<Index>(std::ceil(std::max(nd, nd * std::log(nd)) / static_cast<double>(d + 1)));
}

}  // namespace cs4ml
