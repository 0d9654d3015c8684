#pragma once

// Orthonormal polynomial families, hyperbolic-cross index sets and the
// Sobolev-orthonormal tensor basis evaluated over a grid.

#include <cmath>
#include <compare>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "cs4ml/error.hpp"
#include "cs4ml/measure.hpp"

namespace cs4ml {

class MultiIndex {
 public:
  explicit MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
    detail::require(!entries_.empty(), "MultiIndex: dimension must be at least 1");
    for (int e : entries_) detail::require(e >= 0, "MultiIndex: negative entry");
  }

  [[nodiscard]] std::size_t dim() const { return entries_.size(); }
  [[nodiscard]] int operator[](std::size_t k) const { return entries_[k]; }
  [[nodiscard]] const std::vector<int>& entries() const { return entries_; }
  [[nodiscard]] int l1() const { return std::accumulate(entries_.begin(), entries_.end(), 0); }
  [[nodiscard]] long long product_plus_one() const {
    long long p = 1;
    for (int e : entries_) p *= e + 1;
    return p;
  }

  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> entries_;
};

/// {nu : prod(nu_i + 1) <= p + 1}, sorted lexicographically. The order fixes
/// the column order of every matrix built from the set.
struct HyperbolicCrossSet {
  int order = 0;
  int dim = 1;
  std::vector<MultiIndex> indices;

  [[nodiscard]] Index size() const { return static_cast<Index>(indices.size()); }
};

namespace detail {

inline void enumerate_cross(int dim, long long budget, std::vector<int>& prefix, std::vector<MultiIndex>& out) {
  if (static_cast<int>(prefix.size()) == dim) {
    out.emplace_back(prefix);
    return;
  }
  for (int a = 0; a + 1 <= budget; ++a) {
    prefix.push_back(a);
    enumerate_cross(dim, budget / (a + 1), prefix, out);
    prefix.pop_back();
  }
}

}  // namespace detail

inline HyperbolicCrossSet hyperbolic_cross(int dim, int order) {
  detail::require(dim >= 1, "hyperbolic_cross: dimension must be at least 1");
  detail::require(order >= 0, "hyperbolic_cross: order must be nonnegative");
  HyperbolicCrossSet s{order, dim, {}};
  std::vector<int> prefix;
  detail::enumerate_cross(dim, static_cast<long long>(order) + 1, prefix, s.indices);
  return s;
}

enum class PolyFamily { hermite_prob, legendre_uniform };

struct PolyValues {
  Eigen::VectorXd values;
  Eigen::VectorXd derivs;
};

/// psi_0..psi_{n_max} and their first derivatives at theta. Hermite is
/// orthonormal for the standard Gaussian, Legendre for the uniform
/// probability measure on [-1,1].
inline PolyValues orthonormal_poly_eval(PolyFamily family, int n_max, double theta) {
  detail::require(n_max >= 0, "orthonormal_poly_eval: negative degree");
  detail::require(std::isfinite(theta), "orthonormal_poly_eval: non-finite argument");
  PolyValues r{Eigen::VectorXd(n_max + 1), Eigen::VectorXd(n_max + 1)};
  auto& v = r.values;
  auto& dv = r.derivs;
  if (family == PolyFamily::hermite_prob) {
    v(0) = 1.0;
    if (n_max >= 1) v(1) = theta;
    for (int n = 1; n < n_max; ++n)
      v(n + 1) = theta / std::sqrt(n + 1.0) * v(n) - std::sqrt(n / (n + 1.0)) * v(n - 1);
    dv(0) = 0.0;
    for (int n = 1; n <= n_max; ++n) dv(n) = std::sqrt(static_cast<double>(n)) * v(n - 1);
    return r;
  }
  // Bonnet recurrence on the classical P_n, then scale by sqrt(2n+1).
  Eigen::VectorXd p(n_max + 1), dp(n_max + 1);
  p(0) = 1.0;
  dp(0) = 0.0;
  if (n_max >= 1) {
    p(1) = theta;
    dp(1) = 1.0;
  }
  for (int n = 1; n < n_max; ++n) {
    p(n + 1) = ((2.0 * n + 1.0) * theta * p(n) - n * p(n - 1)) / (n + 1.0);
    dp(n + 1) = (n + 1.0) * p(n) + theta * dp(n);
  }
  for (int n = 0; n <= n_max; ++n) {
    const double c = std::sqrt(2.0 * n + 1.0);
    v(n) = c * p(n);
    dv(n) = c * dp(n);
  }
  return r;
}

/// Values of a function family on a grid: `values` is N x n, `grad[k]` holds
/// the partial derivative along coordinate k, `second` (optional, 1-D
/// dictionaries) the second derivative.
struct FunctionTable {
  Eigen::MatrixXd values;
  std::vector<Eigen::MatrixXd> grad;
  Eigen::MatrixXd second;

  [[nodiscard]] Index atoms() const { return values.rows(); }
  [[nodiscard]] Index functions() const { return values.cols(); }
  [[nodiscard]] Index dim() const { return static_cast<Index>(grad.size()); }
  [[nodiscard]] bool has_second() const { return second.size() > 0; }

  /// k = 0 is the function itself, k >= 1 the partial along coordinate k-1.
  [[nodiscard]] const Eigen::MatrixXd& derivative(Index k) const {
    if (k == 0) return values;
    detail::require(k - 1 < dim(), "FunctionTable: derivative data missing");
    return grad[static_cast<std::size_t>(k - 1)];
  }

  /// Linear recombination of the columns: every table is multiplied by `mix`.
  [[nodiscard]] FunctionTable recombine(const Eigen::MatrixXd& mix) const {
    detail::require(mix.rows() == functions(), "FunctionTable: recombination size mismatch");
    FunctionTable t;
    t.values = values * mix;
    for (const auto& g : grad) t.grad.push_back(g * mix);
    if (has_second()) t.second = second * mix;
    return t;
  }
};

using BasisEvalTable = FunctionTable;

/// Exact H^1 Gram matrix (function plus all first partials, probability
/// weight) of the tensor polynomials Psi_nu over the index set.
inline Eigen::MatrixXd sobolev_gram(const HyperbolicCrossSet& s, PolyFamily family) {
  const Index n = s.size();
  // <psi_a', psi_b'> for the 1-D family.
  auto dip = [family](int a, int b) -> double {
    if (a == 0 || b == 0) return 0.0;
    if (family == PolyFamily::hermite_prob) return a == b ? static_cast<double>(a) : 0.0;
    if ((a + b) % 2 != 0) return 0.0;
    const int lo = std::min(a, b);
    return std::sqrt((2.0 * a + 1.0) * (2.0 * b + 1.0)) * lo * (lo + 1.0) / 2.0;
  };
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto& a = s.indices[static_cast<std::size_t>(i)];
    for (Index j = 0; j < n; ++j) {
      const auto& b = s.indices[static_cast<std::size_t>(j)];
      int mismatches = 0;
      std::size_t where = 0;
      for (std::size_t k = 0; k < a.dim(); ++k)
        if (a[k] != b[k]) {
          ++mismatches;
          where = k;
        }
      double val = 0.0;
      if (mismatches == 0) {
        val = 1.0;
        for (std::size_t k = 0; k < a.dim(); ++k) val += dip(a[k], a[k]);
      } else if (mismatches == 1) {
        val = dip(a[where], b[where]);
      }
      g(i, j) = val;
    }
  }
  return g;
}

/// Change of basis T (upper triangular) with Phi = Psi * T orthonormal in H^1.
/// For Hermite T is diagonal with entries 1/sqrt(1 + |nu|_1).
inline Eigen::MatrixXd sobolev_orthonormalizer(const HyperbolicCrossSet& s, PolyFamily family) {
  const Index n = s.size();
  if (family == PolyFamily::hermite_prob) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) d(i, i) = 1.0 / std::sqrt(1.0 + s.indices[static_cast<std::size_t>(i)].l1());
    return d;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sobolev_gram(s, family));
  if (llt.info() != Eigen::Success) throw NumericalError("sobolev_orthonormalizer: Gram not positive definite");
  // G = U^T U, T = U^{-1}.
  return llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
}

/// Tensor polynomials Psi_nu (no Sobolev normalization) and all first partials.
inline FunctionTable tensor_basis(const HyperbolicCrossSet& s, const GridDomain& grid, PolyFamily family) {
  detail::require(grid.dim() == s.dim, "tensor_basis: grid dimension does not match the index set");
  detail::require(s.size() > 0, "tensor_basis: empty index set");
  const Index n_pts = grid.size();
  const Index n = s.size();
  const int d = s.dim;
  int max_deg = 0;
  for (const auto& nu : s.indices)
    for (std::size_t k = 0; k < nu.dim(); ++k) max_deg = std::max(max_deg, nu[k]);

  FunctionTable t;
  t.values.resize(n_pts, n);
  t.grad.assign(static_cast<std::size_t>(d), Eigen::MatrixXd(n_pts, n));
  std::vector<PolyValues> uni(static_cast<std::size_t>(d));
  for (Index i = 0; i < n_pts; ++i) {
    for (int k = 0; k < d; ++k) uni[static_cast<std::size_t>(k)] = orthonormal_poly_eval(family, max_deg, grid.points()(i, k));
    for (Index j = 0; j < n; ++j) {
      const auto& nu = s.indices[static_cast<std::size_t>(j)];
      double prod = 1.0;
      for (int k = 0; k < d; ++k) prod *= uni[static_cast<std::size_t>(k)].values(nu[static_cast<std::size_t>(k)]);
      t.values(i, j) = prod;
      for (int k = 0; k < d; ++k) {
        double g = uni[static_cast<std::size_t>(k)].derivs(nu[static_cast<std::size_t>(k)]);
        for (int l = 0; l < d; ++l)
          if (l != k) g *= uni[static_cast<std::size_t>(l)].values(nu[static_cast<std::size_t>(l)]);
        t.grad[static_cast<std::size_t>(k)](i, j) = g;
      }
    }
  }
  return t;
}

/// Sobolev-orthonormal basis Phi over the grid, columns in index-set order.
inline BasisEvalTable sobolev_tensor_basis(const HyperbolicCrossSet& s, const GridDomain& grid, PolyFamily family) {
  FunctionTable psi = tensor_basis(s, grid, family);
  if (family == PolyFamily::hermite_prob) {
    // Column scaling only; avoids an n x n product per table.
    for (Index j = 0; j < s.size(); ++j) {
      const double c = 1.0 / std::sqrt(1.0 + s.indices[static_cast<std::size_t>(j)].l1());
      psi.values.col(j) *= c;
      for (auto& g : psi.grad) g.col(j) *= c;
    }
    return psi;
  }
  return psi.recombine(sobolev_orthonormalizer(s, family));
}

}  // namespace cs4ml
