#pragma once

// Polynomial regression targets and the relative discrete Sobolev error.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cs4ml/error.hpp"
#include "cs4ml/measure.hpp"
#include "cs4ml/polybasis.hpp"

namespace cs4ml {

/// Target tables (one column) on a grid. Ids:
///   exp_sum      f(t) = exp(-(t_1 + ... + t_d) / (2d))
///   phi:a,b,...  Psi_nu / sqrt(1 + |nu|_1) for the multi-index nu
inline FunctionTable poly_target(const std::string& id, const GridDomain& grid, PolyFamily family) {
  const Index n = grid.size();
  const Index d = grid.dim();
  FunctionTable t;
  t.values.resize(n, 1);
  t.grad.assign(static_cast<std::size_t>(d), Eigen::MatrixXd(n, 1));
  if (id == "exp_sum") {
    const double s = 1.0 / (2.0 * static_cast<double>(d));
    for (Index i = 0; i < n; ++i) {
      const double v = std::exp(-s * grid.points().row(i).sum());
      t.values(i, 0) = v;
      for (Index k = 0; k < d; ++k) t.grad[static_cast<std::size_t>(k)](i, 0) = -s * v;
    }
    return t;
  }
  if (id.rfind("phi:", 0) == 0) {
    std::vector<int> nu;
    std::stringstream ss(id.substr(4));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        nu.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw InvalidArgument("poly_target: bad multi-index in '" + id + "'");
      }
    }
    detail::require(static_cast<Index>(nu.size()) == d, "poly_target: multi-index dimension does not match the grid");
    HyperbolicCrossSet single{0, static_cast<int>(d), {MultiIndex(nu)}};
    FunctionTable psi = tensor_basis(single, grid, family);
    const double c = 1.0 / std::sqrt(1.0 + single.indices[0].l1());
    psi.values *= c;
    for (auto& g : psi.grad) g *= c;
    return psi;
  }
  throw InvalidArgument("poly_target: unknown target '" + id + "'");
}

/// ||f* - f_hat||_{H^1} / ||f*||_{H^1} with the grid weights; f_hat = basis * coeffs.
inline double sobolev_error(const FunctionTable& basis, const Eigen::VectorXd& coeffs, const FunctionTable& target,
                            const GridDomain& grid) {
  detail::require(basis.atoms() == grid.size() && target.atoms() == grid.size(), "sobolev_error: tables not on this grid");
  detail::require(basis.dim() == target.dim(), "sobolev_error: derivative data mismatch");
  detail::require(coeffs.size() == basis.functions(), "sobolev_error: coefficient count mismatch");
  detail::require(target.functions() == 1, "sobolev_error: target must be a single function");
  const Eigen::VectorXd& w = grid.base_weights();
  double num = 0.0;
  double den = 0.0;
  for (Index k = 0; k <= basis.dim(); ++k) {
    const Eigen::VectorXd ref = target.derivative(k).col(0);
    const Eigen::VectorXd diff = basis.derivative(k) * coeffs - ref;
    num += w.dot(diff.cwiseAbs2());
    den += w.dot(ref.cwiseAbs2());
  }
  if (!(den > 0.0)) throw InvalidArgument("sobolev_error: target has zero norm");
  return std::sqrt(num / den);
}

}  // namespace cs4ml
