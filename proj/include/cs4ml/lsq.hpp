#pragma once

// Weighted empirical least squares: assembly of the stacked design matrix,
// SVD-based solution with conditioning diagnostics, and shrinkage.

#include <cmath>
#include <limits>
#include <random>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "cs4ml/christoffel.hpp"
#include "cs4ml/error.hpp"
#include "cs4ml/measure.hpp"
#include "cs4ml/operators.hpp"

namespace cs4ml {

template <class Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Sampled atoms of one channel and the Radon-Nikodym values nu_c at them.
struct ChannelSamples {
  std::vector<Index> atoms;
  Eigen::VectorXd nu;

  [[nodiscard]] Index m() const { return static_cast<Index>(atoms.size()); }

  static ChannelSamples from_atoms(const DiscreteMeasure& mu, std::vector<Index> atoms) {
    ChannelSamples s;
    s.nu.resize(static_cast<Index>(atoms.size()));
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      detail::require(atoms[i] >= 0 && atoms[i] < mu.domain().size(), "ChannelSamples: atom out of range");
      s.nu(static_cast<Index>(i)) = mu.nu()(atoms[i]);
    }
    s.atoms = std::move(atoms);
    return s;
  }

  static ChannelSamples draw(const DiscreteMeasure& mu, Index m, const RngSpec& rng) {
    return from_atoms(mu, sample_atoms(mu, m, rng));
  }
};

/// Which channel, atom and row weight produced each row group.
struct SampleRecord {
  std::vector<Index> atoms;
  std::vector<int> channel;
  std::vector<double> weight;
};

template <class Scalar>
struct WeightedLsqSystem {
  MatrixT<Scalar> A;
  VectorT<Scalar> b;
  SampleRecord record;
};

/// i.i.d. N(0, sigma^2) entries added to every raw measurement before
/// weighting. sigma = 0 skips the noise path entirely.
struct NoiseSpec {
  double sigma = 0.0;
  RngSpec rng{};
};

/// Channel c contributes rows offset_c + k * m_c + i with weight
/// 1 / sqrt(nu_c(theta_ic) m_c). `targets[c]` is the channel evaluation of
/// f* over all atoms (same layout as evaluate_channel).
template <class Basis, class Scalar = std::conditional_t<std::is_same_v<Basis, ImageBasis>, Complex, double>>
WeightedLsqSystem<Scalar> assemble_system(const std::vector<ChannelOperator>& ops,
                                          const std::vector<ChannelSamples>& samples, const Basis& basis,
                                          const std::vector<VectorT<Scalar>>& targets, const NoiseSpec& noise = {}) {
  detail::require(!ops.empty(), "assemble_system: no channels");
  detail::require(samples.size() == ops.size(), "assemble_system: one sample set per channel required");
  detail::require(targets.size() == ops.size(), "assemble_system: one target table per channel required");
  detail::require(noise.sigma >= 0.0 && std::isfinite(noise.sigma), "assemble_system: noise level must be finite and nonnegative");
  Index rows = 0;
  for (std::size_t c = 0; c < ops.size(); ++c) {
    detail::require(targets[c].size() == ops[c].output_dim() * ops[c].domain().size(),
                    "assemble_system: target table layout mismatch");
    rows += ops[c].output_dim() * samples[c].m();
  }
  detail::require(rows > 0, "assemble_system: no samples");
  const Index n = basis.functions();
  WeightedLsqSystem<Scalar> sys;
  sys.A.resize(rows, n);
  sys.b.resize(rows);

  std::mt19937_64 eng;
  std::normal_distribution<double> normal(0.0, 1.0);
  if (noise.sigma > 0.0) eng = noise.rng.engine();

  Index off = 0;
  for (std::size_t c = 0; c < ops.size(); ++c) {
    const auto& op = ops[c];
    const auto& s = samples[c];
    const Index m = s.m();
    const Index p = op.output_dim();
    const Index n_atoms = op.domain().size();
    detail::require(s.nu.size() == m, "assemble_system: nu values missing");
    for (Index i = 0; i < m; ++i) {
      const Index atom = s.atoms[static_cast<std::size_t>(i)];
      const double nu = s.nu(i);
      if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidArgument("assemble_system: sampled atom has nu = 0");
      const double wgt = 1.0 / std::sqrt(nu * static_cast<double>(m));
      const auto blk = evaluate_block(op, atom, basis);
      for (Index k = 0; k < p; ++k) {
        const Index r = off + k * m + i;
        sys.A.row(r) = wgt * blk.row(k);
        Scalar y = targets[c](k * n_atoms + atom);
        if (noise.sigma > 0.0) {
          if constexpr (std::is_same_v<Scalar, Complex>) {
            const double re = normal(eng);
            const double im = normal(eng);
            y += noise.sigma * Complex(re, im);
          } else {
            y += noise.sigma * normal(eng);
          }
        }
        sys.b(r) = wgt * y;
      }
      sys.record.atoms.push_back(atom);
      sys.record.channel.push_back(static_cast<int>(c));
      sys.record.weight.push_back(wgt);
    }
    off += p * m;
  }
  return sys;
}

/// Real system [Re A; Im A] x = [Re b; Im b] for real unknowns.
inline WeightedLsqSystem<double> realify(const WeightedLsqSystem<Complex>& sys) {
  WeightedLsqSystem<double> r;
  const Index rows = sys.A.rows();
  r.A.resize(2 * rows, sys.A.cols());
  r.A.topRows(rows) = sys.A.real();
  r.A.bottomRows(rows) = sys.A.imag();
  r.b.resize(2 * rows);
  r.b.head(rows) = sys.b.real();
  r.b.tail(rows) = sys.b.imag();
  r.record = sys.record;
  return r;
}

template <class Scalar>
struct FitResult {
  VectorT<Scalar> coeffs;
  double residual = 0.0;
  double alpha_prime = 0.0;
  double beta_prime = 0.0;
  /// +inf when alpha_prime = 0.
  double cond = std::numeric_limits<double>::infinity();
  Index rank = 0;
  double objective_gap = 0.0;
};

/// Extreme singular values of A viewed as a map on the coefficient space
/// (sigma_min = 0 for wide matrices).
template <class Scalar>
std::pair<double, double> extreme_singular_values(const MatrixT<Scalar>& a) {
  Eigen::BDCSVD<MatrixT<Scalar>> svd(a);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double smin = (a.rows() < a.cols() || sv.size() == 0) ? 0.0 : sv(sv.size() - 1);
  return {smin, smax};
}

/// Minimum-norm least-squares solution via SVD.
template <class Scalar>
FitResult<Scalar> solve_system(const WeightedLsqSystem<Scalar>& sys) {
  detail::require(sys.A.rows() > 0 && sys.A.cols() > 0, "solve_system: empty system");
  detail::require(sys.b.size() == sys.A.rows(), "solve_system: right-hand side size mismatch");
  detail::require(sys.A.allFinite() && sys.b.allFinite(), "solve_system: non-finite entries");
  Eigen::BDCSVD<MatrixT<Scalar>> svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  FitResult<Scalar> r;
  r.coeffs = svd.solve(sys.b);
  r.residual = (sys.A * r.coeffs - sys.b).norm();
  const auto& sv = svd.singularValues();
  r.beta_prime = sv(0);
  r.alpha_prime = sys.A.rows() < sys.A.cols() ? 0.0 : sv(sv.size() - 1);
  r.cond = r.alpha_prime > 0.0 ? r.beta_prime / r.alpha_prime : std::numeric_limits<double>::infinity();
  r.rank = svd.rank();
  return r;
}

/// min{1, sigma / ||c||} c.
template <class Derived>
auto shrink(const Eigen::MatrixBase<Derived>& coeffs, double sigma) {
  detail::require(sigma > 0.0, "shrink: sigma must be positive");
  using Plain = typename Derived::PlainObject;
  Plain out = coeffs;
  const double nrm = out.norm();
  if (nrm > sigma) out *= sigma / nrm;
  return out;
}

}  // namespace cs4ml
