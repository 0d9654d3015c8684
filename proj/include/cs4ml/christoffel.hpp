#pragma once

// Generalized Christoffel functions over finite grids: orthonormal frames,
// exact and surrogate profiles, optimal measures, the empirical estimator for
// generative models, the sparse surrogate, hierarchical measures and matrix
// leverage scores.

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "cs4ml/dft.hpp"
#include "cs4ml/error.hpp"
#include "cs4ml/measure.hpp"
#include "cs4ml/operators.hpp"
#include "cs4ml/polybasis.hpp"

namespace cs4ml {

template <class Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class ProfileSource { exact_subspace, upper_surrogate, empirical, sparse };

inline std::string to_string(ProfileSource s) {
  switch (s) {
    case ProfileSource::exact_subspace: return "exact_subspace";
    case ProfileSource::upper_surrogate: return "upper_surrogate";
    case ProfileSource::empirical: return "empirical";
    case ProfileSource::sparse: return "sparse";
  }
  return "unknown";
}

/// K over the atoms of a domain plus kappa = sum_i K_i w_i.
struct ChristoffelProfile {
  DomainPtr domain;
  Eigen::VectorXd K;
  double kappa = 0.0;
  ProfileSource source = ProfileSource::exact_subspace;

  static ChristoffelProfile make(DomainPtr domain, Eigen::VectorXd k, ProfileSource source) {
    detail::require(domain != nullptr, "ChristoffelProfile: null domain");
    detail::require(k.size() == domain->size(), "ChristoffelProfile: one value per atom required");
    detail::require(k.allFinite() && (k.array() >= 0.0).all(), "ChristoffelProfile: K must be finite and nonnegative");
    ChristoffelProfile p;
    p.kappa = k.dot(domain->base_weights());
    p.K = std::move(k);
    p.domain = std::move(domain);
    p.source = source;
    return p;
  }

  /// atom, coordinates..., K, pmf of the induced optimal measure (0 if kappa = 0).
  void write_csv(std::ostream& os) const {
    os.precision(17);
    const auto& pts = domain->points();
    const auto& w = domain->base_weights();
    for (Index i = 0; i < K.size(); ++i) {
      os << i;
      for (Index k = 0; k < pts.cols(); ++k) os << ',' << pts(i, k);
      os << ',' << K(i) << ',' << (kappa > 0.0 ? K(i) * w(i) / kappa : 0.0) << '\n';
    }
  }
};

/// Rows [row_offset, row_offset + p * atoms) of a stacked matrix belong to one
/// channel; output component k of atom i sits at row_offset + k * atoms + i.
struct ChannelLayout {
  Index row_offset = 0;
  Index atoms = 0;
  Index p = 1;
  DomainPtr domain;

  [[nodiscard]] Index rows() const { return p * atoms; }
};

template <class Scalar>
struct OrthonormalFrame {
  MatrixT<Scalar> q;
  Index rank = 0;
  std::vector<ChannelLayout> layout;
  /// False when qr mode met a rank-deficient input.
  bool valid = true;
  Eigen::VectorXd singular_values;
};

enum class OrthoMode { qr, svd };

struct OrthoOptions {
  OrthoMode mode = OrthoMode::qr;
  double delta_tol = 1e-6;
};

/// Stacked, sqrt(w)-scaled evaluation of a basis through several channels.
template <class Scalar>
struct StackedChannels {
  MatrixT<Scalar> rows;
  std::vector<ChannelLayout> layout;
};

template <class Basis>
auto stack_channels(const std::vector<ChannelOperator>& ops, const Basis& basis) {
  using Scalar = std::conditional_t<std::is_same_v<Basis, ImageBasis>, Complex, double>;
  detail::require(!ops.empty(), "stack_channels: no channels");
  StackedChannels<Scalar> out;
  std::vector<MatrixT<Scalar>> parts;
  Index total = 0;
  for (const auto& op : ops) {
    parts.push_back(weight_rows(op, evaluate_channel(op, basis)));
    out.layout.push_back({total, op.domain().size(), op.output_dim(), op.domain_ptr()});
    total += parts.back().rows();
  }
  out.rows.resize(total, basis.functions());
  for (std::size_t c = 0; c < parts.size(); ++c) out.rows.middleRows(out.layout[c].row_offset, parts[c].rows()) = parts[c];
  return out;
}

/// Orthonormal basis (columns of q) for the range of the stacked matrix.
/// qr: column-pivoted Householder; svd: Householder then Jacobi SVD of R,
/// dropping sigma_i / sigma_1 <= delta_tol.
template <class Scalar>
OrthonormalFrame<Scalar> orthonormalize_on_grid(const MatrixT<Scalar>& stacked, std::vector<ChannelLayout> layout,
                                                const OrthoOptions& opt = {}) {
  detail::require(stacked.rows() > 0 && stacked.cols() > 0, "orthonormalize_on_grid: empty input");
  detail::require(stacked.allFinite(), "orthonormalize_on_grid: non-finite entries");
  Index covered = 0;
  for (const auto& l : layout) {
    detail::require(l.row_offset == covered, "orthonormalize_on_grid: channel layout is not contiguous");
    covered += l.rows();
  }
  detail::require(covered == stacked.rows(), "orthonormalize_on_grid: layout does not cover the stacked rows");
  detail::require(opt.delta_tol >= 0.0 && opt.delta_tol < 1.0, "orthonormalize_on_grid: delta_tol must lie in [0,1)");

  const Index rows = stacked.rows();
  const Index n = stacked.cols();
  OrthonormalFrame<Scalar> f;
  f.layout = std::move(layout);
  if (stacked.cwiseAbs().maxCoeff() == 0.0) {
    f.q.resize(rows, 0);
    f.rank = 0;
    f.valid = opt.mode == OrthoMode::svd;
    f.singular_values = Eigen::VectorXd::Zero(std::min(rows, n));
    return f;
  }

  if (opt.mode == OrthoMode::qr) {
    Eigen::ColPivHouseholderQR<MatrixT<Scalar>> qr(stacked);
    qr.setThreshold(1e-12);
    f.rank = qr.rank();
    f.valid = f.rank == n;
    f.q = qr.householderQ() * MatrixT<Scalar>::Identity(rows, f.rank);
    const Index k = std::min(rows, n);
    f.singular_values = qr.matrixR().topLeftCorner(k, k).diagonal().cwiseAbs();
    return f;
  }

  const Index k = std::min(rows, n);
  Eigen::HouseholderQR<MatrixT<Scalar>> hqr(stacked);
  const MatrixT<Scalar> r = hqr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<MatrixT<Scalar>> svd(r, Eigen::ComputeFullU);
  f.singular_values = svd.singularValues();
  const double s1 = f.singular_values(0);
  Index rank = 0;
  while (rank < f.singular_values.size() && f.singular_values(rank) > opt.delta_tol * s1) ++rank;
  f.rank = rank;
  f.valid = true;
  const MatrixT<Scalar> qthin = hqr.householderQ() * MatrixT<Scalar>::Identity(rows, k);
  f.q = qthin * svd.matrixU().leftCols(rank);
  return f;
}

template <class Scalar>
OrthonormalFrame<Scalar> orthonormalize_on_grid(const StackedChannels<Scalar>& s, const OrthoOptions& opt = {}) {
  return orthonormalize_on_grid<Scalar>(s.rows, s.layout, opt);
}

namespace detail {

inline const ChannelLayout& channel_layout(const std::vector<ChannelLayout>& layout, std::size_t c) {
  require(c < layout.size(), "christoffel: channel index out of range");
  require(layout[c].domain != nullptr, "christoffel: channel layout has no domain");
  return layout[c];
}

/// p x cols block of atom i.
template <class Scalar>
MatrixT<Scalar> atom_block(const MatrixT<Scalar>& rows, const ChannelLayout& l, Index i) {
  MatrixT<Scalar> b(l.p, rows.cols());
  for (Index k = 0; k < l.p; ++k) b.row(k) = rows.row(l.row_offset + k * l.atoms + i);
  return b;
}

template <class Scalar>
double largest_sq_singular(const MatrixT<Scalar>& b) {
  if (b.rows() == 1) return b.squaredNorm();
  const MatrixT<Scalar> g = b * b.adjoint();
  Eigen::SelfAdjointEigenSolver<MatrixT<Scalar>> es(g, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

}  // namespace detail

/// K_i = (1/w_i) sum_k sum_j |q_{off + k N + i, j}|^2 for channel c. Exact
/// when p_c = 1, an upper bound (within a factor p_c) otherwise.
template <class Scalar>
ChristoffelProfile christoffel_from_frame(const OrthonormalFrame<Scalar>& frame, std::size_t c = 0) {
  const auto& l = detail::channel_layout(frame.layout, c);
  if (frame.rank == 0)
    throw DegenerateSubspace("christoffel_from_frame: rank-0 frame, no element of the class is seen by the channel");
  const auto& w = l.domain->base_weights();
  const Eigen::VectorXd rn = frame.q.middleRows(l.row_offset, l.rows()).rowwise().squaredNorm();
  Eigen::VectorXd k = Eigen::VectorXd::Zero(l.atoms);
  for (Index kk = 0; kk < l.p; ++kk) k += rn.segment(kk * l.atoms, l.atoms);
  for (Index i = 0; i < l.atoms; ++i) k(i) = w(i) > 0.0 ? k(i) / w(i) : 0.0;
  return ChristoffelProfile::make(l.domain, std::move(k),
                                  l.p == 1 ? ProfileSource::exact_subspace : ProfileSource::upper_surrogate);
}

/// Exact K for vector-valued channels: largest squared singular value of the
/// per-atom block of the frame, divided by w_i.
template <class Scalar>
ChristoffelProfile christoffel_exact(const OrthonormalFrame<Scalar>& frame, std::size_t c = 0) {
  const auto& l = detail::channel_layout(frame.layout, c);
  if (frame.rank == 0)
    throw DegenerateSubspace("christoffel_exact: rank-0 frame, no element of the class is seen by the channel");
  const auto& w = l.domain->base_weights();
  Eigen::VectorXd k(l.atoms);
  for (Index i = 0; i < l.atoms; ++i)
    k(i) = w(i) > 0.0 ? detail::largest_sq_singular<Scalar>(detail::atom_block<Scalar>(frame.q, l, i)) / w(i) : 0.0;
  return ChristoffelProfile::make(l.domain, std::move(k), ProfileSource::exact_subspace);
}

/// K from the unscaled channel evaluation of a basis that is already
/// orthonormal in the object norm: sigma_max^2 of each atom block.
template <class Derived>
ChristoffelProfile christoffel_from_orthonormal_basis(const ChannelOperator& op, const Eigen::MatrixBase<Derived>& evaluation) {
  using Scalar = typename Derived::Scalar;
  const ChannelLayout l{0, op.domain().size(), op.output_dim(), op.domain_ptr()};
  detail::require(evaluation.rows() == l.rows(), "christoffel_from_orthonormal_basis: layout mismatch");
  const MatrixT<Scalar> ev = evaluation;
  Eigen::VectorXd k(l.atoms);
  for (Index i = 0; i < l.atoms; ++i) k(i) = detail::largest_sq_singular<Scalar>(detail::atom_block<Scalar>(ev, l, i));
  return ChristoffelProfile::make(l.domain, std::move(k), ProfileSource::exact_subspace);
}

/// pmf_i = K_i w_i / kappa, renormalized to sum to one exactly.
inline DiscreteMeasure optimal_measure(const ChristoffelProfile& profile) {
  if (!(profile.kappa > 0.0)) throw NumericalError("optimal_measure: kappa must be positive");
  const Eigen::VectorXd mass = profile.K.cwiseProduct(profile.domain->base_weights()) / profile.kappa;
  return DiscreteMeasure::from_mass(profile.domain, mass);
}

struct EmpiricalChristoffelResult {
  ChristoffelProfile profile;
  /// Running maximum after each retained iteration.
  std::vector<Eigen::VectorXd> snapshots;
  /// ||K(t) - K(final)|| / ||K(final)|| per snapshot.
  std::vector<double> relative_error;
  Index skipped = 0;
};

/// Running max over t difference draws g = G(z1) - G(z2) of
/// a_i = M sum_{j in block i} |(F g)_j|^2 / r_j / ||g||^2.
/// `gen` needs latent_dim() and forward(z) -> real image vector.
template <class Gen>
EmpiricalChristoffelResult empirical_christoffel(const Gen& gen, const UnitaryDft& dft, const Partition& partition,
                                                 Index t, const RngSpec& rng, Index snapshot_stride = 1) {
  detail::require(t >= 1, "empirical_christoffel: need at least one iteration");
  detail::require(snapshot_stride >= 1, "empirical_christoffel: snapshot stride must be positive");
  detail::require(partition.elements == dft.length(), "empirical_christoffel: partition does not match image size");
  const Index m_blocks = partition.size();
  const double m_d = static_cast<double>(m_blocks);
  auto eng = rng.engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index p = gen.latent_dim();

  EmpiricalChristoffelResult res;
  Eigen::VectorXd kt = Eigen::VectorXd::Zero(m_blocks);
  Eigen::VectorXd z1(p), z2(p);
  for (Index it = 0; it < t; ++it) {
    for (Index j = 0; j < p; ++j) z1(j) = normal(eng);
    for (Index j = 0; j < p; ++j) z2(j) = normal(eng);
    const Eigen::VectorXd g = gen.forward(z1) - gen.forward(z2);
    detail::require(g.size() == dft.length(), "empirical_christoffel: generator output has the wrong length");
    const double g2 = g.squaredNorm();
    if (g2 > 0.0) {
      const Eigen::VectorXcd fg = dft.forward(g.cast<Complex>());
      for (Index i = 0; i < m_blocks; ++i) {
        double a = 0.0;
        for (Index j : partition.blocks[static_cast<std::size_t>(i)])
          a += std::norm(fg(j)) / partition.overlap[static_cast<std::size_t>(j)];
        kt(i) = std::max(kt(i), m_d * a / g2);
      }
    } else {
      ++res.skipped;
    }
    if ((it + 1) % snapshot_stride == 0 || it + 1 == t) res.snapshots.push_back(kt);
  }
  auto dom = std::make_shared<const GridDomain>(GridDomain::discrete(m_blocks, 1.0 / m_d));
  res.profile = ChristoffelProfile::make(std::move(dom), kt, ProfileSource::empirical);
  const double fin = kt.norm();
  for (const auto& s : res.snapshots) res.relative_error.push_back(fin > 0.0 ? (s - kt).norm() / fin : 0.0);
  return res;
}

/// K(theta) = max_j |phi_j(theta)|^2 over the columns of `values`.
template <class Derived>
ChristoffelProfile sparse_surrogate(DomainPtr domain, const Eigen::MatrixBase<Derived>& values) {
  detail::require(domain != nullptr, "sparse_surrogate: null domain");
  detail::require(values.cols() > 0, "sparse_surrogate: empty basis");
  detail::require(values.rows() == domain->size(), "sparse_surrogate: one row per atom required");
  Eigen::VectorXd k = values.cwiseAbs2().rowwise().maxCoeff();
  return ChristoffelProfile::make(std::move(domain), std::move(k), ProfileSource::sparse);
}

/// Densities sum_k |d_k Phi_j|^2 (k = 0..d), one column per basis function,
/// each renormalized to integrate to one against the grid weights.
inline Eigen::MatrixXd hierarchical_densities(const FunctionTable& basis, const GridDomain& grid) {
  detail::require(basis.atoms() == grid.size(), "hierarchical_densities: table not evaluated on this grid");
  detail::require(basis.functions() > 0, "hierarchical_densities: empty basis");
  Eigen::MatrixXd dens = basis.values.cwiseAbs2();
  for (const auto& g : basis.grad) dens += g.cwiseAbs2();
  for (Index j = 0; j < dens.cols(); ++j) {
    const double integral = dens.col(j).dot(grid.base_weights());
    if (!(integral > 0.0)) throw NumericalError("hierarchical_densities: basis function with zero Sobolev mass on the grid");
    dens.col(j) /= integral;
  }
  return dens;
}

inline std::vector<DiscreteMeasure> hierarchical_measures(const FunctionTable& basis, const DomainPtr& grid) {
  detail::require(grid != nullptr, "hierarchical_measures: null grid");
  const Eigen::MatrixXd dens = hierarchical_densities(basis, *grid);
  std::vector<DiscreteMeasure> out;
  out.reserve(static_cast<std::size_t>(dens.cols()));
  for (Index j = 0; j < dens.cols(); ++j)
    out.push_back(DiscreteMeasure::from_mass(grid, dens.col(j).cwiseProduct(grid->base_weights())));
  return out;
}

/// tau_i = a_i^T (A^T A)^{-1} a_i.
inline Eigen::VectorXd matrix_leverage_scores(const Eigen::MatrixXd& a) {
  detail::require(a.rows() > 0 && a.cols() > 0, "matrix_leverage_scores: empty matrix");
  detail::require(a.allFinite(), "matrix_leverage_scores: non-finite entries");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < a.cols()) throw NumericalError("matrix_leverage_scores: matrix is rank deficient");
  const Eigen::MatrixXd g = a.transpose() * a;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw NumericalError("matrix_leverage_scores: normal matrix not positive definite");
  const Eigen::MatrixXd x = llt.solve(a.transpose());
  return a.cwiseProduct(x.transpose()).rowwise().sum();
}

}  // namespace cs4ml
