#pragma once

// Sampling operators L_c: each maps an atom of its domain to a p_c-dimensional
// linear measurement of every basis element.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "cs4ml/dft.hpp"
#include "cs4ml/error.hpp"
#include "cs4ml/measure.hpp"
#include "cs4ml/polybasis.hpp"

namespace cs4ml {

/// Cover of {0..elements-1} by index blocks, with multiplicities r_j.
struct Partition {
  Index elements = 0;
  std::vector<std::vector<Index>> blocks;
  std::vector<int> overlap;

  [[nodiscard]] Index size() const { return static_cast<Index>(blocks.size()); }
  [[nodiscard]] Index max_block() const {
    Index p = 0;
    for (const auto& b : blocks) p = std::max(p, static_cast<Index>(b.size()));
    return p;
  }
  [[nodiscard]] bool disjoint() const {
    for (int r : overlap)
      if (r != 1) return false;
    return true;
  }
};

/// Validates that `blocks` covers every element at least once and records
/// the overlap counts.
inline Partition make_partition(Index elements, std::vector<std::vector<Index>> blocks) {
  detail::require(elements > 0, "make_partition: need at least one element");
  detail::require(!blocks.empty(), "make_partition: need at least one block");
  Partition p{elements, std::move(blocks), std::vector<int>(static_cast<std::size_t>(elements), 0)};
  for (const auto& b : p.blocks) {
    detail::require(!b.empty(), "make_partition: empty block");
    for (Index j : b) {
      detail::require(j >= 0 && j < elements, "make_partition: index out of range");
      ++p.overlap[static_cast<std::size_t>(j)];
    }
  }
  for (int r : p.overlap) detail::require(r >= 1, "make_partition: blocks do not cover every index");
  return p;
}

enum class PartitionKind { singletons, lines };

/// Singletons: n^d blocks {j}. Lines: n^(d-1) blocks along `axis`, each
/// holding the n indices that differ only in that coordinate (lexicographic
/// flattening, coordinate 0 most significant).
inline Partition build_partition(PartitionKind kind, Index side, int dim, int axis = 0) {
  detail::require(side >= 1, "build_partition: side must be positive");
  detail::require(dim >= 1 && dim <= 3, "build_partition: dimension must be 1, 2 or 3");
  Index total = 1;
  for (int k = 0; k < dim; ++k) total *= side;
  std::vector<std::vector<Index>> blocks;
  if (kind == PartitionKind::singletons) {
    blocks.reserve(static_cast<std::size_t>(total));
    for (Index j = 0; j < total; ++j) blocks.push_back({j});
    return make_partition(total, std::move(blocks));
  }
  detail::require(dim >= 2, "build_partition: line partitions need dimension at least 2");
  detail::require(axis >= 0 && axis < dim, "build_partition: axis out of range");
  Index stride = 1;
  for (int k = dim - 1; k > axis; --k) stride *= side;
  for (Index base = 0; base < total; ++base) {
    if ((base / stride) % side != 0) continue;
    std::vector<Index> b;
    b.reserve(static_cast<std::size_t>(side));
    for (Index j = 0; j < side; ++j) b.push_back(base + j * stride);
    blocks.push_back(std::move(b));
  }
  return make_partition(total, std::move(blocks));
}

enum class ChannelKind { point_eval, grad_augmented, partial_grad_value, fourier_partition, colloc_interior, colloc_boundary };

inline std::string to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::point_eval: return "point_eval";
    case ChannelKind::grad_augmented: return "grad_augmented";
    case ChannelKind::partial_grad_value: return "partial_grad_value";
    case ChannelKind::fourier_partition: return "fourier_partition";
    case ChannelKind::colloc_interior: return "colloc_interior";
    case ChannelKind::colloc_boundary: return "colloc_boundary";
  }
  return "unknown";
}

/// Immutable descriptor of one sampling process.
class ChannelOperator {
 public:
  /// f -> scale * f(theta).
  static ChannelOperator point_eval(DomainPtr domain, double scale = 1.0) {
    return ChannelOperator(ChannelKind::point_eval, std::move(domain), {scale});
  }

  /// f -> (c_k d_k f(theta))_{k=0..d}, d_0 = identity.
  static ChannelOperator grad_augmented(DomainPtr domain, std::vector<double> scales = {}) {
    detail::require(domain != nullptr, "ChannelOperator: null domain");
    const auto p = static_cast<std::size_t>(domain->dim() + 1);
    if (scales.empty()) scales.assign(p, 1.0);
    detail::require(scales.size() == p, "ChannelOperator: need one scale per derivative row");
    return ChannelOperator(ChannelKind::grad_augmented, std::move(domain), std::move(scales));
  }

  /// Value-only channel of the partial-gradient pair, weight c_0 = 1/sqrt(2).
  static ChannelOperator partial_grad_value(DomainPtr domain) {
    return ChannelOperator(ChannelKind::partial_grad_value, std::move(domain), {1.0 / std::sqrt(2.0)});
  }

  /// x -> sqrt(M) ((F x)_j / sqrt(r_j))_{j in block i}, zero padded to the
  /// largest block. The domain is the M blocks with uniform weight 1/M.
  static ChannelOperator fourier_partition(std::shared_ptr<const UnitaryDft> dft, Partition partition) {
    detail::require(dft != nullptr, "ChannelOperator: null transform");
    detail::require(partition.elements == dft->length(), "ChannelOperator: partition does not match image size");
    const Index m = partition.size();
    auto dom = std::make_shared<const GridDomain>(GridDomain::discrete(m, 1.0 / static_cast<double>(m)));
    ChannelOperator op(ChannelKind::fourier_partition, std::move(dom), {});
    op.output_dim_ = partition.max_block();
    op.partition_ = std::make_shared<const Partition>(std::move(partition));
    op.dft_ = std::move(dft);
    return op;
  }

  /// u -> scale * (-u'')(x), 1-D.
  static ChannelOperator colloc_interior(DomainPtr domain, double scale = 1.0) {
    return ChannelOperator(ChannelKind::colloc_interior, std::move(domain), {scale});
  }

  /// u -> sqrt(lambda) * u(x).
  static ChannelOperator colloc_boundary(DomainPtr domain, double lambda = 1.0) {
    detail::require(lambda > 0.0, "ChannelOperator: boundary weight must be positive");
    return ChannelOperator(ChannelKind::colloc_boundary, std::move(domain), {std::sqrt(lambda)});
  }

  [[nodiscard]] ChannelKind kind() const { return kind_; }
  [[nodiscard]] const GridDomain& domain() const { return *domain_; }
  [[nodiscard]] const DomainPtr& domain_ptr() const { return domain_; }
  [[nodiscard]] Index output_dim() const { return output_dim_; }
  [[nodiscard]] const std::vector<double>& scales() const { return scales_; }
  [[nodiscard]] const Partition& partition() const {
    detail::require(partition_ != nullptr, "ChannelOperator: not a Fourier channel");
    return *partition_;
  }
  [[nodiscard]] const UnitaryDft& dft() const {
    detail::require(dft_ != nullptr, "ChannelOperator: not a Fourier channel");
    return *dft_;
  }
  [[nodiscard]] bool is_complex() const { return kind_ == ChannelKind::fourier_partition; }

  /// Same operator on a different domain (collocation and point kinds).
  [[nodiscard]] ChannelOperator on_domain(DomainPtr domain) const {
    detail::require(!is_complex(), "ChannelOperator: Fourier channels own their domain");
    ChannelOperator op = *this;
    op.domain_ = std::move(domain);
    return op;
  }

 private:
  ChannelOperator(ChannelKind kind, DomainPtr domain, std::vector<double> scales)
      : kind_(kind), domain_(std::move(domain)), scales_(std::move(scales)) {
    detail::require(domain_ != nullptr, "ChannelOperator: null domain");
    output_dim_ = kind_ == ChannelKind::grad_augmented ? static_cast<Index>(scales_.size()) : 1;
  }

  ChannelKind kind_;
  DomainPtr domain_;
  Index output_dim_ = 1;
  std::vector<double> scales_;
  std::shared_ptr<const Partition> partition_;
  std::shared_ptr<const UnitaryDft> dft_;
};

/// Object-space basis for Fourier channels: image vectors and their spectra.
struct ImageBasis {
  Eigen::MatrixXcd spatial;
  Eigen::MatrixXcd spectrum;

  ImageBasis(const UnitaryDft& dft, Eigen::MatrixXcd images)
      : spatial(std::move(images)), spectrum(dft.forward_columns(spatial)) {}

  [[nodiscard]] Index functions() const { return spatial.cols(); }
};

/// p_c x n block of measurements of each basis element at one atom.
inline Eigen::MatrixXd evaluate_block(const ChannelOperator& op, Index atom, const FunctionTable& basis) {
  detail::require(!op.is_complex(), "evaluate_block: Fourier channel needs an image basis");
  detail::require(atom >= 0 && atom < op.domain().size(), "evaluate_block: atom out of range");
  detail::require(basis.atoms() == op.domain().size(), "evaluate_block: basis table not evaluated on this domain");
  const Index n = basis.functions();
  Eigen::MatrixXd blk(op.output_dim(), n);
  switch (op.kind()) {
    case ChannelKind::point_eval:
    case ChannelKind::partial_grad_value:
    case ChannelKind::colloc_boundary:
      blk.row(0) = op.scales()[0] * basis.values.row(atom);
      break;
    case ChannelKind::grad_augmented:
      detail::require(basis.dim() + 1 >= op.output_dim(), "evaluate_block: missing derivative data");
      for (Index k = 0; k < op.output_dim(); ++k)
        blk.row(k) = op.scales()[static_cast<std::size_t>(k)] * basis.derivative(k).row(atom);
      break;
    case ChannelKind::colloc_interior:
      detail::require(basis.has_second(), "evaluate_block: missing second-derivative data");
      blk.row(0) = -op.scales()[0] * basis.second.row(atom);
      break;
    case ChannelKind::fourier_partition:
      break;
  }
  return blk;
}

inline Eigen::MatrixXcd evaluate_block(const ChannelOperator& op, Index atom, const ImageBasis& basis) {
  detail::require(op.is_complex(), "evaluate_block: image basis needs a Fourier channel");
  detail::require(atom >= 0 && atom < op.domain().size(), "evaluate_block: atom out of range");
  const auto& part = op.partition();
  const double root_m = std::sqrt(static_cast<double>(part.size()));
  Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(op.output_dim(), basis.functions());
  const auto& b = part.blocks[static_cast<std::size_t>(atom)];
  for (std::size_t k = 0; k < b.size(); ++k) {
    const Index j = b[k];
    const double s = root_m / std::sqrt(static_cast<double>(part.overlap[static_cast<std::size_t>(j)]));
    blk.row(static_cast<Index>(k)) = s * basis.spectrum.row(j);
  }
  return blk;
}

/// Measurements of every basis element at every atom, stacked with row
/// k * N + i for output component k at atom i.
inline Eigen::MatrixXd evaluate_channel(const ChannelOperator& op, const FunctionTable& basis) {
  const Index n_atoms = op.domain().size();
  detail::require(basis.atoms() == n_atoms, "evaluate_channel: basis table not evaluated on this domain");
  const Index p = op.output_dim();
  Eigen::MatrixXd out(p * n_atoms, basis.functions());
  switch (op.kind()) {
    case ChannelKind::point_eval:
    case ChannelKind::partial_grad_value:
    case ChannelKind::colloc_boundary:
      out = op.scales()[0] * basis.values;
      break;
    case ChannelKind::grad_augmented:
      detail::require(basis.dim() + 1 >= p, "evaluate_channel: missing derivative data");
      for (Index k = 0; k < p; ++k)
        out.middleRows(k * n_atoms, n_atoms) = op.scales()[static_cast<std::size_t>(k)] * basis.derivative(k);
      break;
    case ChannelKind::colloc_interior:
      detail::require(basis.has_second(), "evaluate_channel: missing second-derivative data");
      out = -op.scales()[0] * basis.second;
      break;
    case ChannelKind::fourier_partition:
      throw InvalidArgument("evaluate_channel: Fourier channel needs an image basis");
  }
  return out;
}

inline Eigen::MatrixXcd evaluate_channel(const ChannelOperator& op, const ImageBasis& basis) {
  const Index n_atoms = op.domain().size();
  const Index p = op.output_dim();
  Eigen::MatrixXcd out(p * n_atoms, basis.functions());
  for (Index i = 0; i < n_atoms; ++i) {
    const Eigen::MatrixXcd blk = evaluate_block(op, i, basis);
    for (Index k = 0; k < p; ++k) out.row(k * n_atoms + i) = blk.row(k);
  }
  return out;
}

/// Rows of a stacked channel evaluation scaled by sqrt(base weight).
template <class Derived>
auto weight_rows(const ChannelOperator& op, const Eigen::MatrixBase<Derived>& stacked) {
  using Scalar = typename Derived::Scalar;
  const Index n_atoms = op.domain().size();
  detail::require(stacked.rows() == op.output_dim() * n_atoms, "weight_rows: layout mismatch");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out = stacked;
  const Eigen::VectorXd sw = op.domain().base_weights().cwiseSqrt();
  for (Index k = 0; k < op.output_dim(); ++k)
    out.middleRows(k * n_atoms, n_atoms).array().colwise() *= sw.array().template cast<Scalar>();
  return out;
}

/// Extreme eigenvalues of G = sum_c sum_atoms w * block^H block.
struct NondegeneracyReport {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  Index n = 0;
};

template <class Basis>
NondegeneracyReport gram_nondegeneracy(const std::vector<ChannelOperator>& ops, const Basis& basis) {
  const Index n = basis.functions();
  if (n == 0) throw InvalidArgument("gram_nondegeneracy: empty basis");
  detail::require(!ops.empty(), "gram_nondegeneracy: no channels");
  using Scalar = std::conditional_t<std::is_same_v<Basis, ImageBasis>, Complex, double>;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> g = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  for (const auto& op : ops) {
    const auto s = weight_rows(op, evaluate_channel(op, basis));
    g.noalias() += s.adjoint() * s;
  }
  Eigen::SelfAdjointEigenSolver<decltype(g)> es(g, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  NondegeneracyReport r;
  r.alpha_hat = std::max(0.0, ev.minCoeff());
  r.beta_hat = std::max(r.alpha_hat, ev.maxCoeff());
  r.n = n;
  return r;
}

}  // namespace cs4ml
