#pragma once

// Finite measurement domains, discrete probability measures over them and
// seeded sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cs4ml/error.hpp"

namespace cs4ml {

using Index = Eigen::Index;

/// Seed plus stream id. Two specs with equal fields produce identical
/// sequences; `child` derives disjoint substreams for trials and channels.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  [[nodiscard]] std::mt19937_64 engine() const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
  }

  [[nodiscard]] RngSpec child(std::uint64_t k) const {
    return RngSpec{seed, splitmix(stream ^ splitmix(k + 0x51ed2701u))};
  }

  template <class... Ks>
  [[nodiscard]] RngSpec child(std::uint64_t k, Ks... rest) const {
    return child(k).child(static_cast<std::uint64_t>(rest)...);
  }

  friend bool operator==(const RngSpec&, const RngSpec&) = default;

 private:
  static constexpr std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }
};

/// Finite point set with nonnegative base weights. Discrete (Fourier) domains
/// store the atom id as a one-column coordinate.
class GridDomain {
 public:
  GridDomain(Eigen::MatrixXd points, Eigen::VectorXd base_weights)
      : points_(std::move(points)), weights_(std::move(base_weights)) {
    detail::require(points_.rows() > 0, "GridDomain: empty point set");
    detail::require(weights_.size() == points_.rows(), "GridDomain: one weight per point required");
    detail::require(points_.allFinite(), "GridDomain: non-finite coordinates");
    detail::require((weights_.array() >= 0.0).all() && weights_.allFinite(),
                    "GridDomain: base weights must be finite and nonnegative");
    total_ = weights_.sum();
    detail::require(total_ > 0.0, "GridDomain: total mass must be positive");
  }

  /// Empirical grid: every point carries weight 1/N.
  static GridDomain empirical(Eigen::MatrixXd points) {
    const Index n = points.rows();
    detail::require(n > 0, "GridDomain: empty point set");
    return GridDomain(std::move(points), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
  }

  /// Atoms 0..M-1 with uniform weight `weight` each (1/M gives a probability space).
  static GridDomain discrete(Index atoms, double weight) {
    detail::require(atoms > 0, "GridDomain: need at least one atom");
    return GridDomain(Eigen::VectorXd::LinSpaced(atoms, 0.0, static_cast<double>(atoms - 1)),
                      Eigen::VectorXd::Constant(atoms, weight));
  }

  [[nodiscard]] Index size() const { return points_.rows(); }
  [[nodiscard]] Index dim() const { return points_.cols(); }
  [[nodiscard]] const Eigen::MatrixXd& points() const { return points_; }
  [[nodiscard]] const Eigen::VectorXd& base_weights() const { return weights_; }
  [[nodiscard]] double total_mass() const { return total_; }

  void write_csv(std::ostream& os) const {
    os.precision(17);
    for (Index i = 0; i < size(); ++i) {
      for (Index k = 0; k < dim(); ++k) os << points_(i, k) << ',';
      os << weights_(i) << '\n';
    }
  }

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
  double total_ = 0.0;
};

using DomainPtr = std::shared_ptr<const GridDomain>;

/// Probability mass function over a domain's atoms with its Radon-Nikodym
/// values nu_i = pmf_i / w_i against the base weights.
class DiscreteMeasure {
 public:
  /// Masses below this are clamped to zero and dropped from the support.
  static constexpr double kMinMass = 1e-300;

  /// `pmf` must sum to one within 1e-12.
  DiscreteMeasure(DomainPtr domain, Eigen::VectorXd pmf) : domain_(std::move(domain)), pmf_(std::move(pmf)) {
    detail::require(domain_ != nullptr, "DiscreteMeasure: null domain");
    detail::require(pmf_.size() == domain_->size(), "DiscreteMeasure: pmf size mismatch");
    detail::require(pmf_.allFinite() && (pmf_.array() >= 0.0).all(),
                    "DiscreteMeasure: pmf must be finite and nonnegative");
    for (Index i = 0; i < pmf_.size(); ++i)
      if (pmf_(i) < kMinMass) pmf_(i) = 0.0;
    const double s = pmf_.sum();
    detail::require(std::abs(s - 1.0) <= 1e-12, "DiscreteMeasure: pmf does not sum to one");
    finalize();
  }

  /// Normalizes an arbitrary nonnegative mass vector.
  static DiscreteMeasure from_mass(DomainPtr domain, const Eigen::VectorXd& mass) {
    detail::require(domain != nullptr, "DiscreteMeasure: null domain");
    detail::require(mass.size() == domain->size(), "DiscreteMeasure: mass size mismatch");
    detail::require(mass.allFinite() && (mass.array() >= 0.0).all(),
                    "DiscreteMeasure: mass must be finite and nonnegative");
    Eigen::VectorXd p = mass;
    for (Index i = 0; i < p.size(); ++i)
      if (p(i) < kMinMass) p(i) = 0.0;
    const double s = p.sum();
    if (!(s > 0.0)) throw NumericalError("DiscreteMeasure: zero total mass");
    p /= s;
    return DiscreteMeasure(std::move(domain), std::move(p), Normalized{});
  }

  /// The base measure rescaled to a probability (nu constant on the support).
  static DiscreteMeasure base(DomainPtr domain) {
    const Eigen::VectorXd w = domain->base_weights();
    return from_mass(std::move(domain), w);
  }

  [[nodiscard]] const GridDomain& domain() const { return *domain_; }
  [[nodiscard]] const DomainPtr& domain_ptr() const { return domain_; }
  [[nodiscard]] const Eigen::VectorXd& pmf() const { return pmf_; }
  [[nodiscard]] const Eigen::VectorXd& nu() const { return nu_; }
  [[nodiscard]] const std::vector<Index>& support() const { return support_; }

  void write_csv(std::ostream& os) const {
    os.precision(17);
    for (Index i = 0; i < pmf_.size(); ++i) os << i << ',' << pmf_(i) << ',' << nu_(i) << '\n';
  }

  /// Inverse-CDF lookup for u in [0,1): first support atom whose cumulative
  /// mass exceeds u.
  [[nodiscard]] Index atom_for(double u) const {
    const double target = u * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    if (it == cdf_.end()) --it;
    return support_[static_cast<std::size_t>(it - cdf_.begin())];
  }

 private:
  struct Normalized {};
  DiscreteMeasure(DomainPtr domain, Eigen::VectorXd pmf, Normalized)
      : domain_(std::move(domain)), pmf_(std::move(pmf)) {
    finalize();
  }

  void finalize() {
    const auto& w = domain_->base_weights();
    nu_ = Eigen::VectorXd::Zero(pmf_.size());
    support_.clear();
    cdf_.clear();
    double acc = 0.0;
    for (Index i = 0; i < pmf_.size(); ++i) {
      if (pmf_(i) == 0.0) continue;
      detail::require(w(i) > 0.0, "DiscreteMeasure: positive mass on an atom with zero base weight");
      nu_(i) = pmf_(i) / w(i);
      acc += pmf_(i);
      support_.push_back(i);
      cdf_.push_back(acc);
    }
    if (support_.empty()) throw NumericalError("DiscreteMeasure: empty support");
  }

  DomainPtr domain_;
  Eigen::VectorXd pmf_;
  Eigen::VectorXd nu_;
  std::vector<Index> support_;
  std::vector<double> cdf_;
};

enum class GridDistribution { gaussian, uniform_cube, uniform_interval };

/// N i.i.d. points from the named distribution (cube and interval are
/// [-1,1]^d), each with weight 1/N.
inline GridDomain monte_carlo_grid(GridDistribution dist, Index dim, Index n, const RngSpec& rng) {
  detail::require(n >= 1, "monte_carlo_grid: N must be at least 1");
  if (dist == GridDistribution::uniform_interval) dim = 1;
  detail::require(dim >= 1, "monte_carlo_grid: dimension must be at least 1");
  auto eng = rng.engine();
  Eigen::MatrixXd pts(n, dim);
  if (dist == GridDistribution::gaussian) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < dim; ++k) pts(i, k) = g(eng);
  } else {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < dim; ++k) pts(i, k) = u(eng);
  }
  return GridDomain::empirical(std::move(pts));
}

/// m i.i.d. draws from `mu` by inverse CDF.
inline std::vector<Index> sample_atoms(const DiscreteMeasure& mu, Index m, const RngSpec& rng) {
  detail::require(m >= 0, "sample_atoms: negative sample count");
  auto eng = rng.engine();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) out.push_back(mu.atom_for(u(eng)));
  return out;
}

/// Total variation distance between two measures on the same domain.
inline double total_variation(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  detail::require(a.pmf().size() == b.pmf().size(), "total_variation: domain size mismatch");
  return 0.5 * (a.pmf() - b.pmf()).cwiseAbs().sum();
}

}  // namespace cs4ml
