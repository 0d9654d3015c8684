#pragma once

// Christoffel adaptive sampling over an adaptive-dictionary model, with a 1-D
// Poisson collocation fixture and a tanh random-feature model.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "cs4ml/christoffel.hpp"
#include "cs4ml/error.hpp"
#include "cs4ml/lsq.hpp"
#include "cs4ml/measure.hpp"
#include "cs4ml/operators.hpp"
#include "cs4ml/polybasis.hpp"

namespace cs4ml {

/// Training data for one iteration: channel operators, their accumulated
/// samples (nu from the current measures) and exact target measurements over
/// every atom of each channel domain.
struct CollocationData {
  const std::vector<ChannelOperator>* ops = nullptr;
  const std::vector<ChannelSamples>* samples = nullptr;
  const std::vector<Eigen::VectorXd>* targets = nullptr;
};

/// A model u = sum_j c_j H_j with a fixed-size dictionary. `dictionary`
/// evaluates the H_j (values, derivatives, second derivatives) on a grid;
/// `train` returns the warm-started successor.
template <class M>
concept TrainableModel = requires(const M& m, const GridDomain& g, const CollocationData& data) {
  { m.features() } -> std::convertible_to<Index>;
  { m.dictionary(g) } -> std::same_as<FunctionTable>;
  { m.predict(g) } -> std::same_as<Eigen::VectorXd>;
  { m.train(data) } -> std::same_as<M>;
};

/// h_j(x) = tanh(w_j x + b_j).
struct TanhFeatures {
  Eigen::VectorXd w;
  Eigen::VectorXd b;

  [[nodiscard]] Index size() const { return w.size(); }

  /// Centers U(-1,1), slopes |w| ~ U(lo, hi) with random sign, b = -w c.
  static TanhFeatures random(Index n_feat, const RngSpec& rng, double lo = 1.0, double hi = 6.0) {
    detail::require(n_feat >= 1, "TanhFeatures: need at least one feature");
    auto eng = rng.engine();
    std::uniform_real_distribution<double> center(-1.0, 1.0);
    std::uniform_real_distribution<double> slope(lo, hi);
    std::bernoulli_distribution sign(0.5);
    TanhFeatures f{Eigen::VectorXd(n_feat), Eigen::VectorXd(n_feat)};
    for (Index j = 0; j < n_feat; ++j) {
      const double c = center(eng);
      const double w = slope(eng) * (sign(eng) ? 1.0 : -1.0);
      f.w(j) = w;
      f.b(j) = -w * c;
    }
    return f;
  }
};

/// Tables of h_j, h_j' and h_j'' over a 1-D grid.
inline FunctionTable poisson_feature_dictionary(const TanhFeatures& f, const GridDomain& grid) {
  detail::require(grid.dim() == 1, "poisson_feature_dictionary: grid must be one-dimensional");
  detail::require(f.w.size() == f.b.size() && f.size() > 0, "poisson_feature_dictionary: bad feature parameters");
  const Index n = grid.size();
  const Index k = f.size();
  FunctionTable t;
  t.values.resize(n, k);
  t.grad.assign(1, Eigen::MatrixXd(n, k));
  t.second.resize(n, k);
  for (Index j = 0; j < k; ++j) {
    const double w = f.w(j);
    for (Index i = 0; i < n; ++i) {
      const double th = std::tanh(w * grid.points()(i, 0) + f.b(j));
      const double s = 1.0 - th * th;
      t.values(i, j) = th;
      t.grad[0](i, j) = w * s;
      t.second(i, j) = -2.0 * w * w * th * s;
    }
  }
  return t;
}

/// Partial derivatives of the dictionary tables with respect to w_j and b_j
/// (column j only depends on feature j).
struct FeatureSensitivity {
  FunctionTable dw;
  FunctionTable db;
};

inline FeatureSensitivity poisson_feature_sensitivity(const TanhFeatures& f, const GridDomain& grid) {
  const Index n = grid.size();
  const Index k = f.size();
  FeatureSensitivity s;
  for (auto* t : {&s.dw, &s.db}) {
    t->values.resize(n, k);
    t->grad.assign(1, Eigen::MatrixXd(n, k));
    t->second.resize(n, k);
  }
  for (Index j = 0; j < k; ++j) {
    const double w = f.w(j);
    for (Index i = 0; i < n; ++i) {
      const double x = grid.points()(i, 0);
      const double th = std::tanh(w * x + f.b(j));
      const double sech2 = 1.0 - th * th;
      // d/du of tanh(u) sech^2(u) and of sech^2(u).
      const double dq = sech2 * (sech2 - 2.0 * th * th);
      const double ds = -2.0 * th * sech2;
      s.dw.values(i, j) = sech2 * x;
      s.db.values(i, j) = sech2;
      s.dw.grad[0](i, j) = sech2 + w * ds * x;
      s.db.grad[0](i, j) = w * ds;
      s.dw.second(i, j) = -4.0 * w * th * sech2 - 2.0 * w * w * dq * x;
      s.db.second(i, j) = -2.0 * w * w * dq;
    }
  }
  return s;
}

struct AdaptationOptions {
  int steps = 50;
  /// Length of each step in (w, b) along the normalized negative gradient.
  double step_size = 1e-2;
  /// Relative singular-value cutoff of the output-coefficient solve.
  double solve_tol = 1e-10;
};

namespace detail {

/// Sampled coordinates of one channel as a standalone grid.
inline DomainPtr sample_grid(const ChannelOperator& op, const ChannelSamples& s) {
  require(s.m() > 0, "sample_grid: channel has no samples");
  Eigen::MatrixXd pts(s.m(), op.domain().dim());
  for (Index i = 0; i < s.m(); ++i) pts.row(i) = op.domain().points().row(s.atoms[static_cast<std::size_t>(i)]);
  return std::make_shared<const GridDomain>(GridDomain::empirical(std::move(pts)));
}

/// Row weights 1/sqrt(nu m) in the stacked order offset_c + k m_c + i.
inline Eigen::VectorXd stacked_weights(const std::vector<ChannelOperator>& ops, const std::vector<ChannelSamples>& samples) {
  Index rows = 0;
  for (std::size_t c = 0; c < ops.size(); ++c) rows += ops[c].output_dim() * samples[c].m();
  Eigen::VectorXd w(rows);
  Index off = 0;
  for (std::size_t c = 0; c < ops.size(); ++c) {
    const Index m = samples[c].m();
    for (Index k = 0; k < ops[c].output_dim(); ++k)
      for (Index i = 0; i < m; ++i) {
        const double nu = samples[c].nu(i);
        if (!(nu > 0.0)) throw InvalidArgument("stacked_weights: sampled atom has nu = 0");
        w(off + k * m + i) = 1.0 / std::sqrt(nu * static_cast<double>(m));
      }
    off += ops[c].output_dim() * m;
  }
  return w;
}

}  // namespace detail

/// u = sum_j c_j tanh(w_j x + b_j). Training solves the weighted collocation
/// least squares for c and, when adaptation is enabled, takes gradient steps
/// on (w, b) with c re-solved after every step (variable projection).
class TanhFeatureModel {
 public:
  TanhFeatureModel(TanhFeatures f, AdaptationOptions opt)
      : feat_(std::move(f)), coeffs_(Eigen::VectorXd::Zero(feat_.size())), opt_(opt) {}

  static TanhFeatureModel frozen(TanhFeatures f) { return TanhFeatureModel(std::move(f), AdaptationOptions{0, 0.0}); }

  [[nodiscard]] Index features() const { return feat_.size(); }
  [[nodiscard]] const TanhFeatures& parameters() const { return feat_; }
  [[nodiscard]] const Eigen::VectorXd& coefficients() const { return coeffs_; }
  [[nodiscard]] FunctionTable dictionary(const GridDomain& g) const { return poisson_feature_dictionary(feat_, g); }
  [[nodiscard]] Eigen::VectorXd predict(const GridDomain& g) const { return dictionary(g).values * coeffs_; }

  [[nodiscard]] TanhFeatureModel train(const CollocationData& data) const {
    detail::require(data.ops && data.samples && data.targets, "TanhFeatureModel: incomplete training data");
    const auto& ops = *data.ops;
    const auto& samples = *data.samples;
    detail::require(samples.size() == ops.size() && data.targets->size() == ops.size(),
                    "TanhFeatureModel: one sample set and target per channel required");

    std::vector<ChannelOperator> local;
    std::vector<DomainPtr> grids;
    for (std::size_t c = 0; c < ops.size(); ++c) {
      grids.push_back(detail::sample_grid(ops[c], samples[c]));
      local.push_back(ops[c].on_domain(grids.back()));
    }
    const Eigen::VectorXd wts = detail::stacked_weights(ops, samples);
    Eigen::VectorXd y(wts.size());
    {
      Index off = 0;
      for (std::size_t c = 0; c < ops.size(); ++c) {
        const Index m = samples[c].m();
        const Index n_atoms = ops[c].domain().size();
        const auto& t = (*data.targets)[c];
        detail::require(t.size() == ops[c].output_dim() * n_atoms, "TanhFeatureModel: target layout mismatch");
        for (Index k = 0; k < ops[c].output_dim(); ++k)
          for (Index i = 0; i < m; ++i) y(off + k * m + i) = t(k * n_atoms + samples[c].atoms[static_cast<std::size_t>(i)]);
        off += ops[c].output_dim() * m;
      }
    }
    const Eigen::VectorXd yw = wts.cwiseProduct(y);
    const double ynorm2 = std::max(yw.squaredNorm(), 1e-300);

    auto design = [&](const TanhFeatures& f) {
      Eigen::MatrixXd a(wts.size(), f.size());
      Index off = 0;
      for (std::size_t c = 0; c < local.size(); ++c) {
        const Eigen::MatrixXd blk = evaluate_channel(local[c], poisson_feature_dictionary(f, *grids[c]));
        a.middleRows(off, blk.rows()) = blk;
        off += blk.rows();
      }
      return Eigen::MatrixXd(wts.asDiagonal() * a);
    };
    auto solve = [&](const Eigen::MatrixXd& a, Eigen::VectorXd& c) {
      Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
      svd.setThreshold(opt_.solve_tol);
      c = svd.solve(yw);
      return (a * c - yw).squaredNorm() / ynorm2;
    };

    TanhFeatureModel next = *this;
    Eigen::MatrixXd a = design(next.feat_);
    double obj = solve(a, next.coeffs_);
    double eta = opt_.step_size;
    for (int step = 0; step < opt_.steps; ++step) {
      const Eigen::VectorXd r = a * next.coeffs_ - yw;
      Eigen::VectorXd gw = Eigen::VectorXd::Zero(next.features());
      Eigen::VectorXd gb = Eigen::VectorXd::Zero(next.features());
      Index off = 0;
      for (std::size_t c = 0; c < local.size(); ++c) {
        const auto sens = poisson_feature_sensitivity(next.feat_, *grids[c]);
        const Eigen::MatrixXd dw = evaluate_channel(local[c], sens.dw);
        const Eigen::MatrixXd db = evaluate_channel(local[c], sens.db);
        const auto rw = r.segment(off, dw.rows()).cwiseProduct(wts.segment(off, dw.rows()));
        gw += dw.transpose() * rw;
        gb += db.transpose() * rw;
        off += dw.rows();
      }
      gw = gw.cwiseProduct(next.coeffs_);
      gb = gb.cwiseProduct(next.coeffs_);
      // Near-interpolating fits have tiny gradients; only the direction is used.
      const double gnorm = std::sqrt(gw.squaredNorm() + gb.squaredNorm());
      if (!(gnorm > 0.0) || !std::isfinite(gnorm)) break;
      gw /= gnorm;
      gb /= gnorm;
      bool accepted = false;
      for (int halving = 0; halving < 20 && !accepted; ++halving) {
        TanhFeatures trial{next.feat_.w - eta * gw, next.feat_.b - eta * gb};
        const Eigen::MatrixXd at = design(trial);
        Eigen::VectorXd ct;
        const double ot = solve(at, ct);
        if (std::isfinite(ot) && ot <= obj) {
          next.feat_ = std::move(trial);
          next.coeffs_ = std::move(ct);
          a = at;
          obj = ot;
          accepted = true;
          eta = std::min(2.0 * eta, opt_.step_size);
        } else {
          eta *= 0.5;
        }
      }
      if (!accepted) break;
    }
    next.objective_ = obj;
    return next;
  }

  /// Normalized weighted objective after the last train call.
  [[nodiscard]] double objective() const { return objective_; }

 private:
  TanhFeatures feat_;
  Eigen::VectorXd coeffs_;
  AdaptationOptions opt_;
  double objective_ = 0.0;
};

static_assert(TrainableModel<TanhFeatureModel>);

/// -u'' = f on (-1,1), u(+-1) = 0, with u*(x) = tanh(a x) - x tanh(a).
struct PoissonFixture {
  double a = 5.0;

  [[nodiscard]] double u(double x) const { return std::tanh(a * x) - x * std::tanh(a); }
  [[nodiscard]] double f(double x) const {
    const double t = std::tanh(a * x);
    return 2.0 * a * a * t * (1.0 - t * t);
  }
  [[nodiscard]] Eigen::VectorXd u_on(const GridDomain& g) const {
    Eigen::VectorXd v(g.size());
    for (Index i = 0; i < g.size(); ++i) v(i) = u(g.points()(i, 0));
    return v;
  }
  [[nodiscard]] Eigen::VectorXd f_on(const GridDomain& g) const {
    Eigen::VectorXd v(g.size());
    for (Index i = 0; i < g.size(); ++i) v(i) = f(g.points()(i, 0));
    return v;
  }
};

/// Per-channel sample counts m_c^(l), l = 1..t. Exhaustive channels take
/// every atom once at every iteration with nu from the base measure.
struct CasSchedule {
  std::vector<std::vector<Index>> counts;
  std::vector<bool> exhaustive;

  [[nodiscard]] Index iterations() const {
    Index t = 0;
    for (std::size_t c = 0; c < counts.size(); ++c)
      if (!exhaustive[c]) t = std::max(t, static_cast<Index>(counts[c].size()));
    return t;
  }

  void validate(std::size_t channels) const {
    detail::require(counts.size() == channels && exhaustive.size() == channels,
                    "CasSchedule: one entry per channel required");
    Index t = -1;
    for (std::size_t c = 0; c < channels; ++c) {
      if (exhaustive[c]) continue;
      detail::require(!counts[c].empty(), "CasSchedule: empty schedule");
      if (t < 0) t = static_cast<Index>(counts[c].size());
      detail::require(static_cast<Index>(counts[c].size()) == t, "CasSchedule: channels disagree on iteration count");
      Index prev = 0;
      for (Index m : counts[c]) {
        detail::require(m > prev, "CasSchedule: sample counts must be strictly increasing from zero");
        prev = m;
      }
    }
    detail::require(t > 0, "CasSchedule: at least one sampled channel required");
  }

  /// Table 3 style interior schedule scaled by `scale`, boundary exhaustive.
  static CasSchedule poisson_default(Index iterations = 5, double scale = 0.1) {
    CasSchedule s;
    std::vector<Index> interior;
    for (Index l = 0; l < iterations; ++l)
      interior.push_back(static_cast<Index>(std::llround(scale * (400.0 + 950.0 * static_cast<double>(l)))));
    s.counts = {interior, {}};
    s.exhaustive = {false, true};
    return s;
  }
};

/// Surrogate profiles that drop the differential operator: pointwise values
/// of the dictionary on each channel's own grid, truncated-SVD frame.
template <TrainableModel M>
std::vector<ChristoffelProfile> surrogate_channel_profiles(const M& model, const std::vector<ChannelOperator>& ops,
                                                           double delta_tol, std::vector<Index>* ranks = nullptr) {
  std::vector<ChristoffelProfile> out;
  if (ranks) ranks->clear();
  for (const auto& op : ops) {
    const FunctionTable dict = model.dictionary(op.domain());
    const ChannelOperator pe = ChannelOperator::point_eval(op.domain_ptr());
    const auto frame = orthonormalize_on_grid(stack_channels({pe}, dict), {OrthoMode::svd, delta_tol});
    if (frame.rank == 0)
      throw DegenerateSubspace("surrogate_channel_profiles: dictionary vanishes on the grid of channel " + to_string(op.kind()));
    if (ranks) ranks->push_back(frame.rank);
    out.push_back(christoffel_from_frame(frame));
  }
  return out;
}

template <class M>
struct CasTrace {
  /// samples[l][c]: atoms of channel c used at iteration l+1.
  std::vector<std::vector<std::vector<Index>>> samples;
  std::vector<std::vector<DiscreteMeasure>> measures;
  std::vector<std::vector<Index>> ranks;
  std::vector<double> test_errors;
  std::vector<M> models;
};

/// Problem data shared by a CAS run: channels, exact target measurements
/// over each channel domain and a held-out test grid with u* values.
struct CasProblem {
  std::vector<ChannelOperator> ops;
  std::vector<Eigen::VectorXd> targets;
  DomainPtr test_grid;
  Eigen::VectorXd test_truth;
};

template <TrainableModel M>
CasTrace<M> cas_run(const M& model0, const CasProblem& prob, const CasSchedule& schedule, double delta_tol,
                    const RngSpec& rng) {
  const auto& ops = prob.ops;
  detail::require(!ops.empty(), "cas_run: no channels");
  bool has_interior = false;
  for (const auto& op : ops) has_interior = has_interior || op.kind() == ChannelKind::colloc_interior;
  detail::require(has_interior, "cas_run: need an interior channel");
  detail::require(prob.targets.size() == ops.size(), "cas_run: one target table per channel required");
  detail::require(prob.test_grid != nullptr && prob.test_truth.size() == prob.test_grid->size(),
                  "cas_run: test grid and truth mismatch");
  schedule.validate(ops.size());
  const double truth_norm = prob.test_truth.norm();
  detail::require(truth_norm > 0.0, "cas_run: zero test solution");

  CasTrace<M> trace;
  std::vector<std::vector<Index>> acc(ops.size());
  M model = model0;
  const Index t = schedule.iterations();
  for (Index l = 0; l < t; ++l) {
    std::vector<Index> ranks;
    const auto profiles = surrogate_channel_profiles(model, ops, delta_tol, &ranks);
    std::vector<DiscreteMeasure> measures;
    std::vector<ChannelSamples> samples;
    for (std::size_t c = 0; c < ops.size(); ++c) {
      if (schedule.exhaustive[c]) {
        measures.push_back(DiscreteMeasure::base(ops[c].domain_ptr()));
        std::vector<Index> all(static_cast<std::size_t>(ops[c].domain().size()));
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
        acc[c] = all;
      } else {
        measures.push_back(optimal_measure(profiles[c]));
        const Index prev = l == 0 ? 0 : schedule.counts[c][static_cast<std::size_t>(l - 1)];
        const Index now = schedule.counts[c][static_cast<std::size_t>(l)];
        const auto fresh = sample_atoms(measures.back(), now - prev, rng.child(static_cast<std::uint64_t>(l), c));
        acc[c].insert(acc[c].end(), fresh.begin(), fresh.end());
      }
      samples.push_back(ChannelSamples::from_atoms(measures.back(), acc[c]));
    }
    const CollocationData data{&ops, &samples, &prob.targets};
    model = model.train(data);
    trace.samples.push_back(acc);
    trace.measures.push_back(std::move(measures));
    trace.ranks.push_back(std::move(ranks));
    trace.test_errors.push_back((model.predict(*prob.test_grid) - prob.test_truth).norm() / truth_norm);
    trace.models.push_back(model);
  }
  return trace;
}

/// Interior (Monte Carlo uniform grid) and two-atom boundary channels with
/// exact targets for the Poisson fixture.
inline CasProblem poisson_problem(const PoissonFixture& fx, Index n_interior, Index n_test, const RngSpec& rng,
                                  double lambda = 1.0) {
  auto interior = std::make_shared<const GridDomain>(monte_carlo_grid(GridDistribution::uniform_interval, 1, n_interior, rng.child(0)));
  Eigen::MatrixXd bpts(2, 1);
  bpts << -1.0, 1.0;
  auto boundary = std::make_shared<const GridDomain>(GridDomain::empirical(bpts));
  CasProblem p;
  p.ops = {ChannelOperator::colloc_interior(interior), ChannelOperator::colloc_boundary(boundary, lambda)};
  p.targets = {fx.f_on(*interior), std::sqrt(lambda) * fx.u_on(*boundary)};
  p.test_grid = std::make_shared<const GridDomain>(monte_carlo_grid(GridDistribution::uniform_interval, 1, n_test, rng.child(1)));
  p.test_truth = fx.u_on(*p.test_grid);
  return p;
}

}  // namespace cs4ml
