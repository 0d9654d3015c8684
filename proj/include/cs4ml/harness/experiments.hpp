#pragma once

// Experiment drivers: polynomial regression sweeps, minimum-m scaling
// searches, Fourier recovery, CAS on the Poisson fixture and numeric
// property checks. Inputs are plain ExperimentConfig values; outputs are
// per-trial records plus aggregated rows.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "cs4ml/cas.hpp"
#include "cs4ml/christoffel.hpp"
#include "cs4ml/error.hpp"
#include "cs4ml/harness/metrics.hpp"
#include "cs4ml/harness/sampling_rules.hpp"
#include "cs4ml/harness/stats.hpp"
#include "cs4ml/imaging.hpp"
#include "cs4ml/lsq.hpp"
#include "cs4ml/measure.hpp"
#include "cs4ml/operators.hpp"
#include "cs4ml/polybasis.hpp"

namespace cs4ml {

enum class ExperimentKind { polyreg, scaling, fourier, cas, props };
enum class Strategy { cs, mcs, hierarchical, sparse_surrogate };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::polyreg: return "polyreg";
    case ExperimentKind::scaling: return "scaling";
    case ExperimentKind::fourier: return "fourier";
    case ExperimentKind::cas: return "cas";
    case ExperimentKind::props: return "props";
  }
  return "unknown";
}

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::cs: return "cs";
    case Strategy::mcs: return "mcs";
    case Strategy::hierarchical: return "hierarchical";
    case Strategy::sparse_surrogate: return "sparse_surrogate";
  }
  return "unknown";
}

inline std::string to_string(PolyFamily f) { return f == PolyFamily::hermite_prob ? "hermite" : "legendre"; }

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::polyreg;
  std::uint64_t seed = 1;
  int trials = 25;
  std::vector<Strategy> strategies{Strategy::cs, Strategy::mcs};
  double noise = 0.0;

  // Polynomial experiments.
  int dim = 2;
  PolyFamily family = PolyFamily::hermite_prob;
  std::vector<int> orders{1, 2, 3, 4, 5, 7, 9, 11, 14, 17, 21, 25};
  std::string target = "exp_sum";
  Index grid_points = 10000;
  double tol = 10.0;
  Index m_max = 2000;
  double eps = 0.5;
  double delta = 0.05;

  // Fourier recovery.
  Index side = 64;
  int image_dim = 2;
  Index latent = 16;
  std::string partition = "singletons";
  std::string generator = "smooth_linear";
  double bandwidth = 4.0;
  std::vector<Index> samples{16, 32, 64};
  Index kt_iterations = 1000;

  // CAS.
  Index features = 40;
  Index interior_points = 2000;
  Index boundary_points = 2;
  Index test_points = 1000;
  Index cas_iterations = 5;
  double schedule_scale = 0.1;
  int adapt_steps = 50;
  double step_size = 1e-2;
  double delta_tol = 1e-6;
  double layer_slope = 5.0;
  double boundary_lambda = 1.0;

  void validate() const {
    auto bad = [](const std::string& w) { throw InvalidArgument("config: " + w); };
    if (trials < 1) bad("trials must be at least 1");
    if (strategies.empty()) bad("at least one strategy required");
    if (!(noise >= 0.0)) bad("noise must be nonnegative");
    switch (kind) {
      case ExperimentKind::polyreg:
      case ExperimentKind::scaling:
      case ExperimentKind::props:
        if (dim < 1) bad("dim must be at least 1");
        if (orders.empty()) bad("orders must be non-empty");
        for (std::size_t i = 0; i < orders.size(); ++i) {
          if (orders[i] < 0) bad("orders must be nonnegative");
          if (i > 0 && orders[i] <= orders[i - 1]) bad("orders must be strictly increasing");
        }
        if (grid_points < 1) bad("grid_points must be at least 1");
        if (kind == ExperimentKind::scaling && !(tol > 1.0)) bad("tol must exceed 1");
        if (m_max < 1) bad("m_max must be at least 1");
        if (!(eps > 0.0 && eps < 1.0)) bad("eps must lie in (0,1)");
        if (!(delta > 0.0 && delta < 1.0)) bad("delta must lie in (0,1)");
        break;
      case ExperimentKind::fourier:
        if (side < 2 || (side & (side - 1)) != 0) bad("side must be a power of two >= 2");
        if (image_dim < 1 || image_dim > 3) bad("image_dim must be 1, 2 or 3");
        if (latent < 1) bad("latent must be positive");
        if (partition != "singletons" && partition != "lines") bad("partition must be singletons or lines");
        if (partition == "lines" && image_dim < 2) bad("line partitions need image_dim >= 2");
        if (generator != "smooth_linear" && generator != "linear") bad("generator must be smooth_linear or linear");
        if (samples.empty()) bad("samples must be non-empty");
        for (Index m : samples)
          if (m < 1) bad("sample counts must be positive");
        if (kt_iterations < 1) bad("kt_iterations must be positive");
        for (Strategy s : strategies)
          if (s != Strategy::cs && s != Strategy::mcs) bad("fourier supports strategies cs and mcs only");
        break;
      case ExperimentKind::cas:
        if (features < 1) bad("features must be positive");
        if (interior_points < features) bad("interior_points must be at least features");
        if (test_points < 1) bad("test_points must be positive");
        if (cas_iterations < 1) bad("cas_iterations must be positive");
        if (!(schedule_scale > 0.0)) bad("schedule_scale must be positive");
        if (adapt_steps < 0) bad("adapt_steps must be nonnegative");
        if (!(delta_tol > 0.0 && delta_tol < 1.0)) bad("delta_tol must lie in (0,1)");
        if (!(boundary_lambda > 0.0)) bad("boundary_lambda must be positive");
        break;
    }
  }
};

/// One row of stats.csv.
struct StatsRow {
  Index n = 0;
  Index m = 0;
  std::string strategy;
  double err_gmean = 0.0;
  double err_gstd = 0.0;
  double cond_mean = 0.0;
  double cond_std = 0.0;
  double err_median = 0.0;
  double cond_median = 0.0;
  int ok_trials = 0;
};

struct TrialRecord {
  int trial = 0;
  Index n = 0;
  Index m = 0;
  std::string strategy;
  double error = std::numeric_limits<double>::quiet_NaN();
  double cond = std::numeric_limits<double>::quiet_NaN();
  double alpha_prime = std::numeric_limits<double>::quiet_NaN();
  double beta_prime = std::numeric_limits<double>::quiet_NaN();
  Index rank = 0;
  bool failed = false;
  std::string message;
};

namespace detail {

inline std::vector<StatsRow> aggregate(const std::vector<TrialRecord>& recs) {
  std::map<std::pair<Index, std::string>, std::vector<const TrialRecord*>> groups;
  std::vector<std::pair<Index, std::string>> order;
  for (const auto& r : recs) {
    auto key = std::make_pair(r.n, r.strategy);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<StatsRow> rows;
  for (const auto& key : order) {
    const auto& g = groups[key];
    StatsRow row;
    row.n = key.first;
    row.strategy = key.second;
    row.m = g.front()->m;
    std::vector<double> errs, conds;
    for (const auto* r : g) {
      if (r->failed) continue;
      errs.push_back(r->error);
      conds.push_back(r->cond);
    }
    row.ok_trials = static_cast<int>(errs.size());
    if (!errs.empty()) {
      const auto gs = geometric_stats(errs);
      row.err_gmean = gs.mean;
      row.err_gstd = gs.std;
      row.err_median = median(errs);
      const auto cs = arithmetic_stats(conds);
      row.cond_mean = cs.mean;
      row.cond_std = cs.std;
      row.cond_median = median(conds);
    } else {
      row.err_gmean = row.err_gstd = row.cond_mean = row.cond_std = row.err_median = row.cond_median =
          std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

/// Basis, channel and profiles for one polynomial order on a shared grid.
struct PolyLevel {
  int order = 0;
  HyperbolicCrossSet set;
  DomainPtr grid;
  FunctionTable basis;
  // Same span as `basis`, orthonormal in the grid H^1 inner product. LS
  // systems and cond(A) use this one: the grid is the sampling measure.
  FunctionTable design;
  ChannelOperator op;
  FunctionTable target;
  Eigen::VectorXd target_stack;
  ChristoffelProfile frame_profile;

  [[nodiscard]] Index n() const { return set.size(); }
};

inline GridDistribution grid_distribution(PolyFamily family) {
  return family == PolyFamily::hermite_prob ? GridDistribution::gaussian : GridDistribution::uniform_cube;
}

inline PolyLevel build_poly_level(const DomainPtr& grid, PolyFamily family, int order, const std::string& target) {
  const int d = static_cast<int>(grid->dim());
  auto set = hyperbolic_cross(d, order);
  FunctionTable basis = sobolev_tensor_basis(set, *grid, family);
  ChannelOperator op = ChannelOperator::grad_augmented(grid);
  FunctionTable tgt = poly_target(target, *grid, family);
  Eigen::VectorXd ts = evaluate_channel(op, tgt).col(0);
  const auto frame = orthonormalize_on_grid(stack_channels({op}, basis), {OrthoMode::qr, 0.0});
  if (!frame.valid) throw NumericalError("build_poly_level: basis is rank deficient on the grid; increase grid_points");
  ChristoffelProfile prof = christoffel_from_frame(frame);
  const Index npts = grid->size();
  const Eigen::ArrayXd rw = grid->base_weights().array().rsqrt();
  FunctionTable design;
  design.values = frame.q.topRows(npts).array().colwise() * rw;
  for (int k = 1; k <= d; ++k) design.grad.push_back(frame.q.middleRows(k * npts, npts).array().colwise() * rw);
  return PolyLevel{order,        std::move(set), grid,        std::move(basis), std::move(design),
                   std::move(op), std::move(tgt), std::move(ts), std::move(prof)};
}

/// Sampling plan of one strategy: a single channel whose per-sample nu
/// already carries the hierarchical mixture weights.
inline ChannelSamples draw_strategy_samples(const PolyLevel& lv, Strategy s, Index m, const RngSpec& rng) {
  switch (s) {
    case Strategy::cs:
      return ChannelSamples::draw(optimal_measure(lv.frame_profile), m, rng);
    case Strategy::mcs:
      return ChannelSamples::draw(DiscreteMeasure::base(lv.grid), m, rng);
    case Strategy::sparse_surrogate: {
      Eigen::MatrixXd dens = lv.basis.values.cwiseAbs2();
      for (const auto& g : lv.basis.grad) dens += g.cwiseAbs2();
      return ChannelSamples::draw(optimal_measure(sparse_surrogate(lv.grid, dens.cwiseSqrt())), m, rng);
    }
    case Strategy::hierarchical: {
      // Sample s goes to measure s mod n; channel c holds m_c samples and the
      // row weight 1/sqrt(n m_c nu_c) is expressed as nu_eff = n m_c nu_c / m.
      const auto mus = hierarchical_measures(lv.basis, lv.grid);
      const Index n = static_cast<Index>(mus.size());
      std::vector<Index> counts(static_cast<std::size_t>(n), 0);
      for (Index i = 0; i < m; ++i) ++counts[static_cast<std::size_t>(i % n)];
      ChannelSamples out;
      out.nu.resize(m);
      Index pos = 0;
      for (Index c = 0; c < n; ++c) {
        const Index mc = counts[static_cast<std::size_t>(c)];
        if (mc == 0) continue;
        const auto& mu = mus[static_cast<std::size_t>(c)];
        const auto atoms = sample_atoms(mu, mc, rng.child(static_cast<std::uint64_t>(c)));
        for (Index a : atoms) {
          out.atoms.push_back(a);
          out.nu(pos++) = static_cast<double>(n * mc) * mu.nu()(a) / static_cast<double>(m);
        }
      }
      return out;
    }
  }
  throw InvalidArgument("draw_strategy_samples: unknown strategy");
}

struct PolyregResult {
  std::vector<TrialRecord> records;
  std::vector<StatsRow> rows;
};

inline DomainPtr poly_grid(const ExperimentConfig& cfg) {
  const RngSpec root{cfg.seed, 0};
  return std::make_shared<const GridDomain>(
      monte_carlo_grid(grid_distribution(cfg.family), cfg.dim, cfg.grid_points, root.child(0)));
}

/// For each order: m from the polynomial rule, sample per strategy,
/// weighted fit, Sobolev error on the shared grid; aggregated over trials.
inline PolyregResult run_polyreg(const ExperimentConfig& cfg) {
  cfg.validate();
  const RngSpec root{cfg.seed, 0};
  const DomainPtr grid = poly_grid(cfg);
  PolyregResult res;
  for (std::size_t li = 0; li < cfg.orders.size(); ++li) {
    const PolyLevel lv = build_poly_level(grid, cfg.family, cfg.orders[li], cfg.target);
    const Index m = poly_sample_rule(lv.n(), cfg.dim);
    const std::vector<ChannelOperator> ops{lv.op};
    const std::vector<Eigen::VectorXd> targets{lv.target_stack};
    for (int t = 0; t < cfg.trials; ++t) {
      NoiseSpec noise{cfg.noise, root.child(1, static_cast<std::uint64_t>(t), li)};
      for (Strategy s : cfg.strategies) {
        TrialRecord rec;
        rec.trial = t;
        rec.n = lv.n();
        rec.m = m;
        rec.strategy = to_string(s);
        try {
          const auto smp = draw_strategy_samples(lv, s, m, root.child(2, static_cast<std::uint64_t>(t), li, static_cast<std::uint64_t>(s)));
          const auto sys = assemble_system(ops, {smp}, lv.design, targets, noise);
          const auto fit = solve_system(sys);
          rec.error = sobolev_error(lv.design, fit.coeffs, lv.target, *grid);
          rec.cond = fit.cond;
          rec.alpha_prime = fit.alpha_prime;
          rec.beta_prime = fit.beta_prime;
          rec.rank = fit.rank;
        } catch (const NumericalError& e) {
          rec.failed = true;
          rec.message = e.what();
        }
        res.records.push_back(std::move(rec));
      }
    }
  }
  res.rows = detail::aggregate(res.records);
  return res;
}

struct ScalingRecord {
  int trial = 0;
  Index n = 0;
  std::string strategy;
  Index m = 0;
  bool censored = false;
};

struct ScalingRow {
  Index n = 0;
  std::string strategy;
  double m_mean = 0.0;
  double m_std = 0.0;
  double m_median = 0.0;
  int censored = 0;
};

struct ScalingResult {
  std::vector<ScalingRecord> records;
  std::vector<ScalingRow> rows;
};

/// Smallest m >= m0 with cond(A) <= tol for nested samples `atoms` (weights
/// nu), or nullopt if m_max is reached. cond is invariant under the common
/// 1/sqrt(m) factor, so the Gram sum_s B_s^T B_s / nu_s is grown one sample at
/// a time; a shifted Cholesky test rules out cond > tol before any
/// eigenvalue solve.
inline std::optional<Index> min_samples_for_cond(const PolyLevel& lv, const ChannelSamples& smp, Index m0, double tol) {
  const Index n = lv.n();
  const Index m_max = smp.m();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  const double tol2 = tol * tol;
  for (Index s = 0; s < m_max; ++s) {
    const Eigen::MatrixXd blk = evaluate_block(lv.op, smp.atoms[static_cast<std::size_t>(s)], lv.design);
    g.noalias() += (1.0 / smp.nu(s)) * (blk.transpose() * blk);
    const Index m = s + 1;
    if (m < m0) continue;
    const double shift = g.diagonal().maxCoeff() / tol2;
    Eigen::LLT<Eigen::MatrixXd> llt(g - shift * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    const double lmax = es.eigenvalues()(n - 1);
    if (lmin > 0.0 && lmax <= tol2 * lmin) return m;
  }
  return std::nullopt;
}

inline ScalingResult run_scaling(const ExperimentConfig& cfg) {
  cfg.validate();
  const RngSpec root{cfg.seed, 0};
  const DomainPtr grid = poly_grid(cfg);
  ScalingResult res;
  for (std::size_t li = 0; li < cfg.orders.size(); ++li) {
    const PolyLevel lv = build_poly_level(grid, cfg.family, cfg.orders[li], cfg.target);
    const Index m0 = std::max<Index>(1, (lv.n() + cfg.dim) / (cfg.dim + 1));
    for (Strategy s : cfg.strategies) {
      std::vector<double> ms;
      ScalingRow row;
      row.n = lv.n();
      row.strategy = to_string(s);
      for (int t = 0; t < cfg.trials; ++t) {
        const auto smp = draw_strategy_samples(lv, s, cfg.m_max, root.child(3, static_cast<std::uint64_t>(t), li, static_cast<std::uint64_t>(s)));
        const auto found = min_samples_for_cond(lv, smp, std::min(m0, cfg.m_max), cfg.tol);
        ScalingRecord rec{t, lv.n(), to_string(s), found.value_or(cfg.m_max), !found.has_value()};
        row.censored += rec.censored ? 1 : 0;
        ms.push_back(static_cast<double>(rec.m));
        res.records.push_back(rec);
      }
      const auto st = arithmetic_stats(ms);
      row.m_mean = st.mean;
      row.m_std = st.std;
      row.m_median = median(ms);
      res.rows.push_back(row);
    }
  }
  return res;
}

struct FourierRecord {
  int trial = 0;
  Index m = 0;
  std::string strategy;
  double psnr = 0.0;
  double rel_error = 0.0;
  double cond = 0.0;
};

struct FourierRow {
  Index m = 0;
  std::string strategy;
  double psnr_median = 0.0;
  double psnr_mean = 0.0;
  double err_gmean = 0.0;
  double err_gstd = 0.0;
  double cond_mean = 0.0;
  double cond_std = 0.0;
};

struct FourierResult {
  std::vector<FourierRecord> records;
  std::vector<FourierRow> rows;
  SamplingConstants empirical_constants;
  SamplingConstants exact_constants;
  std::vector<double> kt_relative_error;
  ChristoffelProfile kt_profile;
  Eigen::VectorXd truth;
};

inline Partition fourier_partition_for(const ExperimentConfig& cfg) {
  return build_partition(cfg.partition == "lines" ? PartitionKind::lines : PartitionKind::singletons, cfg.side,
                         cfg.image_dim);
}

/// Fixed ground truth in the generator's range; CS uses the empirical
/// profile from the iterative difference-draw estimator, MCS the uniform
/// measure over blocks. Trials differ in the sampled blocks and noise.
inline FourierResult run_fourier(const ExperimentConfig& cfg) {
  cfg.validate();
  const RngSpec root{cfg.seed, 0};
  auto dft = std::make_shared<const UnitaryDft>(cfg.side, cfg.image_dim);
  const GenerativeModel gen = cfg.generator == "linear"
                                  ? gaussian_linear_model(dft->length(), cfg.latent, root.child(0))
                                  : smooth_gaussian_model(*dft, cfg.latent, cfg.bandwidth, root.child(0));
  Partition part = fourier_partition_for(cfg);
  const FourierRecovery rec(dft, gen, part);
  FourierResult res;
  const auto kt = empirical_christoffel(gen, *dft, part, cfg.kt_iterations, root.child(1));
  res.kt_relative_error = kt.relative_error;
  res.kt_profile = kt.profile;
  res.empirical_constants = sampling_constants(kt.profile);
  res.exact_constants = sampling_constants(rec.exact_profile());
  const DiscreteMeasure cs_mu = optimal_measure(kt.profile);
  const DiscreteMeasure mcs_mu = DiscreteMeasure::base(rec.op().domain_ptr());
  res.truth = rec.draw_truth(root.child(2));
  const double tn = res.truth.norm();
  for (std::size_t mi = 0; mi < cfg.samples.size(); ++mi) {
    const Index m = cfg.samples[mi];
    std::map<Strategy, std::vector<FourierRecord>> by;
    for (int t = 0; t < cfg.trials; ++t) {
      const RngSpec noise_rng = root.child(3, static_cast<std::uint64_t>(t), mi);
      for (Strategy s : cfg.strategies) {
        const DiscreteMeasure& mu = s == Strategy::cs ? cs_mu : mcs_mu;
        const auto smp = ChannelSamples::draw(mu, m, root.child(4, static_cast<std::uint64_t>(t), mi, static_cast<std::uint64_t>(s)));
        const auto r = rec.recover(res.truth, smp, cfg.noise, noise_rng);
        FourierRecord fr{t, m, to_string(s), r.psnr, (r.estimate - res.truth).norm() / tn, r.fit.cond};
        by[s].push_back(fr);
        res.records.push_back(fr);
      }
    }
    for (Strategy s : cfg.strategies) {
      std::vector<double> ps, es, cs;
      for (const auto& r : by[s]) {
        ps.push_back(r.psnr);
        es.push_back(r.rel_error);
        cs.push_back(r.cond);
      }
      FourierRow row;
      row.m = m;
      row.strategy = to_string(s);
      row.psnr_median = median(ps);
      row.psnr_mean = arithmetic_stats(ps).mean;
      const auto g = geometric_stats(es);
      row.err_gmean = g.mean;
      row.err_gstd = g.std;
      const auto c = arithmetic_stats(cs);
      row.cond_mean = c.mean;
      row.cond_std = c.std;
      res.rows.push_back(row);
    }
  }
  return res;
}

struct CasTrialRecord {
  int trial = 0;
  std::vector<double> errors;
  std::vector<Index> interior_counts;
  std::vector<Index> ranks;
  /// Total variation between the interior measure of iteration l and iteration 1.
  std::vector<double> tv_from_first;
  bool nested = true;
  bool measures_valid = true;
};

struct CasRow {
  Index iteration = 0;
  Index m = 0;
  double err_gmean = 0.0;
  double err_gstd = 0.0;
  double err_median = 0.0;
  double rank_mean = 0.0;
};

struct CasExperimentResult {
  std::vector<CasTrialRecord> records;
  std::vector<CasRow> rows;
};

inline CasSchedule cas_schedule_for(const ExperimentConfig& cfg) {
  return CasSchedule::poisson_default(cfg.cas_iterations, cfg.schedule_scale);
}

inline bool measure_is_valid(const DiscreteMeasure& mu) {
  if (std::abs(mu.pmf().sum() - 1.0) > 1e-12) return false;
  for (Index i : mu.support())
    if (!(mu.nu()(i) > 0.0) || !std::isfinite(mu.nu()(i))) return false;
  return true;
}

inline CasExperimentResult run_cas(const ExperimentConfig& cfg) {
  cfg.validate();
  const RngSpec root{cfg.seed, 0};
  const PoissonFixture fx{cfg.layer_slope};
  const CasSchedule sched = cas_schedule_for(cfg);
  CasExperimentResult res;
  for (int t = 0; t < cfg.trials; ++t) {
    const RngSpec tr = root.child(5, static_cast<std::uint64_t>(t));
    const CasProblem prob = poisson_problem(fx, cfg.interior_points, cfg.test_points, tr.child(0), cfg.boundary_lambda);
    const TanhFeatureModel model(TanhFeatures::random(cfg.features, tr.child(1)),
                                 AdaptationOptions{cfg.adapt_steps, cfg.step_size});
    const auto trace = cas_run(model, prob, sched, cfg.delta_tol, tr.child(2));
    CasTrialRecord rec;
    rec.trial = t;
    rec.errors = trace.test_errors;
    for (std::size_t l = 0; l < trace.samples.size(); ++l) {
      rec.interior_counts.push_back(static_cast<Index>(trace.samples[l][0].size()));
      rec.ranks.push_back(trace.ranks[l][0]);
      rec.tv_from_first.push_back(total_variation(trace.measures[l][0], trace.measures[0][0]));
      for (const auto& mu : trace.measures[l]) rec.measures_valid = rec.measures_valid && measure_is_valid(mu);
      if (l > 0)
        for (std::size_t c = 0; c < trace.samples[l].size(); ++c) {
          const auto& prev = trace.samples[l - 1][c];
          const auto& cur = trace.samples[l][c];
          rec.nested = rec.nested && cur.size() >= prev.size() && std::equal(prev.begin(), prev.end(), cur.begin());
        }
    }
    res.records.push_back(std::move(rec));
  }
  for (Index l = 0; l < sched.iterations(); ++l) {
    std::vector<double> e, r;
    for (const auto& rec : res.records) {
      e.push_back(rec.errors[static_cast<std::size_t>(l)]);
      r.push_back(static_cast<double>(rec.ranks[static_cast<std::size_t>(l)]));
    }
    const auto g = geometric_stats(e);
    res.rows.push_back({l + 1, sched.counts[0][static_cast<std::size_t>(l)], g.mean, g.std, median(e), arithmetic_stats(r).mean});
  }
  return res;
}

struct PropsRow {
  Index n = 0;
  Index m = 0;
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double kappa_frame = 0.0;
  double kappa_exact = 0.0;
  double bracket_fraction = 0.0;
};

struct PropsResult {
  std::vector<PropsRow> rows;
};

/// Per order: nondegeneracy constants of the Sobolev basis on the grid,
/// frame and exact kappa, and the fraction of CS trials whose design
/// satisfies alpha'^2 >= (1 - eps) alpha_hat and beta'^2 <= (1 + eps) beta_hat
/// with m from the Christoffel sample-size rule.
inline PropsResult run_props(const ExperimentConfig& cfg) {
  cfg.validate();
  const RngSpec root{cfg.seed, 0};
  const DomainPtr grid = poly_grid(cfg);
  PropsResult res;
  for (std::size_t li = 0; li < cfg.orders.size(); ++li) {
    const PolyLevel lv = build_poly_level(grid, cfg.family, cfg.orders[li], cfg.target);
    const auto nd = gram_nondegeneracy({lv.op}, lv.basis);
    const auto frame = orthonormalize_on_grid(stack_channels({lv.op}, lv.basis), {OrthoMode::qr, 0.0});
    const auto exact = christoffel_exact(frame);
    // The frame is orthonormal in the grid measurement norm, against which
    // alpha = 1; alpha_hat converts to the Sobolev basis norm.
    const Index m = recommend_sample_sizes({exact}, lv.n(), 1, cfg.eps, cfg.delta, 1.0).front();
    const Index m_use = std::min(m, cfg.m_max);
    int ok = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      const auto smp = ChannelSamples::draw(optimal_measure(exact), m_use, root.child(6, static_cast<std::uint64_t>(t), li));
      const std::vector<Eigen::VectorXd> targets{lv.target_stack};
      const auto sys = assemble_system({lv.op}, {smp}, lv.basis, targets);
      const auto [smin, smax] = extreme_singular_values(sys.A);
      if (smin * smin >= (1.0 - cfg.eps) * nd.alpha_hat && smax * smax <= (1.0 + cfg.eps) * nd.beta_hat) ++ok;
    }
    res.rows.push_back({lv.n(), m_use, nd.alpha_hat, nd.beta_hat, lv.frame_profile.kappa, exact.kappa,
                        static_cast<double>(ok) / cfg.trials});
  }
  return res;
}

}  // namespace cs4ml
