#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "cs4ml/christoffel.hpp"
#include "cs4ml/imaging.hpp"
#include "property_oracles.hpp"

using namespace cs4ml;

namespace {

Eigen::MatrixXd gaussian_matrix(Index r, Index c, unsigned seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(r, c);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = nd(eng);
  return a;
}

struct HermiteSetup {
  DomainPtr grid;
  FunctionTable basis;
  ChannelOperator op;
};

HermiteSetup hermite_setup(int order, Index n_pts, std::uint64_t seed) {
  auto grid = std::make_shared<const GridDomain>(monte_carlo_grid(GridDistribution::gaussian, 2, n_pts, {seed, 0}));
  auto basis = sobolev_tensor_basis(hyperbolic_cross(2, order), *grid, PolyFamily::hermite_prob);
  return {grid, basis, ChannelOperator::grad_augmented(grid)};
}

}  // namespace

TEST(Frame, AlreadyOrthonormalInputIsReproducedUpToSign) {
  const Eigen::MatrixXd q0 = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(30, 4, 1)).householderQ() *
                             Eigen::MatrixXd::Identity(30, 4);
  auto dom = std::make_shared<const GridDomain>(GridDomain::discrete(30, 1.0 / 30));
  for (auto mode : {OrthoMode::qr, OrthoMode::svd}) {
    const auto f = orthonormalize_on_grid<double>(q0, {ChannelLayout{0, 30, 1, dom}}, {mode, 1e-6});
    EXPECT_EQ(f.rank, 4);
    // Same span: projector onto each is identical.
    EXPECT_LE((f.q * f.q.transpose() - q0 * q0.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    // QR with pivoting: columns come back permuted and sign-flipped.
    if (mode == OrthoMode::qr) {
      const Eigen::MatrixXd c = (f.q.transpose() * q0).cwiseAbs();
      for (Index j = 0; j < 4; ++j) EXPECT_NEAR(c.col(j).maxCoeff(), 1.0, 1e-12);
      EXPECT_NEAR(c.sum(), 4.0, 1e-10);
    }
  }
}

TEST(Frame, DuplicatedColumn) {
  Eigen::MatrixXd a = gaussian_matrix(40, 5, 2);
  a.col(4) = a.col(1);
  auto dom = std::make_shared<const GridDomain>(GridDomain::discrete(40, 1.0 / 40));
  const std::vector<ChannelLayout> l{ChannelLayout{0, 40, 1, dom}};
  const auto s = orthonormalize_on_grid<double>(a, l, {OrthoMode::svd, 1e-6});
  EXPECT_EQ(s.rank, 4);
  EXPECT_TRUE(s.valid);
  const auto q = orthonormalize_on_grid<double>(a, l, {OrthoMode::qr, 1e-6});
  EXPECT_FALSE(q.valid);
}

TEST(Frame, AllZeroInputHasRankZero) {
  auto dom = std::make_shared<const GridDomain>(GridDomain::discrete(10, 0.1));
  const auto f = orthonormalize_on_grid<double>(Eigen::MatrixXd::Zero(10, 3), {ChannelLayout{0, 10, 1, dom}}, {OrthoMode::svd, 1e-6});
  EXPECT_EQ(f.rank, 0);
  EXPECT_TRUE(f.valid);
  EXPECT_THROW(christoffel_from_frame(f), DegenerateSubspace);
  EXPECT_THROW(christoffel_exact(f), DegenerateSubspace);
}

TEST(Frame, RejectsBadLayoutAndValues) {
  auto dom = std::make_shared<const GridDomain>(GridDomain::discrete(10, 0.1));
  Eigen::MatrixXd a = gaussian_matrix(10, 2, 3);
  EXPECT_THROW(orthonormalize_on_grid<double>(a, {ChannelLayout{0, 9, 1, dom}}), InvalidArgument);
  a(0, 0) = std::nan("");
  EXPECT_THROW(orthonormalize_on_grid<double>(a, {ChannelLayout{0, 10, 1, dom}}), InvalidArgument);
}

TEST(Frame, HermiteGradAugmentedIsOrthonormal) {
  const auto h = hermite_setup(0, 50000, 7);
  int order = 0;
  while (hyperbolic_cross(2, order + 1).size() <= 10) ++order;
  const auto set = hyperbolic_cross(2, order);
  ASSERT_EQ(set.size(), 10);
  const auto basis = sobolev_tensor_basis(set, *h.grid, PolyFamily::hermite_prob);
  const auto st = stack_channels({h.op}, basis);
  const auto f = orthonormalize_on_grid(st);
  EXPECT_EQ(f.rank, 10);
  EXPECT_TRUE(f.valid);
  EXPECT_LE((f.q.transpose() * f.q - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-10);
  const auto prof = christoffel_from_frame(f);
  EXPECT_EQ(prof.source, ProfileSource::upper_surrogate);
  EXPECT_NEAR(prof.kappa, 10.0, 1e-10);
  EXPECT_GE(prof.K.minCoeff(), 0.0);
}

TEST(Profile, KappaEqualsRankForScalarChannel) {
  const auto h = hermite_setup(6, 3000, 8);
  const auto op = ChannelOperator::point_eval(h.grid);
  const auto f = orthonormalize_on_grid(stack_channels({op}, h.basis));
  const auto prof = christoffel_from_frame(f);
  EXPECT_EQ(prof.source, ProfileSource::exact_subspace);
  EXPECT_NEAR(prof.kappa, static_cast<double>(f.rank), 1e-10);
  EXPECT_NEAR(prof.kappa, prof.K.dot(h.grid->base_weights()), 1e-10);
  // Independent normal-equations oracle: K_i = phi_i^T G^{-1} phi_i.
  const Eigen::MatrixXd phi = h.basis.values;
  const Eigen::MatrixXd gram = phi.transpose() * h.grid->base_weights().asDiagonal() * phi;
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  for (Index i = 0; i < 3000; i += 37) {
    const Eigen::VectorXd v = phi.row(i).transpose();
    EXPECT_NEAR(prof.K(i), v.dot(llt.solve(v)), 1e-8 * (1.0 + prof.K(i)));
  }
}

TEST(Profile, ConstantBasisGivesUnitK) {
  auto grid = std::make_shared<const GridDomain>(monte_carlo_grid(GridDistribution::uniform_interval, 1, 50, {1, 0}));
  FunctionTable t;
  t.values = Eigen::MatrixXd::Ones(50, 1);
  const auto f = orthonormalize_on_grid(stack_channels({ChannelOperator::point_eval(grid)}, t));
  const auto prof = christoffel_from_frame(f);
  EXPECT_LE((prof.K.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Profile, FourierSingletonSubspace) {
  auto dft = std::make_shared<const UnitaryDft>(16, 1);
  const auto op = ChannelOperator::fourier_partition(dft, build_partition(PartitionKind::singletons, 16, 1));
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(16);
  e(5) = 1.0;
  const ImageBasis b(*dft, dft->inverse(e));
  const auto prof = christoffel_from_frame(orthonormalize_on_grid(stack_channels({op}, b)));
  for (Index i = 0; i < 16; ++i) EXPECT_NEAR(prof.K(i), i == 5 ? 16.0 : 0.0, 1e-10);
}

TEST(Profile, RecombinationInvariance) {
  const auto h = hermite_setup(5, 2000, 9);
  const auto st = stack_channels({h.op}, h.basis);
  const auto k0 = christoffel_from_frame(orthonormalize_on_grid(st)).K;
  Eigen::MatrixXd mix = Eigen::MatrixXd::Identity(h.basis.functions(), h.basis.functions()) +
                        0.3 * gaussian_matrix(h.basis.functions(), h.basis.functions(), 10);
  const auto k1 = christoffel_from_frame(orthonormalize_on_grid(stack_channels({h.op}, h.basis.recombine(mix)))).K;
  EXPECT_LE((k0 - k1).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Profile, GradAugmentedBracket) {
  const auto h = hermite_setup(5, 1000, 11);
  const auto f = orthonormalize_on_grid(stack_channels({h.op}, h.basis));
  const auto up = christoffel_from_frame(f).K;
  const auto ex = christoffel_exact(f).K;
  for (Index i = 0; i < up.size(); ++i) {
    EXPECT_LE(ex(i), up(i) * (1 + 1e-12));
    EXPECT_GE(ex(i), up(i) / 3.0 * (1 - 1e-12));
  }
  // Exact K from the orthonormal-basis route agrees when the Gram is identity.
  const Eigen::MatrixXd st = stack_channels({h.op}, h.basis).rows;
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(st.transpose() * st).matrixL();
  const Eigen::MatrixXd ortho = l.triangularView<Eigen::Lower>().solve(evaluate_channel(h.op, h.basis).transpose()).transpose();
  const auto ex2 = christoffel_from_orthonormal_basis(h.op, ortho).K;
  EXPECT_LE((ex - ex2).cwiseAbs().maxCoeff(), 1e-8 * (1 + ex.maxCoeff()));
}

TEST(ChristoffelProperties, RandomInstancesHaveNoViolations) {
  const auto t = oracle::run_property_suite(60, 2024);
  EXPECT_EQ(t.instances, 60);
  EXPECT_EQ(t.bracket, 0);
  EXPECT_EQ(t.union_max, 0);
  EXPECT_EQ(t.sum_bound_projected, 0);
  EXPECT_EQ(t.recombination, 0);
}

TEST(ChristoffelProperties, FactorTwoSumBoundFailsForNearlyParallelLines) {
  // Two atoms, weight 1/2. F1 = span{u}, F2 = span{u + eps v}, u and v the
  // atom indicators. At atom 1: K(F1) = 0, K(F2) = 2 eps^2 / (1 + eps^2),
  // while F1 + F2 is everything and K = 2.
  const double eps = 0.1;
  oracle::PropertyInstance inst{std::make_shared<const GridDomain>(GridDomain::discrete(2, 0.5)), 1,
                             (Eigen::MatrixXd(2, 2) << 1.0, 1.0, 0.0, eps).finished()};
  const Eigen::VectorXd k1 = oracle::oracle_k(inst, inst.b.leftCols(1));
  const Eigen::VectorXd k2 = oracle::oracle_k(inst, inst.b.rightCols(1));
  const Eigen::VectorXd ks = christoffel_exact(oracle::frame_of(inst, inst.b)).K;
  EXPECT_NEAR(k1(1), 0.0, 1e-14);
  EXPECT_NEAR(k2(1), 2 * eps * eps / (1 + eps * eps), 1e-14);
  EXPECT_NEAR(ks(1), 2.0, 1e-12);
  EXPECT_GT(ks(1), 2.0 * (k1(1) + k2(1)));
  // With F2 projected onto the complement of F1 the bound holds.
  const Eigen::VectorXd kp = oracle::oracle_k(inst, (Eigen::MatrixXd(2, 1) << 0.0, eps).finished());
  EXPECT_LE(ks(1), 2.0 * (k1(1) + kp(1)) + 1e-12);
}

TEST(ChristoffelProperties, KappaBoundsThroughNondegeneracyConstants) {
  // Object norm c^T H c with H unrelated to the measurements; two channels.
  for (int r = 0; r < 20; ++r) {
    const Index n = 4;
    const Eigen::MatrixXd x = gaussian_matrix(n, n, 100 + r);
    const Eigen::MatrixXd hmat = x * x.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd hl = Eigen::LLT<Eigen::MatrixXd>(hmat).matrixL();
    auto d1 = std::make_shared<const GridDomain>(GridDomain::empirical(Eigen::MatrixXd::Zero(60, 2)));
    auto d2 = std::make_shared<const GridDomain>(GridDomain::empirical(Eigen::MatrixXd::Zero(40, 1)));
    // Tables expressed in an H-orthonormal basis: E = B L^{-T}.
    auto to_ortho = [&](const Eigen::MatrixXd& b) {
      return Eigen::MatrixXd(hl.triangularView<Eigen::Lower>().solve(b.transpose()).transpose());
    };
    FunctionTable t1, t2;
    t1.values = to_ortho(gaussian_matrix(60, n, 200 + r));
    t1.grad = {to_ortho(gaussian_matrix(60, n, 300 + r)), to_ortho(gaussian_matrix(60, n, 400 + r))};
    t2.values = to_ortho(gaussian_matrix(40, n, 500 + r));
    const auto o1 = ChannelOperator::grad_augmented(d1);
    const auto o2 = ChannelOperator::point_eval(d2);
    // Channels live on different domains, so the Gram is assembled by hand.
    const Eigen::MatrixXd s1 = weight_rows(o1, evaluate_channel(o1, t1));
    const Eigen::MatrixXd s2 = weight_rows(o2, evaluate_channel(o2, t2));
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s1.transpose() * s1 + s2.transpose() * s2).eigenvalues();
    const double kap = christoffel_from_orthonormal_basis(o1, evaluate_channel(o1, t1)).kappa +
                       christoffel_from_orthonormal_basis(o2, evaluate_channel(o2, t2)).kappa;
    EXPECT_LE(kap, ev.maxCoeff() * n * (1 + 1e-10));
    EXPECT_GE(kap, ev.minCoeff() * n / 3.0 * (1 - 1e-10));
  }
}

TEST(OptimalMeasure, ProportionalToK) {
  auto dom = std::make_shared<const GridDomain>(GridDomain::discrete(3, 1.0 / 3));
  const auto prof = ChristoffelProfile::make(dom, Eigen::Vector3d(2, 1, 1), ProfileSource::exact_subspace);
  const auto mu = optimal_measure(prof);
  EXPECT_NEAR(mu.pmf()(0), 0.5, 1e-15);
  EXPECT_NEAR(mu.pmf()(1), 0.25, 1e-15);
  const auto uni = optimal_measure(ChristoffelProfile::make(dom, Eigen::Vector3d(4, 4, 4), ProfileSource::exact_subspace));
  EXPECT_LE((uni.pmf().array() - 1.0 / 3).abs().maxCoeff(), 1e-15);
  EXPECT_THROW(optimal_measure(ChristoffelProfile::make(dom, Eigen::Vector3d::Zero(), ProfileSource::sparse)), NumericalError);
  EXPECT_THROW(ChristoffelProfile::make(dom, Eigen::Vector3d(1, -1, 0), ProfileSource::sparse), InvalidArgument);
}

TEST(OptimalMeasure, SupRatioEqualsKappa) {
  const auto h = hermite_setup(5, 2000, 12);
  const auto prof = christoffel_from_frame(orthonormalize_on_grid(stack_channels({ChannelOperator::point_eval(h.grid)}, h.basis)));
  const auto mu = optimal_measure(prof);
  double sup = 0.0;
  for (Index i = 0; i < prof.K.size(); ++i)
    if (mu.nu()(i) > 0) sup = std::max(sup, prof.K(i) / mu.nu()(i));
  EXPECT_NEAR(sup, prof.kappa, 1e-10 * prof.kappa);
  EXPECT_NEAR(mu.pmf().sum(), 1.0, 1e-12);
}

TEST(EmpiricalChristoffel, SingleDrawAndMonotone) {
  auto dft = std::make_shared<const UnitaryDft>(8, 2);
  const auto part = build_partition(PartitionKind::lines, 8, 2);
  const auto gen = gaussian_linear_model(64, 5, {3, 0});
  const auto r1 = empirical_christoffel(gen, *dft, part, 1, {4, 0});
  // Replay the single draw by hand.
  auto eng = RngSpec{4, 0}.engine();
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd z1(5), z2(5);
  for (Index j = 0; j < 5; ++j) z1(j) = nd(eng);
  for (Index j = 0; j < 5; ++j) z2(j) = nd(eng);
  const Eigen::VectorXd g = gen.forward(z1) - gen.forward(z2);
  const Eigen::VectorXcd fg = dft->forward(g.cast<Complex>());
  for (Index i = 0; i < 8; ++i) {
    double a = 0;
    for (Index j : part.blocks[static_cast<std::size_t>(i)]) a += std::norm(fg(j));
    EXPECT_NEAR(r1.profile.K(i), 8.0 * a / g.squaredNorm(), 1e-12);
  }
  const auto r = empirical_christoffel(gen, *dft, part, 200, {5, 0});
  ASSERT_EQ(r.snapshots.size(), 200u);
  for (std::size_t s = 1; s < r.snapshots.size(); ++s) EXPECT_TRUE((r.snapshots[s].array() >= r.snapshots[s - 1].array()).all());
  EXPECT_EQ(r.profile.source, ProfileSource::empirical);
  EXPECT_EQ(r.skipped, 0);
}

TEST(EmpiricalChristoffel, BoundedByExactSubspaceProfile) {
  auto dft = std::make_shared<const UnitaryDft>(8, 2);
  for (auto kind : {PartitionKind::singletons, PartitionKind::lines}) {
    const auto part = build_partition(kind, 8, 2);
    const auto gen = gaussian_linear_model(64, 6, {6, 0});
    const FourierRecovery rec(dft, gen, part);
    const auto exact = rec.exact_profile();
    const auto emp = empirical_christoffel(gen, *dft, part, 300, {7, 0});
    for (Index i = 0; i < exact.K.size(); ++i) EXPECT_LE(emp.profile.K(i), exact.K(i) * (1 + 1e-9) + 1e-12);
  }
}

TEST(EmpiricalChristoffel, ZeroDifferencesAreSkipped) {
  // Single latent direction through a ReLU with zero weights -> constant output.
  const auto gen = GenerativeModel::relu_mlp({Eigen::MatrixXd::Zero(4, 1), Eigen::MatrixXd::Zero(4, 4)},
                                             {Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4)});
  UnitaryDft dft(4, 1);
  const auto r = empirical_christoffel(gen, dft, build_partition(PartitionKind::singletons, 4, 1), 5, {1, 0});
  EXPECT_EQ(r.skipped, 5);
  EXPECT_EQ(r.profile.K.maxCoeff(), 0.0);
}

TEST(SparseSurrogate, Examples) {
  auto dom = std::make_shared<const GridDomain>(GridDomain::discrete(4, 0.25));
  const Eigen::Vector4d phi(1, -2, 0.5, 0);
  const auto p1 = sparse_surrogate(dom, Eigen::MatrixXd(phi));
  EXPECT_EQ(p1.K, phi.cwiseAbs2());
  EXPECT_EQ(p1.source, ProfileSource::sparse);
  const Eigen::MatrixXcd fourier = std::sqrt(4.0) * UnitaryDft(4, 1).forward_columns(Eigen::MatrixXcd::Identity(4, 4));
  const auto pf = sparse_surrogate(dom, fourier);
  EXPECT_LE((pf.K.array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_THROW(sparse_surrogate(dom, Eigen::MatrixXd(4, 0)), InvalidArgument);
}

TEST(SparseSurrogate, SparseCombinationBound) {
  // Grid-orthonormal basis, a = 1: |f|^2 / ||f||^2 <= s * max_j |phi_j|^2.
  const Index n_atoms = 150, n = 12;
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(n_atoms, n, 13)).householderQ() *
                            Eigen::MatrixXd::Identity(n_atoms, n) * std::sqrt(static_cast<double>(n_atoms));
  auto dom = std::make_shared<const GridDomain>(GridDomain::discrete(n_atoms, 1.0 / n_atoms));
  const auto prof = sparse_surrogate(dom, q);
  std::mt19937_64 eng(14);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<Index> pick(0, n - 1);
  for (int r = 0; r < 2000; ++r) {
    const Index s = 1 + r % 4;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (Index k = 0; k < s; ++k) c(pick(eng)) = nd(eng);
    const Index s_eff = (c.array() != 0.0).count();
    if (s_eff == 0) continue;
    const Eigen::VectorXd f = q * c;
    const double nrm2 = c.squaredNorm();
    for (Index i = 0; i < n_atoms; ++i) EXPECT_LE(f(i) * f(i) / nrm2, s_eff * prof.K(i) * (1 + 1e-12));
  }
}

TEST(Hierarchical, DensitiesSumToFrameSurrogate) {
  // Grid-orthonormalized table so that the Sobolev Gram is identity on the grid.
  const auto h = hermite_setup(5, 3000, 15);
  const auto st = stack_channels({h.op}, h.basis);
  const Eigen::MatrixXd r = Eigen::HouseholderQR<Eigen::MatrixXd>(st.rows).matrixQR().topRows(h.basis.functions()).triangularView<Eigen::Upper>();
  const auto ortho = h.basis.recombine(r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(r.rows(), r.cols())));
  const Eigen::MatrixXd dens = hierarchical_densities(ortho, *h.grid);
  const auto frame = christoffel_from_frame(orthonormalize_on_grid(stack_channels({h.op}, ortho)));
  EXPECT_LE((dens.rowwise().sum() - frame.K).cwiseAbs().maxCoeff(), 1e-6 * (1 + frame.K.maxCoeff()));
  const auto ms = hierarchical_measures(ortho, h.grid);
  ASSERT_EQ(static_cast<Index>(ms.size()), h.basis.functions());
  for (const auto& m : ms) EXPECT_NEAR(m.pmf().sum(), 1.0, 1e-12);
}

TEST(Hierarchical, ConstantMemberAndSingleFunction) {
  auto grid = std::make_shared<const GridDomain>(monte_carlo_grid(GridDistribution::gaussian, 1, 100, {16, 0}));
  const auto t = sobolev_tensor_basis(hyperbolic_cross(1, 0), *grid, PolyFamily::hermite_prob);
  const auto ms = hierarchical_measures(t, grid);
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_LE((ms[0].pmf() - grid->base_weights()).cwiseAbs().maxCoeff(), 1e-15);
  const auto t1 = sobolev_tensor_basis(hyperbolic_cross(1, 3), *grid, PolyFamily::hermite_prob).recombine(Eigen::Vector4d(0, 0, 1, 0));
  const auto m1 = hierarchical_measures(t1, grid);
  const auto ga = ChannelOperator::grad_augmented(grid);
  const auto opt = optimal_measure(christoffel_from_frame(orthonormalize_on_grid(stack_channels({ga}, t1))));
  EXPECT_LE((m1[0].pmf() - opt.pmf()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Leverage, IdentityAndTrace) {
  EXPECT_LE((matrix_leverage_scores(Eigen::MatrixXd::Identity(2, 2)).array() - 1.0).abs().maxCoeff(), 1e-15);
  const Eigen::MatrixXd a = gaussian_matrix(30, 6, 17);
  EXPECT_NEAR(matrix_leverage_scores(a).sum(), 6.0, 1e-10);
  Eigen::MatrixXd d = a;
  d.col(5) = d.col(0);
  EXPECT_THROW(matrix_leverage_scores(d), NumericalError);
}

TEST(Leverage, MatchesChristoffelPath) {
  const Eigen::MatrixXd a = gaussian_matrix(20, 5, 18);
  // Uniform discrete domain: rows of A are sqrt(1/N) times point values sqrt(N) a_i.
  auto dom = std::make_shared<const GridDomain>(GridDomain::discrete(20, 1.0 / 20));
  const auto prof = christoffel_from_frame(orthonormalize_on_grid<double>(a, {ChannelLayout{0, 20, 1, dom}}));
  const Eigen::VectorXd tau = matrix_leverage_scores(a);
  EXPECT_LE((tau - prof.K / 20.0).cwiseAbs().maxCoeff(), 1e-8);
}
