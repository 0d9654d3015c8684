#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "cs4ml/polybasis.hpp"

using namespace cs4ml;

namespace {

/// Composite Simpson rule of g on [a, b] with k (even) panels.
template <class G>
double simpson(G g, double a, double b, int k) {
  const double h = (b - a) / k;
  double s = g(a) + g(b);
  for (int i = 1; i < k; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
  return s * h / 3.0;
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int k) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(k, k);
  for (int i = 1; i < k; ++i) j(i, i - 1) = j(i - 1, i) = i / std::sqrt(4.0 * i * i - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  return {es.eigenvalues(), 2.0 * es.eigenvectors().row(0).transpose().cwiseAbs2()};
}

double gauss_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

TEST(HyperbolicCross, OneDimensionalIsTotalDegree) {
  const auto s = hyperbolic_cross(1, 3);
  ASSERT_EQ(s.size(), 4);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(s.indices[static_cast<std::size_t>(k)][0], k);
}

TEST(HyperbolicCross, OrderZero) {
  const auto s = hyperbolic_cross(2, 0);
  ASSERT_EQ(s.size(), 1);
  EXPECT_EQ(s.indices[0], MultiIndex({0, 0}));
}

TEST(HyperbolicCross, MatchesBruteForceEnumeration) {
  for (int d = 1; d <= 4; ++d)
    for (int p = 0; p <= 12; ++p) {
      std::vector<MultiIndex> oracle;
      std::vector<int> a(static_cast<std::size_t>(d), 0);
      // Odometer over [0, p]^d, kept in lexicographic order.
      while (true) {
        long long prod = 1;
        for (int v : a) prod *= v + 1;
        if (prod <= p + 1) oracle.emplace_back(a);
        int k = d - 1;
        while (k >= 0 && a[static_cast<std::size_t>(k)] == p) a[static_cast<std::size_t>(k--)] = 0;
        if (k < 0) break;
        ++a[static_cast<std::size_t>(k)];
      }
      const auto s = hyperbolic_cross(d, p);
      EXPECT_EQ(s.indices, oracle) << "d=" << d << " p=" << p;
    }
}

TEST(HyperbolicCross, ExplicitTwoDimensionalOrderThree) {
  const auto s = hyperbolic_cross(2, 3);
  const std::vector<MultiIndex> want{MultiIndex({0, 0}), MultiIndex({0, 1}), MultiIndex({0, 2}), MultiIndex({0, 3}),
                                     MultiIndex({1, 0}), MultiIndex({1, 1}), MultiIndex({2, 0}), MultiIndex({3, 0})};
  EXPECT_EQ(s.indices, want);
}

TEST(HyperbolicCross, CardinalityMonotone) {
  for (int d = 1; d <= 5; ++d)
    for (int p = 0; p < 30; ++p) EXPECT_LE(hyperbolic_cross(d, p).size(), hyperbolic_cross(d, p + 1).size());
  for (int p = 0; p < 30; ++p) EXPECT_EQ(hyperbolic_cross(1, p).size(), p + 1);
}

TEST(HyperbolicCross, SortedAndUnique) {
  const auto s = hyperbolic_cross(3, 20);
  EXPECT_TRUE(std::is_sorted(s.indices.begin(), s.indices.end()));
  EXPECT_EQ(std::set<MultiIndex>(s.indices.begin(), s.indices.end()).size(), s.indices.size());
}

TEST(MultiIndex, RejectsNegativeAndEmpty) {
  EXPECT_THROW(MultiIndex(std::vector<int>{}), InvalidArgument);
  EXPECT_THROW(MultiIndex({1, -1}), InvalidArgument);
  EXPECT_THROW(hyperbolic_cross(0, 2), InvalidArgument);
}

TEST(Hermite, LowDegreeValues) {
  for (double t : {-2.0, -0.3, 0.0, 1.0, 4.5}) EXPECT_EQ(orthonormal_poly_eval(PolyFamily::hermite_prob, 3, t).values(0), 1.0);
  const auto v1 = orthonormal_poly_eval(PolyFamily::hermite_prob, 2, 1.0);
  EXPECT_NEAR(v1.values(2), 0.0, 1e-15);
  EXPECT_NEAR(v1.derivs(2), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(orthonormal_poly_eval(PolyFamily::hermite_prob, 2, 0.0).values(2), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(orthonormal_poly_eval(PolyFamily::hermite_prob, 1, 0.7).values(1), 0.7, 1e-15);
}

TEST(Hermite, RecurrenceMatchesClosedForm) {
  std::mt19937_64 eng(3);
  std::normal_distribution<double> nd(0.0, 1.5);
  for (int i = 0; i < 200; ++i) {
    const double t = nd(eng);
    const auto v = orthonormal_poly_eval(PolyFamily::hermite_prob, 4, t);
    EXPECT_NEAR(v.values(3), (t * t * t - 3.0 * t) / std::sqrt(6.0), 1e-12 * (1.0 + std::abs(t * t * t)));
    EXPECT_NEAR(v.values(4), (t * t * t * t - 6.0 * t * t + 3.0) / std::sqrt(24.0), 1e-12 * (1.0 + t * t * t * t));
  }
}

TEST(Hermite, OrthonormalUnderGaussianQuadrature) {
  const int nmax = 8;
  for (int a = 0; a <= nmax; ++a)
    for (int b = 0; b <= nmax; ++b) {
      auto g = [&](double x) {
        const auto v = orthonormal_poly_eval(PolyFamily::hermite_prob, nmax, x);
        return v.values(a) * v.values(b) * gauss_pdf(x);
      };
      EXPECT_NEAR(simpson(g, -14.0, 14.0, 20000), a == b ? 1.0 : 0.0, 1e-10) << a << "," << b;
    }
}

TEST(Legendre, ValuesAndOrthonormality) {
  EXPECT_NEAR(orthonormal_poly_eval(PolyFamily::legendre_uniform, 1, 0.5).values(1), std::sqrt(3.0) * 0.5, 1e-15);
  const int nmax = 12;
  const auto [x, w] = gauss_legendre(20);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nmax + 1, nmax + 1);
  for (int q = 0; q < 20; ++q) {
    const auto v = orthonormal_poly_eval(PolyFamily::legendre_uniform, nmax, x(q));
    gram += 0.5 * w(q) * v.values * v.values.transpose();
  }
  EXPECT_LE((gram - Eigen::MatrixXd::Identity(nmax + 1, nmax + 1)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(OrthonormalPoly, DerivativesMatchCentralDifferences) {
  for (auto fam : {PolyFamily::hermite_prob, PolyFamily::legendre_uniform})
    for (double t : {-0.9, -0.2, 0.35, 0.8}) {
      const double h = 1e-5;
      const auto v = orthonormal_poly_eval(fam, 9, t);
      const auto vp = orthonormal_poly_eval(fam, 9, t + h);
      const auto vm = orthonormal_poly_eval(fam, 9, t - h);
      for (int n = 0; n <= 9; ++n) EXPECT_NEAR(v.derivs(n), (vp.values(n) - vm.values(n)) / (2 * h), 1e-6 * (1 + std::abs(v.derivs(n))));
    }
}

TEST(OrthonormalPoly, RejectsNonFinite) {
  EXPECT_THROW(orthonormal_poly_eval(PolyFamily::hermite_prob, 3, std::nan("")), InvalidArgument);
  EXPECT_THROW(orthonormal_poly_eval(PolyFamily::legendre_uniform, 3, INFINITY), InvalidArgument);
  EXPECT_THROW(orthonormal_poly_eval(PolyFamily::hermite_prob, -1, 0.0), InvalidArgument);
}

TEST(SobolevBasis, ConstantAndLinearMembers) {
  Eigen::MatrixXd pts(3, 2);
  pts << 0.3, -1.0, 1.5, 2.0, -0.7, 0.1;
  const auto g = GridDomain::empirical(pts);
  const auto s = hyperbolic_cross(2, 1);  // {(0,0),(0,1),(1,0)}
  const auto t = sobolev_tensor_basis(s, g, PolyFamily::hermite_prob);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_EQ(t.values(i, 0), 1.0);
    EXPECT_EQ(t.derivative(1)(i, 0), 0.0);
    EXPECT_EQ(t.derivative(2)(i, 0), 0.0);
    EXPECT_NEAR(t.values(i, 2), pts(i, 0) / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(t.derivative(1)(i, 2), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(t.derivative(2)(i, 2), 0.0, 1e-15);
  }
  EXPECT_TRUE(t.derivative(0) == t.values);
}

TEST(SobolevBasis, DimensionMismatch) {
  const auto g = GridDomain::empirical(Eigen::MatrixXd::Zero(4, 3));
  EXPECT_THROW(sobolev_tensor_basis(hyperbolic_cross(2, 3), g, PolyFamily::hermite_prob), InvalidArgument);
}

TEST(SobolevBasis, GaussianGridGramNearIdentity) {
  const Index npts = 50000;
  const auto g = monte_carlo_grid(GridDistribution::gaussian, 2, npts, {21, 0});
  const auto s = hyperbolic_cross(2, 7);  // n = 20
  ASSERT_EQ(s.size(), 20);
  const auto t = sobolev_tensor_basis(s, g, PolyFamily::hermite_prob);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(20, 20), second = Eigen::MatrixXd::Zero(20, 20);
  for (Index i = 0; i < npts; ++i) {
    Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(20, 20);
    for (Index k = 0; k <= 2; ++k) outer += t.derivative(k).row(i).transpose() * t.derivative(k).row(i);
    gram += outer / static_cast<double>(npts);
    second += outer.cwiseAbs2() / static_cast<double>(npts);
  }
  const Eigen::MatrixXd err = (gram - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs();
  // Fixed 0.05 entrywise where the quadrature variance allows it: the
  // members of the order-2 cross.
  const auto low = hyperbolic_cross(2, 2);
  ASSERT_EQ(low.size(), 5);
  std::vector<Index> pos;
  for (Index i = 0; i < 20; ++i)
    for (Index j = 0; j < low.size(); ++j)
      if (s.indices[i] == low.indices[j]) pos.push_back(i);
  ASSERT_EQ(pos.size(), 5u);
  for (Index a : pos)
    for (Index b : pos) EXPECT_LE(err(a, b), 0.05) << a << "," << b;
  // Degree-7 entries have Monte Carlo std errors well above 0.05 at this N;
  // bound every entry by 5 sample standard errors instead.
  const Eigen::MatrixXd se = ((second - gram.cwiseAbs2()).cwiseMax(0.0) / static_cast<double>(npts)).cwiseSqrt();
  for (Index i = 0; i < 20; ++i)
    for (Index j = 0; j < 20; ++j) EXPECT_LE(err(i, j), 5.0 * se(i, j) + 1e-12) << i << "," << j;
}

TEST(SobolevBasis, OffDiagonalGramShrinksWithGridSize) {
  const auto s = hyperbolic_cross(2, 5);
  std::vector<double> med;
  for (Index n : {1000, 10000, 100000}) {
    const auto g = monte_carlo_grid(GridDistribution::gaussian, 2, n, {33, 0});
    const auto t = sobolev_tensor_basis(s, g, PolyFamily::hermite_prob);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(s.size(), s.size());
    for (Index k = 0; k <= 2; ++k) gram += t.derivative(k).transpose() * t.derivative(k) / static_cast<double>(n);
    std::vector<double> off;
    for (Index i = 0; i < gram.rows(); ++i)
      for (Index j = i + 1; j < gram.cols(); ++j) off.push_back(std::abs(gram(i, j)));
    std::nth_element(off.begin(), off.begin() + off.size() / 2, off.end());
    med.push_back(off[off.size() / 2]);
  }
  EXPECT_GT(med[0], med[1]);
  EXPECT_GT(med[1], med[2]);
}

TEST(SobolevBasis, LegendreGramMatchesQuadrature) {
  // 1-D exact H^1 Gram of psi_0..psi_6 under the uniform probability measure.
  const auto s = hyperbolic_cross(1, 6);
  const Eigen::MatrixXd g = sobolev_gram(s, PolyFamily::legendre_uniform);
  const auto [x, w] = gauss_legendre(12);
  Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(7, 7);
  for (int q = 0; q < 12; ++q) {
    const auto v = orthonormal_poly_eval(PolyFamily::legendre_uniform, 6, x(q));
    quad += 0.5 * w(q) * (v.values * v.values.transpose() + v.derivs * v.derivs.transpose());
  }
  EXPECT_LE((g - quad).cwiseAbs().maxCoeff(), 1e-11 * (1 + quad.cwiseAbs().maxCoeff()));
}

TEST(SobolevBasis, LegendreTensorBasisIsSobolevOrthonormal) {
  const auto s = hyperbolic_cross(2, 9);
  const Eigen::MatrixXd t = sobolev_orthonormalizer(s, PolyFamily::legendre_uniform);
  const Eigen::MatrixXd g = sobolev_gram(s, PolyFamily::legendre_uniform);
  EXPECT_LE((t.transpose() * g * t - Eigen::MatrixXd::Identity(s.size(), s.size())).cwiseAbs().maxCoeff(), 1e-10);
  // Tensor Gauss-Legendre grid, exact for these degrees.
  const int k = 16;
  const auto [x, gw] = gauss_legendre(k);
  Eigen::MatrixXd pts(k * k, 2);
  Eigen::VectorXd w(k * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      pts(i * k + j, 0) = x(i);
      pts(i * k + j, 1) = x(j);
      w(i * k + j) = gw(i) * gw(j) / 4.0;
    }
  const GridDomain grid(pts, w);
  const auto tab = sobolev_tensor_basis(s, grid, PolyFamily::legendre_uniform);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(s.size(), s.size());
  for (Index d = 0; d <= 2; ++d) gram += tab.derivative(d).transpose() * w.asDiagonal() * tab.derivative(d);
  EXPECT_LE((gram - Eigen::MatrixXd::Identity(s.size(), s.size())).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FunctionTable, RecombineIsLinear) {
  const auto g = monte_carlo_grid(GridDistribution::gaussian, 2, 50, {4, 0});
  const auto t = sobolev_tensor_basis(hyperbolic_cross(2, 4), g, PolyFamily::hermite_prob);
  const Eigen::MatrixXd mix = Eigen::MatrixXd::Random(t.functions(), 3);
  const auto r = t.recombine(mix);
  EXPECT_LE((r.values - t.values * mix).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LE((r.derivative(2) - t.derivative(2) * mix).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_THROW(static_cast<void>(t.derivative(3)), InvalidArgument);
}
