#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tikreg/spectral_core.hpp"

using namespace tikreg;

namespace {

std::vector<double> counter_sigma(int n) {
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) s[static_cast<std::size_t>(i - 1)] = std::pow(2.0, -i);
  return s;
}

CoeffVector counter_udag(const SpectralOperator& op) {
  Vec u(op.cols());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = std::pow(2.0, -(i + 1) / 2.0);
  return op.domain_vector(u);
}

Mat random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = g(rng);
  return m;
}

Vec random_vec(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

}  // namespace

TEST(Apply, CounterFirstBasisVector) {
  auto op = SpectralOperator::diagonal(counter_sigma(10));
  Vec e = Vec::Zero(10);
  e[0] = 1.0;
  const auto lu = apply(op, op.domain_vector(e));
  EXPECT_DOUBLE_EQ(lu[0], 0.5);
  EXPECT_EQ(lu.coeffs().tail(9).norm(), 0.0);
  EXPECT_EQ(lu.space(), Space::Codomain);
}

TEST(Apply, ZeroIsZero) {
  auto op = SpectralOperator::diagonal(counter_sigma(6));
  EXPECT_EQ(apply(op, op.zero_domain()).norm(), 0.0);
  std::mt19937_64 rng(3);
  auto dense = SpectralOperator::dense(random_matrix(rng, 5, 7));
  EXPECT_EQ(apply(dense, dense.zero_domain()).norm(), 0.0);
}

TEST(Apply, DenseMatchesMatrixProduct) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat a = random_matrix(rng, 8, 8);
    auto op = SpectralOperator::dense(a);
    const Vec u = random_vec(rng, 8);
    const Vec ref = a * u;
    EXPECT_LE(oracle::rel_diff(apply(op, op.domain_vector(u)).coeffs(), ref), 1e-12);
    const Vec w = random_vec(rng, 8);
    EXPECT_LE(oracle::rel_diff(apply_adjoint(op, op.codomain_vector(w)).coeffs(), a.transpose() * w), 1e-12);
  }
}

TEST(Apply, DenseRectangularMatchesMatrixProduct) {
  std::mt19937_64 rng(12);
  for (auto [r, c] : {std::pair{5, 9}, std::pair{9, 5}}) {
    const Mat a = random_matrix(rng, r, c);
    auto op = SpectralOperator::dense(a);
    const Vec u = random_vec(rng, c);
    EXPECT_LE(oracle::rel_diff(apply(op, op.domain_vector(u)).coeffs(), a * u), 1e-10);
  }
}

TEST(Frames, MixingOperatorsThrows) {
  auto a = SpectralOperator::diagonal({1.0, 0.5});
  auto b = SpectralOperator::diagonal({1.0, 0.5});
  const auto ua = a.domain_vector(Vec::Ones(2));
  const auto ub = b.domain_vector(Vec::Ones(2));
  EXPECT_THROW(apply(b, ua), FrameMismatch);
  EXPECT_THROW(ua.dot(ub), FrameMismatch);
  EXPECT_THROW(apply(a, apply(a, ua)), FrameMismatch);  // codomain vector fed as domain
  EXPECT_THROW(a.domain_vector(Vec::Ones(3)), std::invalid_argument);
}

TEST(CoeffVectorTest, RejectsNonFinite) {
  auto op = SpectralOperator::diagonal({1.0, 0.5});
  Vec v(2);
  v << 1.0, std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(op.domain_vector(v), std::invalid_argument);
}

TEST(Construction, ZeroEntriesDropped) {
  auto op = SpectralOperator::diagonal({1.0, 0.0, 0.25});
  EXPECT_EQ(op.rank(), 2);
  EXPECT_EQ(op.dropped(), 1);
  EXPECT_NE(op.basis_note().find("dropped 1"), std::string::npos);
  EXPECT_THROW(SpectralOperator::diagonal({0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(SpectralOperator::diagonal({1.0, -1.0}), std::invalid_argument);
}

TEST(Construction, DenseDropsTinySingularValues) {
  std::mt19937_64 rng(5);
  const Mat b = random_matrix(rng, 8, 3);
  const Mat a = b * random_matrix(rng, 3, 8);  // rank 3
  auto op = SpectralOperator::dense(a);
  EXPECT_EQ(op.rank(), 3);
  EXPECT_EQ(op.dropped(), 5);
  EXPECT_FALSE(op.models_truncation());
  for (Eigen::Index k = 0; k < op.rank(); ++k) EXPECT_GT(op.singular_values()[k], 0.0);
}

TEST(PowerApply, ZeroPowerIsIdentity) {
  auto op = SpectralOperator::diagonal(counter_sigma(12));
  const auto u = counter_udag(op);
  EXPECT_EQ((power_apply(op, 0.0, u) - u).norm(), 0.0);
}

TEST(PowerApply, HalfPowerNormEqualsApplyNorm) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> sv(1e-3, 2.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> s(16);
    for (auto& v : s) v = sv(rng);
    auto op = SpectralOperator::diagonal(s);
    const auto u = op.domain_vector(random_vec(rng, 16));
    EXPECT_NEAR(power_apply(op, 0.5, u).norm(), apply(op, u).norm(), 1e-12 * apply(op, u).norm());
  }
}

TEST(PowerApply, CounterInverseQuarterIsAllOnes) {
  auto op = SpectralOperator::diagonal(counter_sigma(30));
  const auto w = power_apply(op, -0.25, counter_udag(op));
  for (Eigen::Index i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], 1.0, 1e-12);
}

TEST(PowerApply, NegativePowerWithNullSpaceThrows) {
  auto op = SpectralOperator::diagonal({1.0, 0.0});
  EXPECT_THROW(power_apply(op, -0.5, op.domain_vector(Vec::Ones(2))), std::domain_error);
}

TEST(PowerApply, NormIdentity) {
  std::mt19937_64 rng(22);
  const Mat a = random_matrix(rng, 7, 7);
  auto op = SpectralOperator::dense(a);
  const auto u = op.domain_vector(random_vec(rng, 7));
  const double lhs = apply(op, u).norm() * apply(op, u).norm();
  EXPECT_NEAR(power_apply(op, 1.0, u).dot(u), lhs, 1e-12 * lhs);
}

TEST(PowerApply, InterpolationInequality) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> sv(1e-4, 3.0);
  const double grid[] = {0.1, 0.25, 0.5, 0.75, 1.0};
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(20);
    for (auto& v : s) v = sv(rng);
    auto op = SpectralOperator::diagonal(s);
    const auto u = op.domain_vector(random_vec(rng, 20));
    for (double r : grid)
      for (double q : grid) {
        if (r > q) continue;
        const double lhs = power_apply(op, r, u).norm();
        const double rhs = std::pow(power_apply(op, q, u).norm(), r / q) * std::pow(u.norm(), 1.0 - r / q);
        EXPECT_LE(lhs, rhs + 1e-12) << "r=" << r << " q=" << q;
      }
  }
}

TEST(SpectralProjection, BelowSpectrumIsZero) {
  auto op = SpectralOperator::diagonal(counter_sigma(20));
  EXPECT_EQ(spectral_projection_norm(op, counter_udag(op), 0.0), 0.0);
  EXPECT_THROW(spectral_projection_norm(op, counter_udag(op), -1.0), std::invalid_argument);
}

TEST(SpectralProjection, CounterClosedForm) {
  const int n = 60;
  auto op = SpectralOperator::diagonal(counter_sigma(n));
  const auto u = counter_udag(op);
  for (int m = 1; m <= n; ++m) {
    // sum_{k=m}^{n} 2^-k = 2^{1-m} - 2^{-n}
    const double ref = std::sqrt(std::pow(2.0, 1 - m) - std::pow(2.0, -n));
    EXPECT_NEAR(spectral_projection_norm(op, u, std::pow(4.0, -m)), ref, 1e-13 * ref) << m;
  }
}

TEST(SpectralProjection, HarmonicTailSums) {
  const int n = 200;
  std::vector<double> s(n);
  Vec u(n);
  for (int i = 1; i <= n; ++i) {
    s[static_cast<std::size_t>(i - 1)] = 1.0 / std::sqrt(double(i));
    u[i - 1] = 1.0 / i;
  }
  auto op = SpectralOperator::diagonal(s);
  const auto uv = op.domain_vector(u);
  for (int m : {1, 2, 7, 50, 199}) {
    long double acc = 0.0L;
    for (int k = m; k <= n; ++k) acc += 1.0L / (static_cast<long double>(k) * k);
    const double ref = std::sqrt(static_cast<double>(acc));
    EXPECT_NEAR(spectral_projection_norm(op, uv, 1.0 / m), ref, 1e-12 * ref) << m;
  }
}

TEST(SpectralProjection, MonotoneAndFullAtTop) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> sv(1e-3, 1.0);
  std::vector<double> s(25);
  for (auto& v : s) v = sv(rng);
  auto op = SpectralOperator::diagonal(s);
  const auto u = op.domain_vector(random_vec(rng, 25));
  std::vector<double> lam;
  for (double v : s) lam.push_back(v * v);
  std::sort(lam.begin(), lam.end());
  double prev = 0.0;
  for (double l : lam) {
    const double at = spectral_projection_norm(op, u, l);
    EXPECT_GE(at, prev);
    // right-continuity on the atom grid: the value at an atom equals the limit from above
    EXPECT_EQ(spectral_projection_norm(op, u, l * (1.0 + 1e-12)), at);
    prev = at;
  }
  EXPECT_NEAR(spectral_projection_norm(op, u, lam.back()), u.norm(), 1e-14 * u.norm());
}

TEST(VectorMeasure, SelfMeasureMassIsNormSquared) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 20; ++t) {
    const Mat a = random_matrix(rng, 6, 6);
    auto op = SpectralOperator::dense(a);
    const auto u = op.domain_vector(random_vec(rng, 6));
    const auto m = vector_measure(op, u, u);
    EXPECT_FALSE(m.is_signed());
    EXPECT_NEAR(m.total_mass(), u.squaredNorm(), 1e-12 * u.squaredNorm());
  }
}

TEST(VectorMeasure, CounterSingleAtom) {
  auto op = SpectralOperator::diagonal(counter_sigma(20));
  Vec e = Vec::Zero(20);
  e[0] = 1.0;
  const auto m = vector_measure(op, counter_udag(op), op.domain_vector(e));
  ASSERT_EQ(m.size(), 1u);
  EXPECT_DOUBLE_EQ(m.atoms()[0].location, 0.25);
  EXPECT_DOUBLE_EQ(m.atoms()[0].mass, std::pow(2.0, -0.5));
}

TEST(VectorMeasure, DisjointSupportsGiveZeroMeasure) {
  auto op = SpectralOperator::diagonal(counter_sigma(6));
  Vec v = Vec::Zero(6), w = Vec::Zero(6);
  v.head(3).setOnes();
  w.tail(3).setOnes();
  const auto m = vector_measure(op, op.domain_vector(v), op.domain_vector(w));
  EXPECT_TRUE(m.empty());
  EXPECT_EQ(m.total_mass(), 0.0);
}

TEST(VectorMeasure, CoincidentValuesMerged) {
  auto op = SpectralOperator::diagonal({1.0, 0.5, 1.0, 0.5});
  Vec v(4);
  v << 1, 2, 3, 4;
  const auto m = vector_measure(op, op.domain_vector(v), op.domain_vector(v));
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m.atoms()[0].mass, 4.0 + 16.0);
  EXPECT_DOUBLE_EQ(m.atoms()[1].mass, 1.0 + 9.0);
}

TEST(VectorMeasure, SignedAndInnerProduct) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> sv(0.01, 1.0);
  std::vector<double> s(12);
  for (auto& x : s) x = sv(rng);
  auto op = SpectralOperator::diagonal(s);
  const auto v = op.domain_vector(random_vec(rng, 12));
  const auto w = op.domain_vector(random_vec(rng, 12));
  const auto m = vector_measure(op, v, w);
  EXPECT_TRUE(m.is_signed());
  EXPECT_NEAR(m.total_mass(), v.dot(w), 1e-12 * v.norm() * w.norm());
}

TEST(VectorMeasure, NullSpaceAtomAtZero) {
  auto op = SpectralOperator::diagonal({1.0, 0.0, 0.5});
  Vec v(3);
  v << 1.0, 2.0, 3.0;
  const auto m = vector_measure(op, op.domain_vector(v), op.domain_vector(v));
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.atoms()[0].location, 0.0);
  EXPECT_DOUBLE_EQ(m.atoms()[0].mass, 4.0);
}

TEST(DiscreteMeasureTest, Validation) {
  EXPECT_THROW(DiscreteMeasure({{1.0, 1.0}, {0.5, 1.0}}, false), std::invalid_argument);
  EXPECT_THROW(DiscreteMeasure({{0.5, -1.0}}, false), std::invalid_argument);
  EXPECT_THROW(DiscreteMeasure({{-0.5, 1.0}}, false), std::invalid_argument);
  EXPECT_NO_THROW(DiscreteMeasure({{0.5, -1.0}}, true));
  const auto m = DiscreteMeasure::from_unsorted({{2.0, 1.0}, {1.0, -3.0}, {2.0, 1.0}});
  EXPECT_TRUE(m.is_signed());
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.total_variation(), 5.0);
  EXPECT_EQ(m.mass_below(2.0, false), -3.0);
  EXPECT_EQ(m.mass_below(2.0, true), -1.0);
}

TEST(DiscreteMeasureTest, MomentAtZeroAtom) {
  const DiscreteMeasure m({{0.0, 1.0}, {4.0, 2.0}}, false);
  EXPECT_THROW(m.moment(-1.0, 0.0, 10.0), std::domain_error);
  EXPECT_DOUBLE_EQ(m.moment(0.5, 0.0, 10.0), 4.0);
  EXPECT_DOUBLE_EQ(m.moment(0.0, 0.0, 10.0), 3.0);
  EXPECT_DOUBLE_EQ(m.moment(-1.0, 1.0, 10.0), 0.5);
}
