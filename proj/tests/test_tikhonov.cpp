#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tikreg/source_conditions.hpp"
#include "tikreg/tikhonov.hpp"

using namespace tikreg;

namespace {

SpectralOperator counter_op(int n) {
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) s[static_cast<std::size_t>(i - 1)] = std::pow(2.0, -i);
  return SpectralOperator::diagonal(s);
}

CoeffVector counter_y(const SpectralOperator& op) {
  Vec y(op.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = std::pow(2.0, -1.5 * double(i + 1));
  return op.codomain_vector(y);
}

Vec random_vec(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

struct CaptureWarnings {
  std::vector<std::string> seen;
  WarningSink saved;
  CaptureWarnings() : saved(warning_sink()) {
    warning_sink() = [this](const std::string& m) { seen.push_back(m); };
  }
  ~CaptureWarnings() { warning_sink() = saved; }
};

}  // namespace

TEST(MinNormSolution, Counter) {
  auto op = counter_op(60);
  const auto u = min_norm_solution(op, counter_y(op));
  for (Eigen::Index i = 0; i < u.size(); ++i) EXPECT_NEAR(u[i], std::pow(2.0, -(i + 1) / 2.0), 1e-15);
  EXPECT_LE((apply(op, u) - counter_y(op)).norm(), 1e-10 * counter_y(op).norm());
}

TEST(MinNormSolution, ZeroData) {
  auto op = counter_op(10);
  EXPECT_EQ(min_norm_solution(op, op.zero_codomain()).norm(), 0.0);
}

TEST(MinNormSolution, Harmonic) {
  const int n = 500;
  std::vector<double> s(n);
  Vec y(n);
  for (int i = 1; i <= n; ++i) {
    s[static_cast<std::size_t>(i - 1)] = 1.0 / std::sqrt(double(i));
    y[i - 1] = std::pow(double(i), -1.5);
  }
  auto op = SpectralOperator::diagonal(s);
  const auto u = min_norm_solution(op, op.codomain_vector(y));
  for (int i = 1; i <= n; ++i) EXPECT_NEAR(u[i - 1], 1.0 / i, 1e-15);
}

TEST(MinNormSolution, OffRangeRejectedAndRoundingWarned) {
  auto op = SpectralOperator::diagonal({1.0, 0.0, 0.5});
  Vec y(3);
  y << 1.0, 1e-3, 1.0;
  EXPECT_THROW(min_norm_solution(op, op.codomain_vector(y)), DataNotInRange);
  CaptureWarnings cap;
  y[1] = 1e-13;
  const auto u = min_norm_solution(op, op.codomain_vector(y));
  EXPECT_EQ(u[1], 0.0);
  EXPECT_EQ(cap.seen.size(), 1u);
  y[1] = 0.0;
  min_norm_solution(op, op.codomain_vector(y));
  EXPECT_EQ(cap.seen.size(), 1u);
}

TEST(MinNormSolution, DenseRankDeficient) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Mat b(6, 3), c(3, 6);
  for (int i = 0; i < 18; ++i) {
    b.data()[i] = g(rng);
    c.data()[i] = g(rng);
  }
  const Mat a = b * c;
  auto op = SpectralOperator::dense(a);
  const Vec x = random_vec(rng, 6);
  const auto y = op.codomain_vector(a * x);
  const auto u = min_norm_solution(op, y);
  const Eigen::VectorXd ref = a.completeOrthogonalDecomposition().pseudoInverse() * y.coeffs();
  EXPECT_LE(oracle::rel_diff(u.coeffs(), ref), 1e-10);
}

TEST(Solve, IdentityIsScalarFilter) {
  auto op = SpectralOperator::diagonal(std::vector<double>(9, 1.0), false);
  std::mt19937_64 rng(1);
  const auto y = op.codomain_vector(random_vec(rng, 9));
  for (double a : {1e-6, 0.3, 5.0}) {
    const auto s = solve(op, y, a);
    EXPECT_LE(oracle::rel_diff(s.solution.coeffs(), y.coeffs() / (1.0 + a)), 1e-15);
  }
}

TEST(Solve, RejectsNonPositiveAlpha) {
  auto op = counter_op(8);
  EXPECT_THROW(solve(op, counter_y(op), 0.0), std::invalid_argument);
  EXPECT_THROW(solve(op, counter_y(op), -1.0), std::invalid_argument);
}

TEST(Solve, CounterMatchesCoordinatewiseOracle) {
  auto op = counter_op(40);
  const auto y = counter_y(op);
  std::vector<double> s(40), yv(40);
  for (int i = 0; i < 40; ++i) {
    s[static_cast<std::size_t>(i)] = std::pow(2.0, -(i + 1));
    yv[static_cast<std::size_t>(i)] = y[i];
  }
  const auto ref = oracle::tikhonov_coordinatewise(s, yv, 1e-6);
  const auto sol = solve(op, y, 1e-6);
  for (int i = 0; i < 40; ++i) EXPECT_NEAR(sol.solution[i], ref[static_cast<std::size_t>(i)], 1e-12 * std::abs(ref[static_cast<std::size_t>(i)]) + 1e-300);
}

TEST(Solve, OverRegularisationBound) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> sv(0.01, 3.0);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> s(15);
    for (auto& v : s) v = sv(rng);
    auto op = SpectralOperator::diagonal(s);
    const auto y = op.codomain_vector(random_vec(rng, 15));
    for (double a : {10.0, 100.0, 1e4}) {
      EXPECT_LE(solve(op, y, a).solution_norm, y.norm() * op.sigma_max() / a * (1 + 1e-14));
    }
  }
}

TEST(Solve, NormalEquationsResidual) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    Mat a(10, 8);
    for (int i = 0; i < 80; ++i) a.data()[i] = g(rng);
    auto op = SpectralOperator::dense(a);
    const auto y = op.codomain_vector(random_vec(rng, 10));
    for (double al : {1e-8, 1e-3, 1.0}) EXPECT_LE(normal_equation_residual(op, y, solve(op, y, al)), 1e-10);
  }
}

TEST(Solve, DenseMatchesStackedLeastSquares) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Mat a(12, 9);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  auto op = SpectralOperator::dense(a);
  const Vec y = random_vec(rng, 12);
  for (double al : {1e-4, 0.1, 10.0}) {
    const Vec ref = oracle::tikhonov_stacked(a, y, al);
    EXPECT_LE(oracle::rel_diff(solve(op, op.codomain_vector(y), al).solution.coeffs(), ref), 1e-10);
    EXPECT_LE(oracle::rel_diff(solve_normal_equations(op, op.codomain_vector(y), al).solution.coeffs(), ref), 1e-10);
  }
}

TEST(Solve, MonotoneInAlpha) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> sv(1e-3, 2.0);
  std::vector<double> s(30);
  for (auto& v : s) v = sv(rng);
  auto op = SpectralOperator::diagonal(s);
  const auto y = op.codomain_vector(random_vec(rng, 30));
  double prev_res = -1.0, prev_norm = std::numeric_limits<double>::infinity();
  for (int k = -10; k <= 4; ++k) {
    const auto sol = solve(op, y, std::pow(10.0, k / 2.0));
    EXPECT_GE(sol.residual_norm, prev_res - 1e-15);
    EXPECT_LE(sol.solution_norm, prev_norm + 1e-15);
    prev_res = sol.residual_norm;
    prev_norm = sol.solution_norm;
  }
}

TEST(Solve, MinimiserOptimality) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> sv(1e-2, 2.0);
  std::vector<double> s(12);
  for (auto& v : s) v = sv(rng);
  auto op = SpectralOperator::diagonal(s);
  const auto y = op.codomain_vector(random_vec(rng, 12));
  const double al = 0.05;
  const auto sol = solve(op, y, al);
  auto j = [&](const CoeffVector& u) {
    const double r = (apply(op, u) - y).norm();
    return r * r + al * u.squaredNorm();
  };
  const double j0 = j(sol.solution);
  for (int t = 0; t < 200; ++t) {
    const auto v = op.domain_vector(random_vec(rng, 12) * std::pow(10.0, -(t % 6)));
    EXPECT_LE(j0, j(sol.solution + v) + 1e-10);
  }
}

TEST(ErrorBound, FormulaEvaluation) {
  const double mu = 2.0 / 3.0, beta = 3.0, gamma = 0.25, delta = 1e-3, alpha = 1e-4;
  const double ref = 2.0 / 0.75 * 1e-6 / 1e-4 + std::pow(3.0, 1.5) * (4.0 / 3.0) / 1.5 * std::pow(1e-4, 0.5);
  EXPECT_NEAR(error_bound_value(mu, beta, gamma, delta, alpha), ref, 1e-15 * ref);
}

TEST(ErrorBound, ZeroCertificateForcesZeroSolution) {
  auto op = counter_op(10);
  const auto y = op.zero_codomain();
  const auto r = error_bound({1.0, 0.0, 0.0, 0.0, 0.1}, op, y, y);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_TRUE(r.holds);
  EXPECT_FALSE(r.note.empty());  // gamma = 0 is flagged
}

TEST(ErrorBound, ParameterValidation) {
  auto op = counter_op(10);
  const auto y = counter_y(op);
  EXPECT_THROW(error_bound({0.0, 1.0, 0.1, 0.0, 1.0}, op, y, y), std::invalid_argument);
  EXPECT_THROW(error_bound({0.5, -1.0, 0.1, 0.0, 1.0}, op, y, y), std::invalid_argument);
  EXPECT_THROW(error_bound({0.5, 1.0, 1.0, 0.0, 1.0}, op, y, y), std::invalid_argument);
  EXPECT_THROW(error_bound({0.5, 1.0, 0.1, 0.0, 0.0}, op, y, y), std::invalid_argument);
  Vec e = Vec::Zero(10);
  e[0] = 1e-3;
  EXPECT_THROW(error_bound({0.5, 1.0, 0.1, 1e-4, 1.0}, op, y, y + op.codomain_vector(e)), std::invalid_argument);
}

TEST(ErrorBound, NoiseFreeHoldsWithVerifiedCertificate) {
  auto op = counter_op(60);
  const auto y = counter_y(op);
  const auto ud = min_norm_solution(op, y);
  const auto hvi = check_hvi(op, ud, 0.5);
  ASSERT_EQ(hvi.verdict, Verdict::Certified);
  const auto c = hvi_to_ivi_certificate(hvi.constant("beta"), 0.5);
  ASSERT_EQ(check_ivi(op, ud, c.mu, c.beta, c.gamma).verdict, Verdict::Certified);
  for (int k = -12; k <= 0; ++k) {
    const auto r = error_bound({c.mu, c.beta, c.gamma, 0.0, std::pow(10.0, k)}, op, y, y);
    EXPECT_TRUE(r.holds) << "alpha=1e" << k << " lhs=" << r.lhs << " rhs=" << r.rhs;
  }
}

TEST(ErrorBound, CounterNoisyGrid) {
  auto op = counter_op(60);
  const auto y = counter_y(op);
  const auto ud = min_norm_solution(op, y);
  const auto c = hvi_to_ivi_certificate(check_hvi(op, ud, 0.5).constant("beta"), 0.5);
  for (int k = 2; k <= 6; ++k) {
    const double d = std::pow(10.0, -k);
    for (int dir : {0, 5, 20, 59}) {
      Vec e = Vec::Zero(60);
      e[dir] = d;
      const auto r = error_bound({c.mu, c.beta, c.gamma, d, std::pow(d, 4.0 / 3.0)}, op, y, y + op.codomain_vector(e));
      EXPECT_TRUE(r.holds) << d << " " << dir;
    }
  }
}
