#pragma once

// Named problem instances with the verdicts they are known to produce.
//
//   counter26      L phi_n = 2^-n phi_n,            u†_n = 2^{-n/2}
//   harmonic4      L phi_n = n^{-1/2} phi_n,        u†_n = 1/n
//   remark_nu_gap  L phi_n = n^-2 2^-n phi_n,       u†_n = 2^{-n/2}
//   identity       L = I (finite dimensional),      u†_n = 1/n
//   finite_rank    dense rank N/2, sigma in [0.5,1]
//   random_diag    sigma_n = q^n, u† = (L*L)^{nu/2} omega with geometric omega

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tikreg/source_conditions.hpp"
#include "tikreg/tikhonov.hpp"

namespace tikreg {

struct ExpectedVerdict {
  Condition condition = Condition::StandardSC;
  double parameter = 0.0;
  Verdict verdict = Verdict::Certified;
  // IVI constants; when absent they are converted from a certified HVI
  // constant at nu = mu / (2 - mu).
  std::optional<double> beta;
  std::optional<double> gamma;
  // Upper limit on the reported inner constant (beta / 2) for HVI claims.
  std::optional<double> inner_constant_max;
};

struct NamedInstance {
  std::string name;
  SpectralOperator op;
  CoeffVector y;
  CoeffVector u_dagger;
  std::vector<ExpectedVerdict> expected;
  std::size_t N = 0;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& instance_names() {
  static const std::vector<std::string> names{"counter26",  "harmonic4",   "remark_nu_gap",
                                              "identity",   "finite_rank", "random_diag"};
  return names;
}

namespace detail {

inline NamedInstance diagonal_instance(std::string name, const std::vector<double>& sigma,
                                       const std::vector<double>& udag, bool truncated, std::size_t n,
                                       std::uint64_t seed) {
  auto op = SpectralOperator::diagonal(sigma, truncated);
  Vec y(static_cast<Eigen::Index>(sigma.size()));
  for (std::size_t k = 0; k < sigma.size(); ++k) y[static_cast<Eigen::Index>(k)] = sigma[k] * udag[k];
  auto yv = op.codomain_vector(std::move(y));
  auto ud = min_norm_solution(op, yv);
  return NamedInstance{std::move(name), std::move(op), std::move(yv), std::move(ud), {}, n, seed};
}

/// Spectral quantities use sigma^4; past the normal range of double they
/// underflow and every constant degenerates.
inline void require_representable(const std::string& name, const std::vector<double>& sigma) {
  const double smin = *std::min_element(sigma.begin(), sigma.end());
  if (!(std::pow(smin, 4.0) >= std::numeric_limits<double>::min()))
    throw std::invalid_argument("build: N too large for '" + name + "' (sigma_N^4 underflows double)");
}

}  // namespace detail

/// Diagonal instance with sigma_n = q^n and u† = (L*L)^{nu/2} omega,
/// omega_n = +-[0.5,1.5] r^n (signs and factors seeded).
inline NamedInstance random_diagonal(std::size_t n, double nu, std::uint64_t seed, double q = 0.5, double r = 0.8) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  std::bernoulli_distribution flip(0.5);
  std::vector<double> sigma(n), udag(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double i = static_cast<double>(k + 1);
    sigma[k] = std::pow(q, i);
    const double omega = (flip(rng) ? -1.0 : 1.0) * mag(rng) * std::pow(r, i);
    udag[k] = std::pow(sigma[k], nu) * omega;
  }
  auto inst = detail::diagonal_instance("random_diag", sigma, udag, true, n, seed);
  inst.expected = {{Condition::StandardSC, nu, Verdict::Certified}};
  return inst;
}

/// Dense n x n operator of rank n/2 with singular values in [0.5, 1] and
/// random singular vectors; y = L x for a random x.
inline NamedInstance finite_rank(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> sv(0.5, 1.0);
  const auto dim = static_cast<Eigen::Index>(n);
  const Eigen::Index rank = std::max<Eigen::Index>(1, dim / 2);
  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
    return m;
  };
  const Mat u = Eigen::HouseholderQR<Mat>(gaussian(dim, dim)).householderQ();
  const Mat v = Eigen::HouseholderQR<Mat>(gaussian(dim, dim)).householderQ();
  Vec s(rank);
  for (Eigen::Index i = 0; i < rank; ++i) s[i] = sv(rng);
  const Mat a = u.leftCols(rank) * s.asDiagonal() * v.leftCols(rank).transpose();
  auto op = SpectralOperator::dense(a);
  Vec x(dim);
  for (Eigen::Index i = 0; i < dim; ++i) x[i] = g(rng);
  auto yv = op.codomain_vector(a * x);
  auto ud = min_norm_solution(op, yv);
  NamedInstance inst{"finite_rank", std::move(op), std::move(yv), std::move(ud), {}, n, seed};
  return inst;
}

inline std::vector<ExpectedVerdict> all_certified_battery() {
  using C = Condition;
  const auto ok = Verdict::Certified;
  return {{C::StandardSC, 0.5, ok}, {C::StandardSC, 1.0, ok}, {C::StandardSC, 2.0, ok},
          {C::HVI, 0.5, ok},        {C::HVI, 1.0, ok},        {C::SVI, 1.0, ok},
          {C::SVI, 2.0, ok},        {C::IVI, 2.0 / 3.0, ok},  {C::IVI, 1.0, ok},
          {C::SpectralTail, 0.5, ok}, {C::SpectralTail, 1.5, ok}};
}

inline NamedInstance build(const std::string& name, std::size_t n = 60, std::uint64_t seed = 0) {
  if (n < 8) throw std::invalid_argument("build: N must be >= 8");
  using C = Condition;
  const auto ok = Verdict::Certified;
  const auto no = Verdict::RefutedAtN;
  std::vector<double> sigma(n), udag(n);
  if (name == "counter26") {
    for (std::size_t k = 0; k < n; ++k) {
      const double i = static_cast<double>(k + 1);
      sigma[k] = std::pow(2.0, -i);
      udag[k] = std::pow(2.0, -i / 2.0);
    }
    detail::require_representable(name, sigma);
    auto inst = detail::diagonal_instance(name, sigma, udag, true, n, seed);
    ExpectedVerdict hvi{C::HVI, 0.5, ok};
    hvi.inner_constant_max = 2.0 * std::sqrt(2.0);
    inst.expected = {hvi,
                     {C::StandardSC, 0.5, no},
                     {C::StandardSC, 0.3, ok},
                     {C::StandardSC, 0.4, ok},
                     {C::StandardSC, 0.45, ok},
                     {C::SpectralTail, 0.5, ok}};
    return inst;
  }
  if (name == "harmonic4") {
    for (std::size_t k = 0; k < n; ++k) {
      const double i = static_cast<double>(k + 1);
      sigma[k] = 1.0 / std::sqrt(i);
      udag[k] = 1.0 / i;
    }
    auto inst = detail::diagonal_instance(name, sigma, udag, true, n, seed);
    inst.expected = {{C::SpectralTail, 1.0, ok}};
    for (double beta : {1.0, 10.0, 100.0}) {
      ExpectedVerdict e{C::IVI, 1.0, no};
      e.beta = beta;
      e.gamma = 0.5;
      inst.expected.push_back(e);
    }
    return inst;
  }
  if (name == "remark_nu_gap") {
    for (std::size_t k = 0; k < n; ++k) {
      const double i = static_cast<double>(k + 1);
      sigma[k] = std::pow(i, -2.0) * std::pow(2.0, -i);
      udag[k] = std::pow(2.0, -i / 2.0);
    }
    detail::require_representable(name, sigma);
    auto inst = detail::diagonal_instance(name, sigma, udag, true, n, seed);
    inst.expected = {{C::StandardSC, 0.3, ok}, {C::StandardSC, 0.4, ok}, {C::StandardSC, 0.45, ok},
                     {C::HVI, 0.5, no}};
    return inst;
  }
  if (name == "identity") {
    for (std::size_t k = 0; k < n; ++k) {
      sigma[k] = 1.0;
      udag[k] = 1.0 / static_cast<double>(k + 1);
    }
    auto inst = detail::diagonal_instance(name, sigma, udag, false, n, seed);
    inst.expected = all_certified_battery();
    return inst;
  }
  if (name == "finite_rank") {
    auto inst = finite_rank(n, seed);
    inst.expected = all_certified_battery();
    return inst;
  }
  if (name == "random_diag") return random_diagonal(n, 1.0, seed);
  throw std::invalid_argument("build: unknown instance '" + name + "'");
}

/// u_m = m^{-1} sum_{n <= m} phi_n, the refutation family for IVI(1) on harmonic4.
inline CoeffVector harmonic_witness(const NamedInstance& inst, std::size_t m) {
  if (m == 0 || m > static_cast<std::size_t>(inst.op.cols()))
    throw std::invalid_argument("harmonic_witness: m must lie in [1, N]");
  Vec u = Vec::Zero(inst.op.cols());
  u.head(static_cast<Eigen::Index>(m)).setConstant(1.0 / static_cast<double>(m));
  return inst.op.domain_vector(std::move(u));
}

struct ConformanceRow {
  ExpectedVerdict expected;
  ConditionReport report;
  bool match = false;
  std::string detail;
};

inline ConditionReport run_check(const NamedInstance& inst, const ExpectedVerdict& e, const CheckOptions& opt = {}) {
  const auto& op = inst.op;
  const auto& u = inst.u_dagger;
  switch (e.condition) {
    case Condition::StandardSC: return check_standard_sc(op, u, e.parameter, opt);
    case Condition::HVI: return check_hvi(op, u, e.parameter, opt);
    case Condition::SVI: return check_svi(op, u, e.parameter, opt);
    case Condition::SpectralTail: return check_spectral_tail(op, u, e.parameter, opt);
    case Condition::IVI: {
      double beta, gamma;
      if (e.beta && e.gamma) {
        beta = *e.beta;
        gamma = *e.gamma;
      } else {
        const double nu = ivi_equivalent_exponent(e.parameter);
        const auto hvi = check_hvi(op, u, nu, opt);
        if (hvi.verdict != Verdict::Certified || !hvi.has("beta")) {
          auto r = hvi;
          r.condition = Condition::IVI;
          r.parameter = e.parameter;
          r.verdict = Verdict::Inconclusive;
          r.note = "no certified HVI constant to convert";
          return r;
        }
        const auto cert = hvi_to_ivi_certificate(hvi.constant("beta"), nu);
        beta = cert.beta;
        gamma = cert.gamma;
      }
      return check_ivi(op, u, e.parameter, beta, gamma, opt);
    }
  }
  throw std::logic_error("run_check: unknown condition");
}

inline std::vector<ConformanceRow> evaluate_expected(const NamedInstance& inst, const CheckOptions& opt = {}) {
  std::vector<ConformanceRow> rows;
  for (const auto& e : inst.expected) {
    ConformanceRow row{e, run_check(inst, e, opt)};
    row.match = row.report.verdict == e.verdict;
    if (row.match && e.inner_constant_max) {
      const double k = row.report.constant("inner_constant");
      if (k > *e.inner_constant_max) {
        row.match = false;
        row.detail = "inner constant " + std::to_string(k) + " exceeds " + std::to_string(*e.inner_constant_max);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace tikreg
