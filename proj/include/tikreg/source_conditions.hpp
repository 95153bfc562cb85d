#pragma once

// Source conditions on the minimum-norm solution u† of L u = y.
//
//   StandardSC(nu)   u† in R((L*L)^{nu/2})                         nu in (0,2]
//   HVI(nu)          2<u†,u> <= beta ||Lu||^nu ||u||^{1-nu}         nu in (0,1]
//   IVI(mu)          2<u†,u> <= beta ||Lu||^mu + gamma ||u||^2      mu in (0,1]
//   SVI(nu)          2<u†,u> <= beta ||L*Lu||^{nu/2} ||u||^{1-nu/2} nu in (0,2]
//   SpectralTail(nu) ||E_[0,lambda] u†||^2 <= C^2 lambda^nu         nu in (0,2)
//
// All checks work in the singular basis of L. A homogeneous inequality
// 2<a,u> <= beta <Wu,u>^{theta/2} ||u||^{1-theta} has the exact supremum
//
//   beta*^2 = 4 sup_t sum_n a_n^2 / (theta t^{1-theta} w_n + (1-theta) t^{-theta})
//
// over a finite coordinate set (weighted AM-GM turns the product of powers
// into a minimum of quadratic forms). The maximiser is the reweighted copy
// u_t = (theta t^{1-theta} W + (1-theta) t^{-theta})^{-1} a of u†. Checks on
// truncated infinite operators classify the growth of these suprema (or of
// the relevant partial sums) over prefixes of the spectrum.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tikreg/growth.hpp"
#include "tikreg/spectral_core.hpp"

namespace tikreg {

enum class Condition { StandardSC, HVI, IVI, SVI, SpectralTail };
enum class Verdict { Certified, RefutedAtN, Inconclusive };

inline const char* to_string(Condition c) {
  switch (c) {
    case Condition::StandardSC: return "StandardSC";
    case Condition::HVI: return "HVI";
    case Condition::IVI: return "IVI";
    case Condition::SVI: return "SVI";
    case Condition::SpectralTail: return "SpectralTail";
  }
  return "?";
}

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "Certified";
    case Verdict::RefutedAtN: return "RefutedAtN";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

inline std::optional<Condition> parse_condition(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (s == "standardsc" || s == "ssc" || s == "standard") return Condition::StandardSC;
  if (s == "hvi") return Condition::HVI;
  if (s == "ivi") return Condition::IVI;
  if (s == "svi") return Condition::SVI;
  if (s == "spectraltail" || s == "tail" || s == "scr") return Condition::SpectralTail;
  return std::nullopt;
}

inline std::optional<Verdict> parse_verdict(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (s == "certified") return Verdict::Certified;
  if (s == "refutedatn" || s == "refuted") return Verdict::RefutedAtN;
  if (s == "inconclusive") return Verdict::Inconclusive;
  return std::nullopt;
}

struct SeriesPoint {
  double x;
  double value;
};

struct ConditionReport {
  Condition condition = Condition::StandardSC;
  double parameter = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::map<std::string, double> constants;
  std::string diagnostics_label;
  std::vector<SeriesPoint> diagnostics;
  std::size_t truncation = 0;
  Vec witness;  // ambient domain coefficients; empty when there is none
  std::string note;

  bool has(const std::string& key) const { return constants.count(key) != 0; }
  double constant(const std::string& key) const {
    auto it = constants.find(key);
    if (it == constants.end()) throw std::out_of_range("ConditionReport: no constant '" + key + "'");
    return it->second;
  }
};

struct CheckOptions {
  std::size_t random_vectors = 1000;
  std::uint64_t seed = 0x7ac0'5eedULL;
  double violation_rel_tol = 1e-12;
  /// Relative inflation applied to a computed supremum before it is reported
  /// as a certified constant.
  double beta_inflation = 1e-8;
  double grid_points_per_unit = 8.0;  // in log t
};

struct IviCertificate {
  double mu = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

// -- certificate conversions --------------------------------------------------

/// Young's inequality: HVI(nu, beta) gives IVI with
/// mu = 2nu/(1+nu), beta' = (1+nu)/2 beta^{2/(1+nu)}, gamma = (1-nu)/2.
inline IviCertificate hvi_to_ivi_certificate(double beta, double nu) {
  if (!(beta >= 0.0)) throw std::invalid_argument("hvi_to_ivi_certificate: beta must be >= 0");
  if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("hvi_to_ivi_certificate: nu must lie in (0,1]");
  return {2.0 * nu / (1.0 + nu), (1.0 + nu) / 2.0 * std::pow(beta, 2.0 / (1.0 + nu)), (1.0 - nu) / 2.0};
}

/// u† = (L*L)^{nu/2} omega gives HVI(nu) with beta = 2 ||omega||.
inline double ssc_to_hvi_certificate(double omega_norm) {
  if (!(omega_norm >= 0.0)) throw std::invalid_argument("ssc_to_hvi_certificate: norm must be >= 0");
  return 2.0 * omega_norm;
}

/// Spectral tail of order nu with constant C gives
/// 2<u†,u> <= beta ||(L*L)^{rho/2}u||^{nu/rho} ||u||^{1-nu/rho}
/// with beta = 4C / (1 - nu/rho)^{nu/(2 rho)}. rho = 1 is HVI, rho = 2 is SVI.
inline double scr_to_vi_certificate(double c, double nu, double rho) {
  if (!(c >= 0.0)) throw std::invalid_argument("scr_to_vi_certificate: C must be >= 0");
  if (!(nu > 0.0 && nu < 2.0)) throw std::invalid_argument("scr_to_vi_certificate: nu must lie in (0,2)");
  if (!(rho > nu)) throw std::invalid_argument("scr_to_vi_certificate: rho must exceed nu");
  return 4.0 * c / std::pow(1.0 - nu / rho, nu / (2.0 * rho));
}

/// Exponent nu' = mu/(2-mu) and constant c with
/// inf_{s>0} (beta s^{mu-1} X^mu + gamma s Y^2) = c X^{nu'} Y^{1-nu'}.
/// IVI(mu, beta, gamma) is therefore HVI(nu', c) in disguise.
inline double ivi_equivalent_exponent(double mu) { return mu / (2.0 - mu); }

inline double ivi_equivalent_constant(double mu, double beta, double gamma) {
  if (mu >= 1.0) return beta;
  if (beta == 0.0 || gamma == 0.0) return 0.0;
  return (2.0 - mu) / (1.0 - mu) * std::pow(gamma, (1.0 - mu) / (2.0 - mu)) *
         std::pow(beta * (1.0 - mu), 1.0 / (2.0 - mu));
}

// -- literal ratios (evaluated with apply/power_apply, independent of the
//    spectral machinery below) ---------------------------------------------

inline double hvi_ratio(const SpectralOperator& op, const CoeffVector& udag, double nu, const CoeffVector& u) {
  const double num = 2.0 * udag.dot(u);
  const double den = std::pow(apply(op, u).norm(), nu) * std::pow(u.norm(), 1.0 - nu);
  return den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
}

inline double svi_ratio(const SpectralOperator& op, const CoeffVector& udag, double nu, const CoeffVector& u) {
  const double num = 2.0 * udag.dot(u);
  const double den = std::pow(power_apply(op, 1.0, u).norm(), nu / 2.0) * std::pow(u.norm(), 1.0 - nu / 2.0);
  return den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
}

/// 2<u†,u> / (beta ||Lu||^mu + gamma ||u||^2); the inequality holds at u iff <= 1.
inline double ivi_ratio(const SpectralOperator& op, const CoeffVector& udag, double mu, double beta, double gamma,
                        const CoeffVector& u) {
  const double num = 2.0 * udag.dot(u);
  const double lu = apply(op, u).norm();
  const double den = beta * std::pow(lu, mu) + gamma * u.squaredNorm();
  return den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
}

namespace detail {

inline constexpr double kNullTolerance = 1e-13;

/// u† in the singular basis, sorted by non-increasing sigma.
struct Spectrum {
  std::vector<double> sigma;
  std::vector<double> a;
  std::vector<Eigen::Index> order;  // spectral index of each sorted position
  double null_norm = 0.0;
  double norm = 0.0;
  bool truncated = false;
  std::size_t n_ambient = 0;

  std::size_t size() const { return sigma.size(); }
};

inline Spectrum spectrum_of(const SpectralOperator& op, const CoeffVector& udag) {
  op.require(udag, Space::Domain);
  Spectrum s;
  const Vec c = op.domain_spectrum(udag);
  const Vec& sv = op.singular_values();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(sv.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index i, Eigen::Index j) { return sv[i] > sv[j]; });
  for (auto k : idx) {
    s.sigma.push_back(sv[k]);
    s.a.push_back(c[k]);
  }
  s.order = std::move(idx);
  s.null_norm = op.domain_null_part(udag).norm();
  s.norm = udag.norm();
  s.truncated = op.models_truncation();
  s.n_ambient = static_cast<std::size_t>(op.cols());
  return s;
}

inline Vec to_ambient(const SpectralOperator& op, const Spectrum& s, const std::vector<double>& sorted) {
  Vec c = Vec::Zero(op.rank());
  for (std::size_t i = 0; i < sorted.size(); ++i) c[s.order[i]] = sorted[i];
  return op.from_domain_spectrum(c).coeffs();
}

inline bool has_null_component(const Spectrum& s) { return s.null_norm > kNullTolerance * s.norm; }

/// Prefix sizes at which the growth series are sampled.
inline std::vector<std::size_t> prefix_grid(std::size_t n) {
  std::vector<std::size_t> m;
  if (n <= 256) {
    for (std::size_t i = 1; i <= n; ++i) m.push_back(i);
    return m;
  }
  const int points = 96;
  for (int i = 0; i <= points; ++i) {
    const auto v = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), i / double(points))));
    if (m.empty() || v > m.back()) m.push_back(std::min(v, n));
  }
  if (m.back() != n) m.push_back(n);
  return m;
}

/// Exact supremum of 2<a,u> / (<Wu,u>^{theta/2} ||u||^{1-theta}) over the
/// first m coordinates for every m on the prefix grid.
struct HomogeneousSup {
  std::vector<std::size_t> m;
  std::vector<double> ratio;  // refined per prefix, non-decreasing in m
  double sup = 0.0;           // refined, all coordinates
  double log_t_star = 0.0;
  std::vector<double> maximiser;  // sorted coordinates
  std::vector<double> grid_log_t;
};

inline double dual_weight(double theta, double log_t, double w) {
  if (theta >= 1.0) return w;
  return theta * std::exp((1.0 - theta) * log_t + std::log(w)) + (1.0 - theta) * std::exp(-theta * log_t);
}

inline double dual_objective(const std::vector<double>& a, const std::vector<double>& w, double theta,
                             double log_t, std::size_t m) {
  double f = 0.0;
  for (std::size_t n = 0; n < m; ++n) f += a[n] * a[n] / dual_weight(theta, log_t, w[n]);
  return f;
}

inline HomogeneousSup homogeneous_sup(const std::vector<double>& a, const std::vector<double>& w, double theta,
                                      const CheckOptions& opt) {
  HomogeneousSup out;
  const std::size_t n = a.size();
  out.m = prefix_grid(n);
  out.ratio.assign(out.m.size(), 0.0);
  const double wmax = *std::max_element(w.begin(), w.end());
  const double wmin = *std::min_element(w.begin(), w.end());
  const double lo = -std::log(wmax) - 6.0;
  const double hi = -std::log(wmin) + 6.0;
  const int points = theta >= 1.0 ? 1
                                  : std::clamp(static_cast<int>(std::ceil(opt.grid_points_per_unit * (hi - lo))),
                                               64, 4000);
  out.grid_log_t.resize(static_cast<std::size_t>(points));
  std::vector<double> best(out.m.size(), 0.0);
  std::vector<int> best_at(out.m.size(), 0);
  for (int j = 0; j < points; ++j) {
    const double lt = points == 1 ? 0.0 : lo + (hi - lo) * j / (points - 1);
    out.grid_log_t[static_cast<std::size_t>(j)] = lt;
    double cum = 0.0;
    std::size_t g = 0;
    for (std::size_t k = 0; k < n; ++k) {
      cum += a[k] * a[k] / dual_weight(theta, lt, w[k]);
      if (k + 1 == out.m[g]) {
        if (cum > best[g]) {
          best[g] = cum;
          best_at[g] = j;
        }
        ++g;
      }
    }
  }

  // Golden-section refinement between the grid neighbours of each prefix's
  // best point; grid error alone would swamp small increments in m.
  auto refine = [&](int j, std::size_t m, double f_grid) {
    double lt_best = out.grid_log_t[static_cast<std::size_t>(j)], f_best = f_grid;
    if (points == 1) return std::pair{lt_best, f_best};
    const double step = (hi - lo) / (points - 1);
    double x0 = lt_best - step, x3 = lt_best + step;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = x3 - g * (x3 - x0), x2 = x0 + g * (x3 - x0);
    double f1 = dual_objective(a, w, theta, x1, m), f2 = dual_objective(a, w, theta, x2, m);
    for (int it = 0; it < 100 && x3 - x0 > 1e-12; ++it) {
      if (f1 > f2) {
        x3 = x2;
        x2 = x1;
        f2 = f1;
        x1 = x3 - g * (x3 - x0);
        f1 = dual_objective(a, w, theta, x1, m);
      } else {
        x0 = x1;
        x1 = x2;
        f1 = f2;
        x2 = x0 + g * (x3 - x0);
        f2 = dual_objective(a, w, theta, x2, m);
      }
    }
    const double xm = 0.5 * (x0 + x3);
    const double fm = dual_objective(a, w, theta, xm, m);
    if (fm > f_best) {
      f_best = fm;
      lt_best = xm;
    }
    return std::pair{lt_best, f_best};
  };
  double run = 0.0, lt_star = 0.0, f_star = 0.0;
  for (std::size_t g = 0; g < best.size(); ++g) {
    const auto [lt, f] = refine(best_at[g], out.m[g], best[g]);
    run = std::max(run, f);  // prefix suprema are non-decreasing in m
    out.ratio[g] = 2.0 * std::sqrt(run);
    if (out.m[g] == n) {
      lt_star = lt;
      f_star = f;
    }
  }
  out.sup = 2.0 * std::sqrt(f_star);
  out.log_t_star = lt_star;
  out.maximiser.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.maximiser[k] = a[k] / dual_weight(theta, lt_star, w[k]);
  return out;
}

/// Ratio 2<a,u> / (<Wu,u>^{theta/2} ||u||^{1-theta}) in sorted coordinates.
inline double homogeneous_ratio(const std::vector<double>& a, const std::vector<double>& w, double theta,
                                const std::vector<double>& u) {
  double p = 0.0, x2 = 0.0, y2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    p += a[k] * u[k];
    x2 += w[k] * u[k] * u[k];
    y2 += u[k] * u[k];
  }
  p = std::abs(p);
  const double den = std::pow(x2, theta / 2.0) * std::pow(y2, (1.0 - theta) / 2.0);
  if (!(den > 0.0)) return p > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return 2.0 * p / den;
}

/// Deterministic test directions: basis vectors, prefixes of u†, flat
/// prefixes, u† reweighted by sigma powers, the dual maximisers on a coarse
/// t grid, and seeded random vectors.
template <class Visit>
void for_each_test_direction(const Spectrum& s, const HomogeneousSup& hs, const std::vector<double>& w, double theta,
                             const CheckOptions& opt, Visit&& visit) {
  const std::size_t n = s.size();
  std::vector<double> u(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    std::fill(u.begin(), u.end(), 0.0);
    u[k] = 1.0;
    visit(u);
  }
  for (std::size_t m : hs.m) {
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) u[k] = s.a[k];
    visit(u);
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) u[k] = 1.0 / static_cast<double>(m);
    visit(u);
  }
  for (double power : {-2.0, -1.0, 1.0, 2.0}) {
    for (std::size_t k = 0; k < n; ++k) u[k] = s.a[k] * std::pow(s.sigma[k], power);
    visit(u);
  }
  const std::size_t stride = std::max<std::size_t>(1, hs.grid_log_t.size() / 64);
  for (std::size_t j = 0; j < hs.grid_log_t.size(); j += stride) {
    for (std::size_t k = 0; k < n; ++k) u[k] = s.a[k] / dual_weight(theta, hs.grid_log_t[j], w[k]);
    visit(u);
  }
  visit(hs.maximiser);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> expo(-2.0, 2.0);
  for (std::size_t r = 0; r < opt.random_vectors; ++r) {
    const double power = (r % 2 == 0) ? 0.0 : expo(rng);
    for (std::size_t k = 0; k < n; ++k) u[k] = gauss(rng) * (power == 0.0 ? 1.0 : std::pow(s.sigma[k], power));
    visit(u);
  }
}

inline TrendFit sup_trend(const HomogeneousSup& hs, double scale) {
  std::vector<double> x(hs.m.size()), cum(hs.m.size());
  for (std::size_t i = 0; i < hs.m.size(); ++i) {
    x[i] = static_cast<double>(hs.m[i]);
    const double r = hs.ratio[i] / scale;
    cum[i] = r * r;
  }
  std::vector<double> xd, dd;
  cumulative_to_density(x, cum, xd, dd);
  if (xd.empty()) return TrendFit{SeriesTrend::Converging};
  return classify_terms(xd, dd);
}

inline ConditionReport base_report(Condition c, double parameter, const SpectralOperator& op) {
  ConditionReport r;
  r.condition = c;
  r.parameter = parameter;
  r.truncation = static_cast<std::size_t>(op.cols());
  return r;
}

inline void record_trend(ConditionReport& r, const TrendFit& t) {
  r.constants["trend_geometric_drop"] = t.geometric_drop;
  r.constants["trend_power"] = t.power;
  r.constants["trend_window_lo"] = t.window_lo;
  r.constants["trend_window_hi"] = t.window_hi;
}

}  // namespace detail

// -- standard source condition -----------------------------------------------

inline ConditionReport check_standard_sc(const SpectralOperator& op, const CoeffVector& udag, double nu,
                                         const CheckOptions& = {}) {
  if (!(nu > 0.0 && nu <= 2.0)) throw std::invalid_argument("check_standard_sc: nu must lie in (0,2]");
  auto s = detail::spectrum_of(op, udag);
  auto r = detail::base_report(Condition::StandardSC, nu, op);
  r.diagnostics_label = "partial sums S_m = sum_{n<=m} sigma_n^{-2nu} a_n^2";
  if (s.norm == 0.0) {
    r.verdict = Verdict::Certified;
    r.constants["omega_norm"] = 0.0;
    return r;
  }
  if (detail::has_null_component(s)) {
    r.verdict = Verdict::RefutedAtN;
    r.witness = op.domain_null_part(udag).coeffs();
    r.constants["null_component_norm"] = s.null_norm;
    r.note = "u† has a component in the null space of L";
    return r;
  }
  const std::size_t n = s.size();
  std::vector<double> pos(n), terms(n), omega(n);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    omega[k] = s.a[k] * std::pow(s.sigma[k], -nu);
    terms[k] = omega[k] * omega[k];
    pos[k] = static_cast<double>(k + 1);
    sum += terms[k];
    r.diagnostics.push_back({pos[k], sum});
  }
  r.constants["omega_norm"] = std::sqrt(sum);
  r.witness = detail::to_ambient(op, s, omega);
  if (!s.truncated) {
    r.verdict = Verdict::Certified;
    return r;
  }
  const TrendFit t = classify_terms(pos, terms);
  detail::record_trend(r, t);
  switch (t.trend) {
    case SeriesTrend::Converging:
      r.verdict = Verdict::Certified;
      r.constants["tail_estimate"] = t.tail_estimate;
      r.constants["omega_norm_extrapolated"] = std::sqrt(sum + t.tail_estimate);
      break;
    case SeriesTrend::Diverging:
      r.verdict = Verdict::RefutedAtN;
      r.note = "partial sums of ||(L*L)^{-nu/2} u†||^2 grow without bound; witness is the truncated preimage";
      break;
    case SeriesTrend::Undetermined:
      r.verdict = Verdict::Inconclusive;
      r.note = "partial-sum growth undetermined at this truncation";
      break;
  }
  return r;
}

// -- spectral tail --------------------------------------------------------------

inline ConditionReport check_spectral_tail(const SpectralOperator& op, const CoeffVector& udag, double nu,
                                           const CheckOptions& = {}) {
  if (!(nu > 0.0 && nu < 2.0)) throw std::invalid_argument("check_spectral_tail: nu must lie in (0,2)");
  auto r = detail::base_report(Condition::SpectralTail, nu, op);
  r.diagnostics_label = "T(lambda) = ||E_[0,lambda] u†||^2 at the atoms";
  const auto s = detail::spectrum_of(op, udag);
  if (s.norm == 0.0) {
    r.verdict = Verdict::Certified;
    r.constants["C"] = 0.0;
    r.constants["C_hat"] = 0.0;
    return r;
  }
  if (detail::has_null_component(s)) {
    r.verdict = Verdict::RefutedAtN;
    r.witness = op.domain_null_part(udag).coeffs();
    r.constants["null_component_norm"] = s.null_norm;
    r.note = "E_{0} u† != 0: no C satisfies the bound at lambda = 0";
    return r;
  }
  // Mass of u† beyond the truncation, extrapolated from its coefficients;
  // without it T is too small at the bottom atoms.
  double beyond = 0.0;
  if (s.truncated) {
    std::vector<double> pos(s.size()), a2(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      pos[k] = static_cast<double>(k + 1);
      a2[k] = s.a[k] * s.a[k];
    }
    const TrendFit mt = classify_terms(pos, a2);
    if (mt.trend == SeriesTrend::Converging) beyond = mt.tail_estimate;
    r.constants["tail_mass_beyond_N"] = beyond;
  }
  const DiscreteMeasure mu = vector_measure(op, udag, udag);
  const auto& atoms = mu.atoms();
  std::vector<double> lambda, cum, ratio;
  double acc = beyond;
  for (const auto& at : atoms) {
    acc += at.mass;
    lambda.push_back(at.location);
    cum.push_back(acc);
    ratio.push_back(acc / std::pow(at.location, nu));
    r.diagnostics.push_back({at.location, acc});
  }
  const auto arg = static_cast<std::size_t>(std::max_element(ratio.begin(), ratio.end()) - ratio.begin());
  const double c_hat = ratio[arg];
  r.constants["C_hat"] = c_hat;

  // Slope of log T against log lambda over the smallest two decades.
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < lambda.size(); ++k)
    if (lambda[k] <= 100.0 * lambda.front() && cum[k] > 0.0) {
      lx.push_back(lambda[k]);
      ly.push_back(cum[k]);
    }
  double slope = std::numeric_limits<double>::infinity();
  if (lx.size() >= 2) slope = fit_loglog(lx, ly).slope;
  if (std::isfinite(slope)) r.constants["low_slope"] = slope;

  if (!s.truncated) {
    r.verdict = Verdict::Certified;
    r.constants["C"] = std::sqrt(c_hat);
    return r;
  }
  // Growth of the running maximum of T/lambda^nu walking down the spectrum.
  std::vector<double> pos, dens;
  double run = 0.0;
  for (std::size_t j = 0; j < ratio.size(); ++j) {
    const double v = ratio[ratio.size() - 1 - j];
    const double next = std::max(run, v);
    if (j > 0) {
      pos.push_back(static_cast<double>(j + 1));
      const double step = next - run;
      dens.push_back(step <= kCumulativeResolution * next ? 0.0 : step);
    }
    run = next;
  }
  TrendFit t{SeriesTrend::Converging};
  if (!pos.empty()) t = classify_terms(pos, dens);
  detail::record_trend(r, t);
  if (t.trend == SeriesTrend::Diverging) {
    r.verdict = Verdict::RefutedAtN;
    r.note = "T(lambda)/lambda^nu keeps growing towards the bottom of the spectrum";
    // Witness: the spectral projection achieving the largest ratio.
    Vec c = op.domain_spectrum(udag);
    const Vec& sv = op.singular_values();
    for (Eigen::Index k = 0; k < c.size(); ++k)
      if (sv[k] * sv[k] > lambda[arg]) c[k] = 0.0;
    r.witness = op.from_domain_spectrum(c).coeffs();
  } else if (t.trend == SeriesTrend::Converging && slope >= nu - 0.05) {
    r.verdict = Verdict::Certified;
    r.constants["C"] = std::sqrt(c_hat);
  } else {
    r.verdict = Verdict::Inconclusive;
    r.note = "tail growth or low-spectrum slope undetermined at this truncation";
  }
  return r;
}

// -- homogeneous variational inequalities -----------------------------------

namespace detail {

/// Shared body of check_hvi / check_svi. `power` is 1 for HVI (W = L*L) and 2
/// for SVI (W = (L*L)^2); theta is the exponent on <Wu,u>^{1/2}.
inline ConditionReport check_homogeneous(Condition cond, const SpectralOperator& op, const CoeffVector& udag,
                                         double nu, double theta, int power, double rho,
                                         const CheckOptions& opt) {
  auto r = base_report(cond, nu, op);
  r.diagnostics_label = "sup ratio over the first m singular directions";
  const auto s = spectrum_of(op, udag);
  if (s.norm == 0.0) {
    r.verdict = Verdict::Certified;
    r.constants["beta"] = 0.0;
    r.constants["inner_constant"] = 0.0;
    return r;
  }
  if (has_null_component(s)) {
    r.verdict = Verdict::RefutedAtN;
    r.witness = op.domain_null_part(udag).coeffs();
    r.constants["null_component_norm"] = s.null_norm;
    r.note = "u† has a null-space component: the ratio is unbounded along it";
    return r;
  }
  std::vector<double> w(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) w[k] = std::pow(s.sigma[k], 2.0 * power);

  const HomogeneousSup hs = homogeneous_sup(s.a, w, theta, opt);
  double lower = 0.0;
  std::vector<double> arg;
  for_each_test_direction(s, hs, w, theta, opt, [&](const std::vector<double>& u) {
    const double q = homogeneous_ratio(s.a, w, theta, u);
    if (q > lower) {
      lower = q;
      arg = u;
    }
  });
  const double sup = std::max(hs.sup, lower);
  for (std::size_t g = 0; g < hs.m.size(); ++g)
    r.diagnostics.push_back({static_cast<double>(hs.m[g]), hs.ratio[g]});
  r.constants["beta_lower"] = lower;
  r.constants["beta_sup"] = hs.sup;
  r.witness = to_ambient(op, s, arg);

  std::optional<double> upper;
  if (nu < rho) {
    const auto tail = check_spectral_tail(op, udag, nu, opt);
    if (tail.verdict == Verdict::Certified) {
      upper = scr_to_vi_certificate(tail.constant("C"), nu, rho);
      r.constants["beta_upper"] = *upper;
      r.constants["tail_C"] = tail.constant("C");
    }
  }

  auto certify = [&] {
    r.verdict = Verdict::Certified;
    r.constants["beta"] = sup * (1.0 + opt.beta_inflation);
    r.constants["inner_constant"] = r.constants["beta"] / 2.0;
  };
  if (!s.truncated) {
    certify();
    return r;
  }
  const TrendFit t = sup_trend(hs, 1.0);
  record_trend(r, t);
  switch (t.trend) {
    case SeriesTrend::Converging:
      certify();
      r.constants["beta_extrapolated"] = 2.0 * std::sqrt(sup * sup / 4.0 + t.tail_estimate / 4.0);
      break;
    case SeriesTrend::Diverging:
      if (upper) {
        r.verdict = Verdict::Inconclusive;
        r.note = "supremum grows with N although the spectral tail is certified";
      } else {
        r.verdict = Verdict::RefutedAtN;
        r.constants["witness_ratio"] = lower;
        r.note = "supremum over the first m directions grows without bound";
      }
      break;
    case SeriesTrend::Undetermined:
      if (upper) {
        certify();
        r.note = "growth undetermined; certified through the spectral-tail bound";
      } else {
        r.verdict = Verdict::Inconclusive;
        r.note = "growth of the supremum undetermined at this truncation";
      }
      break;
  }
  return r;
}

inline ConditionReport verify_homogeneous(Condition cond, const SpectralOperator& op, const CoeffVector& udag,
                                          double nu, double theta, int power, double beta, const CheckOptions& opt) {
  auto r = base_report(cond, nu, op);
  r.diagnostics_label = "sup ratio / beta over the first m singular directions";
  r.constants["beta"] = beta;
  const auto s = spectrum_of(op, udag);
  if (s.norm == 0.0) {
    r.verdict = Verdict::Certified;
    return r;
  }
  if (has_null_component(s)) {
    r.verdict = Verdict::RefutedAtN;
    r.witness = op.domain_null_part(udag).coeffs();
    return r;
  }
  std::vector<double> w(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) w[k] = std::pow(s.sigma[k], 2.0 * power);
  const HomogeneousSup hs = homogeneous_sup(s.a, w, theta, opt);
  double worst = hs.sup;
  std::vector<double> arg = hs.maximiser;
  for_each_test_direction(s, hs, w, theta, opt, [&](const std::vector<double>& u) {
    const double q = homogeneous_ratio(s.a, w, theta, u);
    if (q > worst) {
      worst = q;
      arg = u;
    }
  });
  r.constants["max_ratio"] = worst;
  for (std::size_t g = 0; g < hs.m.size(); ++g)
    r.diagnostics.push_back({static_cast<double>(hs.m[g]), beta > 0.0 ? hs.ratio[g] / beta : hs.ratio[g]});
  if (worst > beta * (1.0 + opt.violation_rel_tol)) {
    r.verdict = Verdict::RefutedAtN;
    r.witness = to_ambient(op, s, arg);
    return r;
  }
  if (!s.truncated) {
    r.verdict = Verdict::Certified;
    return r;
  }
  const TrendFit t = sup_trend(hs, beta);
  record_trend(r, t);
  switch (t.trend) {
    case SeriesTrend::Converging: {
      // (R/beta)^2 extrapolated past N must stay below 1.
      const double q = worst / beta;
      const double extrapolated = std::sqrt(q * q + t.tail_estimate);
      r.constants["max_ratio_extrapolated"] = extrapolated * beta;
      if (extrapolated <= 1.0 + opt.violation_rel_tol) {
        r.verdict = Verdict::Certified;
      } else {
        r.verdict = Verdict::Inconclusive;
        r.note = "extrapolated supremum exceeds beta beyond the truncation";
      }
      break;
    }
    case SeriesTrend::Diverging:
      r.verdict = Verdict::RefutedAtN;
      r.note = "ratio grows with N; beta is exceeded beyond the truncation";
      break;
    case SeriesTrend::Undetermined: r.verdict = Verdict::Inconclusive; break;
  }
  return r;
}

}  // namespace detail

/// HVI(nu): computes the truncated supremum of 2<u†,u>/(||Lu||^nu ||u||^{1-nu})
/// and classifies its growth in N. `beta` is the inflated supremum,
/// `inner_constant` = beta/2 is the constant in <u†,u> <= K ||Lu||^nu ||u||^{1-nu},
/// `beta_upper` the spectral-tail bound when that check certifies.
inline ConditionReport check_hvi(const SpectralOperator& op, const CoeffVector& udag, double nu,
                                 const CheckOptions& opt = {}) {
  if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("check_hvi: nu must lie in (0,1]");
  return detail::check_homogeneous(Condition::HVI, op, udag, nu, nu, 1, 1.0, opt);
}

inline ConditionReport check_svi(const SpectralOperator& op, const CoeffVector& udag, double nu,
                                 const CheckOptions& opt = {}) {
  if (!(nu > 0.0 && nu <= 2.0)) throw std::invalid_argument("check_svi: nu must lie in (0,2]");
  return detail::check_homogeneous(Condition::SVI, op, udag, nu, nu / 2.0, 2, 2.0, opt);
}

/// Verifies HVI(nu) for a supplied beta on the test family and the exact
/// truncated supremum.
inline ConditionReport verify_hvi(const SpectralOperator& op, const CoeffVector& udag, double nu, double beta,
                                  const CheckOptions& opt = {}) {
  if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("verify_hvi: nu must lie in (0,1]");
  if (!(beta >= 0.0)) throw std::invalid_argument("verify_hvi: beta must be >= 0");
  return detail::verify_homogeneous(Condition::HVI, op, udag, nu, nu, 1, beta, opt);
}

inline ConditionReport verify_svi(const SpectralOperator& op, const CoeffVector& udag, double nu, double beta,
                                  const CheckOptions& opt = {}) {
  if (!(nu > 0.0 && nu <= 2.0)) throw std::invalid_argument("verify_svi: nu must lie in (0,2]");
  if (!(beta >= 0.0)) throw std::invalid_argument("verify_svi: beta must be >= 0");
  return detail::verify_homogeneous(Condition::SVI, op, udag, nu, nu / 2.0, 2, beta, opt);
}

// -- inhomogeneous variational inequality -----------------------------------

/// IVI(mu) with supplied constants. Every test direction is probed along a
/// logarithmic grid of scalings t*u (the inequality is not homogeneous) and
/// at the optimal scaling; the small-t end reproduces the homogenised limit.
inline ConditionReport check_ivi(const SpectralOperator& op, const CoeffVector& udag, double mu, double beta,
                                 double gamma, const CheckOptions& opt = {}) {
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("check_ivi: mu must lie in (0,1]");
  if (!(beta >= 0.0)) throw std::invalid_argument("check_ivi: beta must be >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("check_ivi: gamma must lie in [0,1)");
  auto r = detail::base_report(Condition::IVI, mu, op);
  r.diagnostics_label = "sup over scalings of 2<u†,u>/(beta||Lu||^mu + gamma||u||^2), first m directions";
  r.constants["mu"] = mu;
  r.constants["beta"] = beta;
  r.constants["gamma"] = gamma;
  const auto s = detail::spectrum_of(op, udag);
  if (s.norm == 0.0) {
    r.verdict = Verdict::Certified;
    return r;
  }
  if (detail::has_null_component(s)) {
    r.verdict = Verdict::RefutedAtN;
    r.witness = op.domain_null_part(udag).coeffs() * 1e-6;
    r.note = "u† has a null-space component; small multiples of it violate the inequality";
    return r;
  }
  const double theta = ivi_equivalent_exponent(mu);
  const double c = ivi_equivalent_constant(mu, beta, gamma);
  r.constants["equivalent_exponent"] = theta;
  r.constants["equivalent_constant"] = c;

  std::vector<double> w(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) w[k] = s.sigma[k] * s.sigma[k];
  const detail::HomogeneousSup hs = detail::homogeneous_sup(s.a, w, theta, opt);

  // Raw evaluation on scaled directions.
  double max_ratio = 0.0;
  double worst_margin = -std::numeric_limits<double>::infinity();
  std::vector<double> witness;
  double witness_scale = 1.0;
  bool violated = false;
  auto probe = [&](const std::vector<double>& u) {
    double p = 0.0, x2 = 0.0, y2 = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      p += s.a[k] * u[k];
      x2 += w[k] * u[k] * u[k];
      y2 += u[k] * u[k];
    }
    if (y2 == 0.0) return;
    const double sign = p < 0.0 ? -1.0 : 1.0;
    p = std::abs(p);
    const double x = std::sqrt(x2);
    double s_ref;
    if (beta > 0.0 && gamma > 0.0 && x > 0.0)
      s_ref = std::pow(beta * std::pow(x, mu) / (gamma * y2), 1.0 / (2.0 - mu));
    else if (gamma > 0.0 && p > 0.0)
      s_ref = p / (gamma * y2);
    else
      s_ref = 1.0 / std::sqrt(y2);
    auto eval = [&](double sc) {
      const double rhs = beta * std::pow(sc * x, mu) + gamma * sc * sc * y2;
      const double lhs = 2.0 * sc * p;
      const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      const double margin = rhs > 0.0 ? (lhs - rhs) / rhs : (lhs > 0.0 ? 1.0 : 0.0);
      if (ratio > max_ratio) max_ratio = ratio;
      if (margin > worst_margin) {
        worst_margin = margin;
        if (margin > opt.violation_rel_tol) {
          violated = true;
          witness = u;
          witness_scale = sign * sc;
        }
      }
    };
    for (int k = -24; k <= 8; ++k) eval(s_ref * std::pow(10.0, 0.5 * k));
    if (mu < 1.0 && beta > 0.0 && gamma > 0.0 && x > 0.0)
      eval(std::pow(beta * (1.0 - mu) * std::pow(x, mu) / (gamma * y2), 1.0 / (2.0 - mu)));
  };
  detail::for_each_test_direction(s, hs, w, theta, opt, probe);
  r.constants["max_ratio"] = max_ratio;
  r.constants["sup_ratio"] = c > 0.0 ? hs.sup / c : std::numeric_limits<double>::max();
  for (std::size_t g = 0; g < hs.m.size(); ++g)
    r.diagnostics.push_back({static_cast<double>(hs.m[g]), c > 0.0 ? hs.ratio[g] / c : hs.ratio[g]});

  if (violated) {
    r.verdict = Verdict::RefutedAtN;
    std::vector<double> scaled = witness;
    for (auto& v : scaled) v *= witness_scale;
    r.witness = detail::to_ambient(op, s, scaled);
    r.constants["violation_margin"] = worst_margin;
    r.note = "inequality violated on a scaled test direction";
    return r;
  }
  if (!s.truncated) {
    r.verdict = Verdict::Certified;
    return r;
  }
  const TrendFit t = detail::sup_trend(hs, c);
  detail::record_trend(r, t);
  switch (t.trend) {
    case SeriesTrend::Converging: {
      const double q = c > 0.0 ? hs.sup / c : 0.0;
      const double extrapolated = std::sqrt(q * q + t.tail_estimate);
      r.constants["sup_ratio_extrapolated"] = extrapolated;
      if (extrapolated <= 1.0 + opt.violation_rel_tol) {
        r.verdict = Verdict::Certified;
      } else {
        r.verdict = Verdict::Inconclusive;
        r.note = "extrapolated supremum exceeds the constants beyond the truncation";
      }
      break;
    }
    case SeriesTrend::Diverging:
      r.verdict = Verdict::RefutedAtN;
      r.witness = detail::to_ambient(op, s, hs.maximiser);
      r.note = "violation ratio grows without bound in N; the constants fail beyond the truncation";
      break;
    case SeriesTrend::Undetermined:
      r.verdict = Verdict::Inconclusive;
      r.note = "growth of the violation ratio undetermined at this truncation";
      break;
  }
  return r;
}

}  // namespace tikreg
