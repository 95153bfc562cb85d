#pragma once

// Empirical convergence orders of Tikhonov regularization: error against
// alpha for exact data, and worst error over a noise family against delta
// under the choice alpha = delta^{2-mu}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tikreg/growth.hpp"
#include "tikreg/tikhonov.hpp"

namespace tikreg {

struct RateRecord {
  double x = 0.0;  // alpha (noise-free) or delta (noisy)
  double error = 0.0;
  double alpha_used = 0.0;
  long trial_witness_index = -1;  // trial or basis direction attaining the max; -1 without noise
};

struct RateFit {
  std::vector<RateRecord> records;
  double slope = 0.0;
  double intercept = 0.0;  // log C in error ~ C x^slope
  double max_residual = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  bool clipped = false;  // some grid points lay below the truncation floor
  std::string note;

  std::vector<std::pair<double, double>> grid() const {
    std::vector<std::pair<double, double>> g;
    for (const auto& r : records) g.emplace_back(r.x, r.error);
    return g;
  }
};

enum class NoiseKind { InRange, WorstCaseBasis, RandomSphere };

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::InRange: return "InRange";
    case NoiseKind::WorstCaseBasis: return "WorstCaseBasis";
    case NoiseKind::RandomSphere: return "RandomSphere";
  }
  return "?";
}

struct NoiseModel {
  NoiseKind kind = NoiseKind::WorstCaseBasis;
  std::uint64_t seed = 20240611;
  bool projectQ = false;
};

inline int default_trials(const NoiseModel& m) { return m.kind == NoiseKind::WorstCaseBasis ? 1 : 32; }

/// `per_decade` points per decade from lo to hi, endpoints included.
inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0) || !(hi > lo) || per_decade < 1) throw DegenerateGrid("log_grid: need 0 < lo < hi, per_decade >= 1");
  const double decades = std::log10(hi / lo);
  const int steps = std::max(1, static_cast<int>(std::lround(decades * per_decade)));
  std::vector<double> g(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) g[static_cast<std::size_t>(i)] = lo * std::pow(10.0, decades * i / steps);
  g.back() = hi;
  return g;
}

/// Random perturbation with ||e|| = delta. InRange draws inside the retained
/// range, RandomSphere in the whole codomain; projectQ removes the part
/// outside the retained range before normalising.
inline CoeffVector make_noise(const SpectralOperator& op, const NoiseModel& model, double delta, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  if (delta == 0.0) return op.zero_codomain();
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vec e;
    if (model.kind == NoiseKind::RandomSphere) {
      e = Vec(op.rows());
      for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = g(rng);
    } else {
      Vec c(op.rank());
      for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = g(rng);
      e = op.from_codomain_spectrum(c).coeffs();
    }
    CoeffVector v = op.codomain_vector(std::move(e));
    if (model.projectQ) v = v - op.codomain_null_part(v);
    const double n = v.norm();
    if (n > 0.0) return v * (delta / n);
  }
  throw std::runtime_error("make_noise: could not draw a non-zero direction");
}

namespace detail {

inline void check_span(const std::vector<double>& grid, double decades, const char* what) {
  if (grid.size() < 3) throw DegenerateGrid(std::string(what) + ": grid needs >= 3 points");
  for (double v : grid)
    if (!(v > 0.0) || !std::isfinite(v)) throw DegenerateGrid(std::string(what) + ": grid values must be > 0");
  const auto [mn, mx] = std::minmax_element(grid.begin(), grid.end());
  if (std::log10(*mx / *mn) < decades - 1e-9)
    throw DegenerateGrid(std::string(what) + ": grid must span at least " + std::to_string(int(decades)) +
                         " decades");
}

/// Largest contiguous window (>= 3 points, all above `floor` in alpha) whose
/// log-log fit has max residual <= 0.1; ties go to the smaller residual.
inline void fit_window(RateFit& fit, double alpha_floor) {
  auto& rec = fit.records;
  std::sort(rec.begin(), rec.end(), [](const RateRecord& a, const RateRecord& b) { return a.x < b.x; });
  const std::size_t n = rec.size();
  std::size_t first = 0;
  while (first < n && rec[first].alpha_used < alpha_floor) ++first;
  fit.clipped = first > 0;
  std::size_t best_len = 0;
  LineFit best{};
  std::size_t best_i = 0;
  for (std::size_t i = first; i < n; ++i) {
    std::vector<double> lx, ly;
    for (std::size_t j = i; j < n; ++j) {
      if (!(rec[j].error > 0.0)) break;
      lx.push_back(std::log(rec[j].x));
      ly.push_back(std::log(rec[j].error));
      if (lx.size() < 3) continue;
      const LineFit f = fit_line(lx, ly);
      if (f.max_residual > 0.1) continue;
      if (lx.size() > best_len || (lx.size() == best_len && f.max_residual < best.max_residual)) {
        best_len = lx.size();
        best = f;
        best_i = i;
      }
    }
  }
  if (best_len == 0) throw DegenerateGrid("rate fit: no window of >= 3 positive errors fits a power law");
  fit.slope = best.slope;
  fit.intercept = best.intercept;
  fit.max_residual = best.max_residual;
  fit.window_lo = rec[best_i].x;
  fit.window_hi = rec[best_i + best_len - 1].x;
}

inline double truncation_floor(const SpectralOperator& op) {
  if (!op.models_truncation()) return 0.0;
  const double s = op.sigma_min();
  return 10.0 * s * s;
}

/// Spectral coordinates of u_alpha - u† for exact data.
inline Vec spectral_bias(const SpectralOperator& op, const Vec& cy, double alpha) {
  const Vec& s = op.singular_values();
  Vec b(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) b[k] = -alpha * cy[k] / (s[k] * (alpha + s[k] * s[k]));
  return b;
}

/// max over basis directions k and signs of ||u_alpha(y + s delta w_k) - u†||:
/// the rank-one update ||b||^2 + 2 delta f_k |b_k| + delta^2 f_k^2 with
/// f_k = sigma_k / (alpha + sigma_k^2).
inline std::pair<double, long> worst_basis_error(const SpectralOperator& op, const Vec& b, double alpha,
                                                 double delta) {
  const Vec& s = op.singular_values();
  const double b2 = b.squaredNorm();
  double best = b2;
  long arg = -1;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    const double f = s[k] / (alpha + s[k] * s[k]);
    const double e2 = b2 + 2.0 * delta * f * std::abs(b[k]) + delta * delta * f * f;
    if (e2 > best) {
      best = e2;
      arg = static_cast<long>(k);
    }
  }
  return {std::sqrt(best), arg};
}

}  // namespace detail

/// Noise-free errors ||u_alpha - u†|| on a log grid spanning >= 4 decades.
inline RateFit noise_free_rate(const SpectralOperator& op, const CoeffVector& y, std::vector<double> alpha_grid) {
  detail::check_span(alpha_grid, 4.0, "noise_free_rate");
  const CoeffVector udag = min_norm_solution(op, y);
  RateFit fit;
  for (double a : alpha_grid) {
    const auto sol = solve(op, y, a);
    fit.records.push_back({a, (sol.solution - udag).norm(), a, -1});
  }
  detail::fit_window(fit, detail::truncation_floor(op));
  return fit;
}

/// Worst error over the noise family at alpha = delta^{2-mu}, on a grid
/// spanning >= 3 decades. The family under-approximates the delta-ball.
inline RateFit noisy_rate(const SpectralOperator& op, const CoeffVector& y, std::vector<double> delta_grid, double mu,
                          const NoiseModel& noise, int trials = 0) {
  detail::check_span(delta_grid, 3.0, "noisy_rate");
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("noisy_rate: mu must lie in (0,1]");
  if (trials <= 0) trials = default_trials(noise);
  const CoeffVector udag = min_norm_solution(op, y);
  const Vec cy = op.codomain_spectrum(y);
  RateFit fit;
  fit.note = std::string("max over ") + to_string(noise.kind) +
             " noise trials; a finite family under-approximates the sup over the delta-ball";
  for (std::size_t i = 0; i < delta_grid.size(); ++i) {
    const double d = delta_grid[i];
    const double a = std::pow(d, 2.0 - mu);
    RateRecord rec{d, 0.0, a, -1};
    if (noise.kind == NoiseKind::WorstCaseBasis) {
      const auto [e, k] = detail::worst_basis_error(op, detail::spectral_bias(op, cy, a), a, d);
      rec.error = e;
      rec.trial_witness_index = k;
    } else {
      std::mt19937_64 rng(noise.seed + 7919 * i);
      for (int t = 0; t < trials; ++t) {
        const CoeffVector e = make_noise(op, noise, d, rng);
        const double err = (solve(op, y + e, a).solution - udag).norm();
        if (err > rec.error) {
          rec.error = err;
          rec.trial_witness_index = t;
        }
      }
    }
    fit.records.push_back(rec);
  }
  detail::fit_window(fit, detail::truncation_floor(op));
  return fit;
}

/// max over the noise family of min over alpha_grid of the error at one delta.
inline double infimum_rate(const SpectralOperator& op, const CoeffVector& y, double delta, const NoiseModel& noise,
                           const std::vector<double>& alpha_grid, int trials = 0) {
  if (alpha_grid.empty()) throw DegenerateGrid("infimum_rate: empty alpha grid");
  if (!(delta >= 0.0)) throw std::invalid_argument("infimum_rate: delta must be >= 0");
  if (trials <= 0) trials = default_trials(noise);
  const CoeffVector udag = min_norm_solution(op, y);
  const Vec cy = op.codomain_spectrum(y);
  std::vector<Vec> bias;
  for (double a : alpha_grid) bias.push_back(detail::spectral_bias(op, cy, a));
  if (delta == 0.0) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : bias) best = std::min(best, b.norm());
    return best;
  }
  double worst = 0.0;
  if (noise.kind == NoiseKind::WorstCaseBasis) {
    const Vec& s = op.singular_values();
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      for (double sign : {-1.0, 1.0}) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < alpha_grid.size(); ++j) {
          const double f = s[k] / (alpha_grid[j] + s[k] * s[k]);
          const double e2 = bias[j].squaredNorm() + 2.0 * sign * delta * f * bias[j][k] + delta * delta * f * f;
          best = std::min(best, std::sqrt(std::max(e2, 0.0)));
        }
        worst = std::max(worst, best);
      }
    }
    return worst;
  }
  std::mt19937_64 rng(noise.seed);
  for (int t = 0; t < trials; ++t) {
    const CoeffVector e = make_noise(op, noise, delta, rng);
    double best = std::numeric_limits<double>::infinity();
    for (double a : alpha_grid) best = std::min(best, (solve(op, y + e, a).solution - udag).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

struct QProjectionResult {
  bool equivalent = false;
  double max_difference = 0.0;         // filter-factor path, over the alpha grid
  double max_normal_difference = 0.0;  // normal-equation path; rounding grows like eps ||L|| ||e|| / alpha
  double in_range_norm = 0.0;          // ||e - (I - Q) e||: 0 for a genuinely off-range e
};

/// u_alpha(y + e) = u_alpha(y) for e orthogonal to the retained range:
/// `equivalent` iff the filter-factor solutions differ by at most `tol` at
/// every alpha. The normal-equation difference is reported alongside. A
/// perturbation with an in-range part is reported, not rejected.
inline QProjectionResult q_projection_equivalence(const SpectralOperator& op, const CoeffVector& y,
                                                  const CoeffVector& e_offrange, const std::vector<double>& alpha_grid,
                                                  double tol = 1e-10) {
  if (alpha_grid.empty()) throw DegenerateGrid("q_projection_equivalence: empty alpha grid");
  QProjectionResult out;
  out.in_range_norm = (e_offrange - op.codomain_null_part(e_offrange)).norm();
  const CoeffVector yt = y + e_offrange;
  for (double a : alpha_grid) {
    const double d1 = (solve(op, yt, a).solution - solve(op, y, a).solution).norm();
    const double d2 = (solve_normal_equations(op, yt, a).solution - solve_normal_equations(op, y, a).solution).norm();
    out.max_difference = std::max(out.max_difference, d1);
    out.max_normal_difference = std::max(out.max_normal_difference, d2);
  }
  out.equivalent = out.max_difference <= tol;
  return out;
}

}  // namespace tikreg
