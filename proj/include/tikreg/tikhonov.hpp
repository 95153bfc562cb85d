#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "tikreg/spectral_core.hpp"

namespace tikreg {

/// Relative threshold below which mass outside the retained range is
/// treated as rounding.
inline constexpr double kRangeTolerance = 1e-13;

struct TikhonovSolve {
  double alpha = 0.0;
  CoeffVector solution;
  double residual_norm = 0.0;  // ||L u_alpha - y~||
  double solution_norm = 0.0;
};

/// u† = L^+ y. Mass of y outside the retained range above
/// kRangeTolerance * ||y|| is rejected.
inline CoeffVector min_norm_solution(const SpectralOperator& op, const CoeffVector& y) {
  op.require(y, Space::Codomain);
  const double off = op.codomain_null_part(y).norm();
  const double scale = y.norm();
  if (off > kRangeTolerance * scale) {
    std::ostringstream msg;
    msg << "min_norm_solution: data not in range (off-range norm " << off << ", ||y|| " << scale << ")";
    throw DataNotInRange(msg.str());
  }
  if (off > 64 * std::numeric_limits<double>::epsilon() * scale) {
    std::ostringstream msg;
    msg << "min_norm_solution: ignoring off-range mass " << off << " (relative " << off / scale << ")";
    warn(msg.str());
  }
  const Vec c = op.codomain_spectrum(y);
  return op.from_domain_spectrum(c.cwiseQuotient(op.singular_values()));
}

namespace detail {
inline TikhonovSolve finish_solve(const SpectralOperator& op, const CoeffVector& ytilde, double alpha,
                                  CoeffVector u) {
  TikhonovSolve out;
  out.alpha = alpha;
  out.residual_norm = (apply(op, u) - ytilde).norm();
  out.solution_norm = u.norm();
  out.solution = std::move(u);
  return out;
}

inline void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("Tikhonov: alpha must be > 0");
}
}  // namespace detail

/// Minimiser of ||Lu - y~||^2 + alpha ||u||^2 through the filter factors
/// sigma / (alpha + sigma^2). One singular system serves every alpha.
inline TikhonovSolve solve(const SpectralOperator& op, const CoeffVector& ytilde, double alpha) {
  detail::require_alpha(alpha);
  const Vec c = op.codomain_spectrum(ytilde);
  const Vec& s = op.singular_values();
  Vec u(c.size());
  for (Eigen::Index k = 0; k < c.size(); ++k) u[k] = s[k] * c[k] / (alpha + s[k] * s[k]);
  return detail::finish_solve(op, ytilde, alpha, op.from_domain_spectrum(u));
}

/// Same minimiser from a Cholesky factorisation of alpha I + A^T A built from
/// the stored matrix. Independent of the singular system.
inline TikhonovSolve solve_normal_equations(const SpectralOperator& op, const CoeffVector& ytilde, double alpha) {
  detail::require_alpha(alpha);
  op.require(ytilde, Space::Codomain);
  const Mat a = op.matrix();
  Mat normal = a.transpose() * a;
  normal.diagonal().array() += alpha;
  const Vec rhs = a.transpose() * ytilde.coeffs();
  Vec u = normal.llt().solve(rhs);
  return detail::finish_solve(op, ytilde, alpha, op.domain_vector(std::move(u)));
}

/// ||(alpha I + L*L) u - L* y~|| / ||L* y~||, evaluated with the stored matrix.
inline double normal_equation_residual(const SpectralOperator& op, const CoeffVector& ytilde,
                                       const TikhonovSolve& sol) {
  const Mat a = op.matrix();
  const Vec& u = sol.solution.coeffs();
  const Vec rhs = a.transpose() * ytilde.coeffs();
  const Vec lhs = a.transpose() * (a * u) + sol.alpha * u;
  const double scale = rhs.norm();
  return scale > 0.0 ? (lhs - rhs).norm() / scale : (lhs - rhs).norm();
}

struct ErrorBoundInputs {
  double mu = 1.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double alpha = 1.0;
};

struct ErrorBoundReport {
  double mu = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  double lhs = 0.0;  // ||u_alpha^delta - u†||^2
  double rhs = 0.0;
  bool holds = false;
  std::string note;
};

/// 2/(1-gamma) delta^2/alpha + beta^{2/(2-mu)} (2-mu)/(2(1-gamma)) alpha^{mu/(2-mu)}.
inline double error_bound_value(double mu, double beta, double gamma, double delta, double alpha) {
  const double noise = 2.0 / (1.0 - gamma) * delta * delta / alpha;
  const double approx = std::pow(beta, 2.0 / (2.0 - mu)) * (2.0 - mu) / (2.0 * (1.0 - gamma)) *
                        std::pow(alpha, mu / (2.0 - mu));
  return noise + approx;
}

/// Squared reconstruction error against the a-priori bound for a verified
/// inhomogeneous certificate (mu, beta, gamma).
inline ErrorBoundReport error_bound(const ErrorBoundInputs& in, const SpectralOperator& op, const CoeffVector& y,
                                    const CoeffVector& ydelta) {
  if (!(in.mu > 0.0 && in.mu <= 1.0)) throw std::invalid_argument("error_bound: mu must lie in (0,1]");
  if (!(in.beta >= 0.0)) throw std::invalid_argument("error_bound: beta must be >= 0");
  if (!(in.gamma >= 0.0 && in.gamma < 1.0)) throw std::invalid_argument("error_bound: gamma must lie in [0,1)");
  if (!(in.delta >= 0.0)) throw std::invalid_argument("error_bound: delta must be >= 0");
  detail::require_alpha(in.alpha);
  const double dist = (ydelta - y).norm();
  // Forming y + e in floating point perturbs it by a few ulps of |y|.
  const double ulps = 8.0 * std::numeric_limits<double>::epsilon() * std::max(y.norm(), ydelta.norm());
  if (dist > in.delta * (1.0 + 1e-12) + ulps + 1e-300)
    throw std::invalid_argument("error_bound: ||ydelta - y|| exceeds delta");

  ErrorBoundReport r;
  r.mu = in.mu;
  r.beta = in.beta;
  r.gamma = in.gamma;
  r.delta = in.delta;
  r.alpha = in.alpha;
  const CoeffVector udag = min_norm_solution(op, y);
  const CoeffVector ua = solve(op, ydelta, in.alpha).solution;
  const double e = (ua - udag).norm();
  r.lhs = e * e;
  r.rhs = error_bound_value(in.mu, in.beta, in.gamma, in.delta, in.alpha);
  r.holds = r.lhs <= r.rhs + 1e-12;
  if (in.gamma == 0.0) r.note = "gamma = 0 accepted; the bound is stated for gamma in (0,1) but holds at 0";
  return r;
}

}  // namespace tikreg
