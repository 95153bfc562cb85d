#pragma once

// Least-squares helpers and the finite-N classifier that decides whether a
// non-negative series looks summable from its last decade of terms.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace tikreg {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_line: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i)
    f.max_residual = std::max(f.max_residual, std::abs(y[i] - (f.slope * x[i] + f.intercept)));
  return f;
}

/// Slope of log y against log x.
inline LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("fit_loglog: values must be > 0");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

enum class SeriesTrend { Converging, Diverging, Undetermined };

struct TrendFit {
  SeriesTrend trend = SeriesTrend::Undetermined;
  double geometric_drop = 0.0;  // fitted log-decay across the window from the exp(b n) factor
  double power = 0.0;           // exponent p of the n^p factor
  double tail_estimate = 0.0;   // model extrapolation of the remaining sum (Converging only)
  double window_lo = 0.0;
  double window_hi = 0.0;
};

/// Classifies sum_n d(n) from samples of the term density d at increasing
/// positions x >= 1.
///
/// The right envelope of d over the last decade of x is fitted by
/// log d = a + b x + p log x. A visible exponential drop (|b| * width >= 1)
/// decides directly; otherwise the power p decides, with p <= -1.2 summable
/// and p >= -1.05 not. Everything in between is Undetermined at this N.
inline TrendFit classify_terms(std::span<const double> x, std::span<const double> density) {
  if (x.size() != density.size() || x.empty()) throw std::invalid_argument("classify_terms: bad input");
  const std::size_t n = x.size();
  std::vector<double> env(n);
  double run = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    run = std::max(run, std::max(density[i], 0.0));
    env[i] = run;
  }
  std::size_t lo = n;
  while (lo > 0 && x[lo - 1] >= x.back() / 10.0) --lo;
  if (n - lo < 8) lo = n >= 8 ? n - 8 : 0;

  TrendFit out;
  out.window_lo = x[lo];
  out.window_hi = x.back();
  // The envelope is non-increasing; trailing zeros are either finite support
  // or terms lost at the truncation edge, so only the positive part is fitted.
  std::size_t hi = n;
  while (hi > lo && env[hi - 1] == 0.0) --hi;
  const std::size_t m = hi - lo;
  // Isolated positive terms among zeros (rounding or extrapolation blips) set
  // the envelope without being evidence of growth.
  std::size_t positive = 0;
  for (std::size_t i = lo; i < n; ++i)
    if (density[i] > 0.0) ++positive;
  if (m < 4 || 4 * m < n - lo || 4 * positive < n - lo) {
    out.trend = SeriesTrend::Converging;
    return out;
  }
  out.window_hi = x[hi - 1];

  Eigen::MatrixXd a(static_cast<Eigen::Index>(m), 3);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const double xi = x[lo + i];
    a(static_cast<Eigen::Index>(i), 0) = 1.0;
    a(static_cast<Eigen::Index>(i), 1) = xi;
    a(static_cast<Eigen::Index>(i), 2) = std::log(xi);
    rhs[static_cast<Eigen::Index>(i)] = std::log(env[lo + i]);
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(rhs);
  const double width = x[hi - 1] - x[lo];
  out.geometric_drop = c[1] * width;
  out.power = c[2];

  auto model_tail = [&](double a0, double b, double p) {
    // Integral of exp(a0 + b t) t^p beyond the last sample, by summation on
    // unit steps until the terms are negligible.
    double s = 0.0;
    double t = x[hi - 1] + 1.0;
    for (int it = 0; it < 1000000; ++it, t += 1.0) {
      const double term = std::exp(a0 + b * t + p * std::log(t));
      s += term;
      if (term <= 1e-17 * s) break;
    }
    return s;
  };

  if (out.geometric_drop <= -1.0) {
    out.trend = SeriesTrend::Converging;
    out.tail_estimate = model_tail(c[0], c[1], c[2]);
    return out;
  }
  if (out.geometric_drop >= 1.0) {
    out.trend = SeriesTrend::Diverging;
    return out;
  }
  std::vector<double> xs(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi));
  std::vector<double> es(env.begin() + static_cast<std::ptrdiff_t>(lo), env.begin() + static_cast<std::ptrdiff_t>(hi));
  const LineFit pf = fit_loglog(xs, es);
  out.power = pf.slope;
  if (pf.slope <= -1.2) {
    out.trend = SeriesTrend::Converging;
    out.tail_estimate = std::exp(pf.intercept) * std::pow(x[hi - 1], pf.slope + 1.0) / (-pf.slope - 1.0);
  } else if (pf.slope >= -1.05 && out.geometric_drop > -0.25) {
    out.trend = SeriesTrend::Diverging;
  }
  return out;
}

/// Term densities of a cumulative quantity sampled at increasing positions:
/// (S(x_i) - S(x_{i-1})) / (x_i - x_{i-1}), reported at x_i.
/// Relative resolution of the cumulative quantities fed to the classifier
/// (refined suprema, extrapolated tails); smaller increments are noise.
inline constexpr double kCumulativeResolution = 1e-12;

inline void cumulative_to_density(std::span<const double> x, std::span<const double> cumulative,
                                  std::vector<double>& x_out, std::vector<double>& d_out) {
  x_out.clear();
  d_out.clear();
  for (std::size_t i = 1; i < x.size(); ++i) {
    x_out.push_back(x[i]);
    double step = cumulative[i] - cumulative[i - 1];
    // Differences of a converged cumulative are pure rounding; keep them at 0.
    if (std::abs(step) <= kCumulativeResolution * std::abs(cumulative[i])) step = 0.0;
    d_out.push_back(std::max(0.0, step / (x[i] - x[i - 1])));
  }
}

}  // namespace tikreg
