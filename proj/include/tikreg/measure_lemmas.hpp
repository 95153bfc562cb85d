#pragma once

// Inequalities for discrete spectral measures mu_{v,w}(A) = <E_A v, w>:
//
//   |mu_{d,u}|([a,b]) <= (int_[a,b] l^{-rho} dmu_{d,d})^{1/2} (int_[a,b] l^rho dmu_{u,u})^{1/2}
//   int_[Lambda,inf) l^{-rho} dmu <= C rho/(rho-nu) Lambda^{nu-rho}   if mu([0,l]) <= C l^nu
//
// and the half-mass split used to turn a spectral tail into a variational
// inequality.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "tikreg/source_conditions.hpp"
#include "tikreg/spectral_core.hpp"

namespace tikreg {

struct BoundPair {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds(double tol = 1e-12) const { return lhs <= rhs + tol; }
};

namespace detail {
inline bool has_atom_near(const DiscreteMeasure& m, double loc, double rel) {
  for (const auto& at : m.atoms())
    if (std::abs(at.location - loc) <= rel * std::max(at.location, loc)) return at.mass != 0.0;
  return false;
}
}  // namespace detail

/// Cauchy-Schwarz on [a,b]. The three measures must come from one
/// (op, u†, u) triple: every atom of mu_du needs an atom of mu_dd and of
/// mu_uu at the same location.
inline BoundPair cs_measure_bound(const DiscreteMeasure& mu_dd, const DiscreteMeasure& mu_uu,
                                  const DiscreteMeasure& mu_du, double a, double b, double rho) {
  if (!(a >= 0.0) || !(b >= a)) throw std::invalid_argument("cs_measure_bound: need 0 <= a <= b");
  if (!std::isfinite(rho)) throw std::invalid_argument("cs_measure_bound: rho must be finite");
  if (mu_dd.is_signed() || mu_uu.is_signed())
    throw std::invalid_argument("cs_measure_bound: mu_dd and mu_uu must be non-negative");
  for (const auto& at : mu_du.atoms()) {
    if (at.mass == 0.0) continue;
    if (!detail::has_atom_near(mu_dd, at.location, 1e-12) || !detail::has_atom_near(mu_uu, at.location, 1e-12)) {
      std::ostringstream msg;
      msg << "cs_measure_bound: inconsistent atom grids (mu_du atom at " << at.location
          << " missing from mu_dd or mu_uu)";
      throw std::invalid_argument(msg.str());
    }
  }
  if (rho != 0.0 && a == 0.0) {
    for (const auto* m : {&mu_dd, &mu_uu})
      if (!m->empty() && m->atoms().front().location == 0.0 && m->atoms().front().mass != 0.0)
        throw std::domain_error("cs_measure_bound: atom at 0 with rho != 0 makes lambda^{-|rho|} undefined");
  }
  BoundPair out;
  out.lhs = mu_du.variation_in(a, b);
  out.rhs = std::sqrt(mu_dd.moment(-rho, a, b)) * std::sqrt(mu_uu.moment(rho, a, b));
  return out;
}

/// Largest ratio mu([0, lambda_k]) / lambda_k^nu over the atoms, i.e. the
/// smallest C for which mu([0, l)) <= C l^nu holds for every l > 0.
inline double tail_premise_constant(const DiscreteMeasure& mu, double nu, double* witness = nullptr) {
  double acc = 0.0, best = 0.0;
  for (const auto& at : mu.atoms()) {
    acc += at.mass;
    const double scale = std::pow(at.location, nu);
    const double q = scale > 0.0 ? acc / scale : (acc > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (q > best) {
      best = q;
      if (witness) *witness = at.location;
    }
  }
  return best;
}

/// Tail integral bound. The premise mu([0,l)) <= C l^nu for all l > 0 is
/// checked at every atom with the atom included (the supremum over l is
/// approached from the right of each atom); a failure throws
/// PremiseViolation carrying the offending location.
inline BoundPair tail_integral_bound(const DiscreteMeasure& mu, double nu, double rho, double c, double lambda) {
  if (mu.is_signed()) throw std::invalid_argument("tail_integral_bound: measure must be non-negative");
  if (!(nu >= 0.0)) throw std::invalid_argument("tail_integral_bound: nu must be >= 0");
  if (!(rho > nu)) throw std::invalid_argument("tail_integral_bound: rho must exceed nu");
  if (!(c > 0.0)) throw std::invalid_argument("tail_integral_bound: C must be > 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("tail_integral_bound: Lambda must be > 0");
  double acc = 0.0;
  for (const auto& at : mu.atoms()) {
    acc += at.mass;
    if (acc > c * std::pow(at.location, nu) * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "tail_integral_bound: premise mu([0,l)) <= C l^nu fails just above l = " << at.location << " (mass "
          << acc << " > " << c * std::pow(at.location, nu) << ")";
      throw PremiseViolation(msg.str(), at.location);
    }
  }
  BoundPair out;
  for (const auto& at : mu.atoms())
    if (at.location >= lambda) out.lhs += at.mass * std::pow(at.location, -rho);
  out.rhs = c * rho / (rho - nu) * std::pow(lambda, nu - rho);
  return out;
}

struct SplitPoint {
  double Lambda = 0.0;
  double A_Lambda = 0.0;  // |mu|([0, Lambda])
  double B_Lambda = 0.0;  // |mu|([Lambda, inf))
  double A_inf = 0.0;
};

/// Smallest atom Lambda with |mu|([0,Lambda]) >= |mu|([0,inf))/2. Then also
/// |mu|([Lambda,inf)) >= |mu|([0,inf))/2.
inline SplitPoint split_point(const DiscreteMeasure& mu) {
  if (mu.empty()) throw std::invalid_argument("split_point: measure has no atoms");
  const auto& atoms = mu.atoms();
  SplitPoint sp;
  sp.A_inf = mu.total_variation();
  double below = 0.0;
  for (const auto& at : atoms) {
    below += std::abs(at.mass);
    if (below >= sp.A_inf / 2.0) {
      sp.Lambda = at.location;
      sp.A_Lambda = below;
      sp.B_Lambda = mu.variation_in(at.location, std::numeric_limits<double>::infinity());
      return sp;
    }
  }
  sp.Lambda = atoms.back().location;  // unreachable for finite masses
  sp.A_Lambda = below;
  sp.B_Lambda = std::abs(atoms.back().mass);
  return sp;
}

/// Step-by-step reconstruction of
///   2<u†,u> <= beta ||(L*L)^{rho/2} u||^{nu/rho} ||u||^{1-nu/rho},
///   beta = scr_to_vi_certificate(C, nu, rho),
/// from a spectral tail ||E_[0,l] u†||^2 <= C^2 l^nu. Each entry of `chain`
/// bounds the previous one; `holds` checks every link.
struct TailToVi {
  SplitPoint split;
  double beta = 0.0;
  std::vector<double> chain;  // 2<u†,u>, 2A, split, Cauchy-Schwarz, tail bounds, beta X^{nu/rho} Y^{1-nu/rho}
  bool holds = false;
};

inline TailToVi reconstruct_tail_to_vi(const SpectralOperator& op, const CoeffVector& udag, const CoeffVector& u,
                                       double nu, double rho, double c_tail) {
  if (!(nu > 0.0 && rho > nu)) throw std::invalid_argument("reconstruct_tail_to_vi: need 0 < nu < rho");
  TailToVi out;
  out.beta = scr_to_vi_certificate(c_tail, nu, rho);
  const double c = c_tail * c_tail;  // measure constant: mu_dd([0,l]) <= c l^nu
  const auto mdd = vector_measure(op, udag, udag);
  const auto muu = vector_measure(op, u, u);
  const auto mdu = vector_measure(op, udag, u);
  const double x = power_apply(op, rho / 2.0, u).norm();
  const double y = u.norm();
  const double th = nu / rho;
  const double lhs = 2.0 * udag.dot(u);
  out.chain.push_back(lhs);
  if (mdu.empty() || mdu.total_variation() == 0.0) {
    out.chain.push_back(0.0);
    out.chain.push_back(out.beta * std::pow(x, th) * std::pow(y, 1.0 - th));
    out.holds = lhs <= 1e-300;
    return out;
  }
  out.split = split_point(mdu);
  const double lam = out.split.Lambda;
  if (!(lam > 0.0)) throw std::domain_error("reconstruct_tail_to_vi: split point at 0 (null-space mass)");
  out.chain.push_back(2.0 * out.split.A_inf);
  out.chain.push_back(2.0 * std::pow(2.0 * out.split.A_Lambda, 1.0 - th) * std::pow(2.0 * out.split.B_Lambda, th));
  const auto below = cs_measure_bound(mdd, muu, mdu, 0.0, lam, 0.0);
  const auto above = cs_measure_bound(mdd, muu, mdu, lam, std::numeric_limits<double>::infinity(), rho);
  out.chain.push_back(2.0 * std::pow(2.0 * below.rhs, 1.0 - th) * std::pow(2.0 * above.rhs, th));
  const auto tail = tail_integral_bound(mdd, nu, rho, c, lam);
  const double below_bound = std::sqrt(c * std::pow(lam, nu)) * y;
  const double above_bound = std::sqrt(tail.rhs) * x;
  out.chain.push_back(2.0 * std::pow(2.0 * below_bound, 1.0 - th) * std::pow(2.0 * above_bound, th));
  out.chain.push_back(out.beta * std::pow(x, th) * std::pow(y, 1.0 - th));
  out.holds = true;
  for (std::size_t k = 1; k < out.chain.size(); ++k)
    if (out.chain[k - 1] > out.chain[k] * (1.0 + 1e-10) + 1e-300) out.holds = false;
  return out;
}

}  // namespace tikreg
