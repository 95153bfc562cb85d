#pragma once

// Operators with an explicit singular system, Hilbert-space elements expressed
// in ambient coordinates, and the spectral calculus of L*L that the rest of the
// library is built on.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tikreg/error.hpp"

namespace tikreg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class OperatorKind { Diagonal, Dense };
enum class Space { Domain, Codomain };

namespace detail {
inline std::uint64_t next_frame_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}
}  // namespace detail

/// Element of U (domain) or V (codomain) of one particular operator.
///
/// Coefficients are ambient coordinates: the standard basis of R^cols or
/// R^rows. For diagonal operators this coincides with the singular basis.
class CoeffVector {
 public:
  CoeffVector() = default;
  CoeffVector(Vec coeffs, std::uint64_t frame, Space space)
      : coeffs_(std::move(coeffs)), frame_(frame), space_(space) {
    if (!coeffs_.allFinite()) throw std::invalid_argument("CoeffVector: non-finite coefficient");
  }

  const Vec& coeffs() const noexcept { return coeffs_; }
  std::uint64_t frame() const noexcept { return frame_; }
  Space space() const noexcept { return space_; }
  Eigen::Index size() const noexcept { return coeffs_.size(); }
  double norm() const { return coeffs_.norm(); }
  double squaredNorm() const { return coeffs_.squaredNorm(); }
  double operator[](Eigen::Index i) const { return coeffs_[i]; }

  /// Same frame, new coefficients.
  CoeffVector with(Vec coeffs) const { return {std::move(coeffs), frame_, space_}; }

  double dot(const CoeffVector& other) const {
    require_same(other, "dot");
    return coeffs_.dot(other.coeffs_);
  }
  CoeffVector operator+(const CoeffVector& other) const {
    require_same(other, "+");
    return with(coeffs_ + other.coeffs_);
  }
  CoeffVector operator-(const CoeffVector& other) const {
    require_same(other, "-");
    return with(coeffs_ - other.coeffs_);
  }
  CoeffVector operator*(double s) const { return with(coeffs_ * s); }

  void require_same(const CoeffVector& other, const char* what) const {
    if (frame_ != other.frame_ || space_ != other.space_)
      throw FrameMismatch(std::string("CoeffVector ") + what + ": frame mismatch");
    if (coeffs_.size() != other.coeffs_.size())
      throw std::invalid_argument(std::string("CoeffVector ") + what + ": length mismatch");
  }

 private:
  Vec coeffs_;
  std::uint64_t frame_ = 0;
  Space space_ = Space::Domain;
};

/// Bounded linear operator given by its singular system.
///
/// Diagonal operators act coordinatewise (L e_n = d_n e_n); zero entries are
/// dropped directions. Dense operators are decomposed once with an SVD and
/// directions with sigma < drop_tol * sigma_max are dropped. Spectral
/// coordinates run over the retained singular triplets only; dropped
/// directions form the null space of L (domain) and the complement of the
/// closed range (codomain).
class SpectralOperator {
 public:
  static constexpr double kDefaultDropTolerance = 1e-14;

  /// `models_truncation` marks the first N coefficients of an infinite
  /// diagonal operator (as opposed to a genuinely finite-dimensional one).
  static SpectralOperator diagonal(const std::vector<double>& entries, bool models_truncation = true) {
    if (entries.empty()) throw std::invalid_argument("SpectralOperator::diagonal: empty diagonal");
    SpectralOperator op;
    op.kind_ = OperatorKind::Diagonal;
    op.truncated_ = models_truncation;
    const auto n = static_cast<Eigen::Index>(entries.size());
    op.rows_ = op.cols_ = n;
    op.diag_ = Vec::Zero(n);
    std::vector<double> kept;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = entries[static_cast<std::size_t>(i)];
      if (!std::isfinite(d) || d < 0.0)
        throw std::invalid_argument("SpectralOperator::diagonal: entries must be finite and >= 0");
      op.diag_[i] = d;
      if (d > 0.0) {
        op.index_.push_back(i);
        kept.push_back(d);
      }
    }
    if (kept.empty()) throw std::invalid_argument("SpectralOperator::diagonal: operator is zero");
    op.sigma_ = Eigen::Map<const Vec>(kept.data(), static_cast<Eigen::Index>(kept.size()));
    op.dropped_ = n - op.rank();
    op.basis_note_ = "diagonal, standard basis";
    if (op.dropped_ > 0) op.basis_note_ += "; dropped " + std::to_string(op.dropped_) + " zero entries";
    op.frame_ = detail::next_frame_id();
    return op;
  }

  /// Dense operators describe finite-dimensional problems (no truncation).
  static SpectralOperator dense(const Mat& matrix, double drop_tol = kDefaultDropTolerance) {
    if (matrix.size() == 0) throw std::invalid_argument("SpectralOperator::dense: empty matrix");
    if (!matrix.allFinite()) throw std::invalid_argument("SpectralOperator::dense: non-finite entry");
    SpectralOperator op;
    op.kind_ = OperatorKind::Dense;
    op.truncated_ = false;
    op.rows_ = matrix.rows();
    op.cols_ = matrix.cols();
    op.matrix_ = matrix;
    Eigen::JacobiSVD<Mat> svd(matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& s = svd.singularValues();
    if (s.size() == 0 || s[0] <= 0.0) throw std::invalid_argument("SpectralOperator::dense: operator is zero");
    const double cut = drop_tol * s[0];
    Eigen::Index r = 0;
    while (r < s.size() && s[r] >= cut && s[r] > 0.0) ++r;
    op.sigma_ = s.head(r);
    op.left_ = svd.matrixU().leftCols(r);
    op.right_ = svd.matrixV().leftCols(r);
    op.dropped_ = op.cols_ - r;
    op.basis_note_ = "dense, singular basis from SVD; rank " + std::to_string(r);
    if (s.size() > r)
      op.basis_note_ += "; dropped " + std::to_string(s.size() - r) + " singular values below " +
                        std::to_string(cut);
    if (op.cols_ > s.size()) op.basis_note_ += "; domain has " + std::to_string(op.cols_ - s.size()) +
                                               " structural null directions";
    op.frame_ = detail::next_frame_id();
    return op;
  }

  OperatorKind kind() const noexcept { return kind_; }
  Eigen::Index rows() const noexcept { return rows_; }
  Eigen::Index cols() const noexcept { return cols_; }
  Eigen::Index rank() const noexcept { return sigma_.size(); }
  /// Number of domain directions mapped to zero.
  Eigen::Index dropped() const noexcept { return dropped_; }
  bool models_truncation() const noexcept { return truncated_; }
  const std::string& basis_note() const noexcept { return basis_note_; }
  std::uint64_t frame() const noexcept { return frame_; }

  /// Retained singular values in spectral order (index order for diagonal
  /// operators, non-increasing for dense ones).
  const Vec& singular_values() const noexcept { return sigma_; }
  double sigma_max() const { return sigma_.maxCoeff(); }
  double sigma_min() const { return sigma_.minCoeff(); }

  /// Ambient index of each spectral coordinate (diagonal operators only).
  const std::vector<Eigen::Index>& diagonal_index() const noexcept { return index_; }

  Mat matrix() const {
    if (kind_ == OperatorKind::Dense) return matrix_;
    return diag_.asDiagonal();
  }

  CoeffVector domain_vector(Vec coeffs) const {
    if (coeffs.size() != cols_) throw std::invalid_argument("domain_vector: length mismatch");
    return {std::move(coeffs), frame_, Space::Domain};
  }
  CoeffVector codomain_vector(Vec coeffs) const {
    if (coeffs.size() != rows_) throw std::invalid_argument("codomain_vector: length mismatch");
    return {std::move(coeffs), frame_, Space::Codomain};
  }
  CoeffVector zero_domain() const { return domain_vector(Vec::Zero(cols_)); }
  CoeffVector zero_codomain() const { return codomain_vector(Vec::Zero(rows_)); }

  /// Coordinates <v_k, u> along the retained right singular vectors.
  Vec domain_spectrum(const CoeffVector& u) const {
    require(u, Space::Domain);
    return to_spectrum(u.coeffs(), right_);
  }
  /// Coordinates <w_k, y> along the retained left singular vectors.
  Vec codomain_spectrum(const CoeffVector& y) const {
    require(y, Space::Codomain);
    return to_spectrum(y.coeffs(), left_);
  }
  CoeffVector from_domain_spectrum(const Vec& c) const {
    return domain_vector(from_spectrum(c, right_, cols_));
  }
  CoeffVector from_codomain_spectrum(const Vec& c) const {
    return codomain_vector(from_spectrum(c, left_, rows_));
  }

  /// Component of u in the null space of L.
  CoeffVector domain_null_part(const CoeffVector& u) const {
    require(u, Space::Domain);
    return u.with(u.coeffs() - from_spectrum(to_spectrum(u.coeffs(), right_), right_, cols_));
  }
  /// Component of y orthogonal to the closure of the range of L.
  CoeffVector codomain_null_part(const CoeffVector& y) const {
    require(y, Space::Codomain);
    return y.with(y.coeffs() - from_spectrum(to_spectrum(y.coeffs(), left_), left_, rows_));
  }

  void require(const CoeffVector& v, Space space) const {
    if (v.frame() != frame_ || v.space() != space) throw FrameMismatch("vector does not belong to this operator");
    const auto n = space == Space::Domain ? cols_ : rows_;
    if (v.size() != n) throw std::invalid_argument("vector length does not match operator");
  }

 private:
  Vec to_spectrum(const Vec& x, const Mat& basis) const {
    if (kind_ == OperatorKind::Dense) return basis.transpose() * x;
    Vec c(rank());
    for (Eigen::Index k = 0; k < rank(); ++k) c[k] = x[index_[static_cast<std::size_t>(k)]];
    return c;
  }
  Vec from_spectrum(const Vec& c, const Mat& basis, Eigen::Index n) const {
    if (c.size() != rank()) throw std::invalid_argument("spectral coefficient length mismatch");
    if (kind_ == OperatorKind::Dense) return basis * c;
    Vec x = Vec::Zero(n);
    for (Eigen::Index k = 0; k < rank(); ++k) x[index_[static_cast<std::size_t>(k)]] = c[k];
    return x;
  }

  OperatorKind kind_ = OperatorKind::Diagonal;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  Eigen::Index dropped_ = 0;
  bool truncated_ = true;
  std::string basis_note_;
  std::uint64_t frame_ = 0;
  Vec sigma_;
  // Diagonal
  Vec diag_;
  std::vector<Eigen::Index> index_;
  // Dense
  Mat matrix_;
  Mat left_;
  Mat right_;
};

/// L u.
inline CoeffVector apply(const SpectralOperator& op, const CoeffVector& u) {
  const Vec c = op.domain_spectrum(u);
  return op.from_codomain_spectrum(op.singular_values().cwiseProduct(c));
}

/// L* y.
inline CoeffVector apply_adjoint(const SpectralOperator& op, const CoeffVector& y) {
  const Vec c = op.codomain_spectrum(y);
  return op.from_domain_spectrum(op.singular_values().cwiseProduct(c));
}

/// (L*L)^r u. Negative powers require an injective operator.
inline CoeffVector power_apply(const SpectralOperator& op, double r, const CoeffVector& u) {
  op.require(u, Space::Domain);
  if (!std::isfinite(r)) throw std::invalid_argument("power_apply: non-finite exponent");
  if (r == 0.0) return u;
  if (r < 0.0 && op.dropped() > 0)
    throw std::domain_error("power_apply: negative power of an operator with null directions is unbounded");
  const Vec& s = op.singular_values();
  const Vec c = op.domain_spectrum(u);
  Vec out(c.size());
  for (Eigen::Index k = 0; k < c.size(); ++k) out[k] = std::pow(s[k] * s[k], r) * c[k];
  return op.from_domain_spectrum(out);
}

/// ||E_[0,lambda] u|| for the spectral measure E of L*L. The null space sits
/// at eigenvalue 0 and is always included.
inline double spectral_projection_norm(const SpectralOperator& op, const CoeffVector& u, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("spectral_projection_norm: lambda must be >= 0");
  const Vec& s = op.singular_values();
  const Vec c = op.domain_spectrum(u);
  double acc = op.domain_null_part(u).coeffs().squaredNorm();
  for (Eigen::Index k = 0; k < c.size(); ++k)
    if (s[k] * s[k] <= lambda) acc += c[k] * c[k];
  return std::sqrt(acc);
}

struct Atom {
  double location;
  double mass;
};

/// Finite measure on [0, inf) with strictly increasing atom locations.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  DiscreteMeasure(std::vector<Atom> atoms, bool is_signed) : atoms_(std::move(atoms)), signed_(is_signed) {
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
      const auto& a = atoms_[k];
      if (!std::isfinite(a.location) || !std::isfinite(a.mass) || a.location < 0.0)
        throw std::invalid_argument("DiscreteMeasure: atoms need finite location >= 0 and finite mass");
      if (k > 0 && !(a.location > atoms_[k - 1].location))
        throw std::invalid_argument("DiscreteMeasure: locations must be strictly increasing");
      if (!signed_ && a.mass < 0.0)
        throw std::invalid_argument("DiscreteMeasure: negative mass in an unsigned measure");
    }
  }

  /// Sorts, merges locations that agree to `merge_rel_tol`, and marks the
  /// measure signed iff some merged mass is negative.
  static DiscreteMeasure from_unsorted(std::vector<Atom> atoms, double merge_rel_tol = 1e-12) {
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
    std::vector<Atom> merged;
    for (const auto& a : atoms) {
      if (!merged.empty() &&
          a.location - merged.back().location <= merge_rel_tol * std::max(a.location, merged.back().location)) {
        merged.back().mass += a.mass;
      } else {
        merged.push_back(a);
      }
    }
    const bool neg = std::any_of(merged.begin(), merged.end(), [](const Atom& a) { return a.mass < 0.0; });
    return DiscreteMeasure(std::move(merged), neg);
  }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  bool is_signed() const noexcept { return signed_; }
  bool empty() const noexcept { return atoms_.empty(); }
  std::size_t size() const noexcept { return atoms_.size(); }

  double total_mass() const {
    return std::accumulate(atoms_.begin(), atoms_.end(), 0.0, [](double s, const Atom& a) { return s + a.mass; });
  }
  double total_variation() const { return variation_in(0.0, std::numeric_limits<double>::infinity()); }

  /// |mu|([a, b]).
  double variation_in(double a, double b) const {
    double s = 0.0;
    for (const auto& at : atoms_)
      if (at.location >= a && at.location <= b) s += std::abs(at.mass);
    return s;
  }
  /// mu([0, lambda]) or mu([0, lambda)).
  double mass_below(double lambda, bool inclusive) const {
    double s = 0.0;
    for (const auto& at : atoms_)
      if (at.location < lambda || (inclusive && at.location == lambda)) s += at.mass;
    return s;
  }
  /// Integral of lambda^p over [a, b]. Atoms at 0 carrying mass make a
  /// negative power undefined.
  double moment(double p, double a, double b) const {
    double s = 0.0;
    for (const auto& at : atoms_) {
      if (at.location < a || at.location > b || at.mass == 0.0) continue;
      if (at.location == 0.0) {
        if (p < 0.0) throw std::domain_error("DiscreteMeasure::moment: negative power at an atom at 0");
        if (p > 0.0) continue;
      }
      s += std::pow(at.location, p) * at.mass;
    }
    return s;
  }

  DiscreteMeasure variation() const {
    std::vector<Atom> v = atoms_;
    for (auto& a : v) a.mass = std::abs(a.mass);
    return DiscreteMeasure(std::move(v), false);
  }

 private:
  std::vector<Atom> atoms_;
  bool signed_ = false;
};

/// mu_{v,w}(A) = <E_A v, w>: atoms at sigma_k^2 with mass v_k w_k, the null
/// space contributing an atom at 0. Atoms with zero mass are omitted.
inline DiscreteMeasure vector_measure(const SpectralOperator& op, const CoeffVector& v, const CoeffVector& w) {
  op.require(v, Space::Domain);
  op.require(w, Space::Domain);
  const Vec& s = op.singular_values();
  const Vec cv = op.domain_spectrum(v);
  const Vec cw = op.domain_spectrum(w);
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(s.size()) + 1);
  const double null_mass = op.domain_null_part(v).coeffs().dot(op.domain_null_part(w).coeffs());
  // Null components at rounding level (rank-deficient SVDs) are not atoms.
  if (op.dropped() > 0 && std::abs(null_mass) > 1e-26 * v.norm() * w.norm()) atoms.push_back({0.0, null_mass});
  for (Eigen::Index k = 0; k < s.size(); ++k) atoms.push_back({s[k] * s[k], cv[k] * cw[k]});
  auto merged = DiscreteMeasure::from_unsorted(std::move(atoms));
  std::vector<Atom> kept;
  for (const auto& a : merged.atoms())
    if (a.mass != 0.0) kept.push_back(a);
  return DiscreteMeasure(std::move(kept), merged.is_signed());
}

}  // namespace tikreg
