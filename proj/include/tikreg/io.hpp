#pragma once

// JSON and CSV forms of reports and rate fits, and the operator file format
//
//   {"diagonal": [s1, s2, ...], "y": [...], "truncated": false}
//   {"matrix": [[...], ...], "y": [...]}

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "tikreg/measure_lemmas.hpp"
#include "tikreg/rates_harness.hpp"
#include "tikreg/source_conditions.hpp"

namespace tikreg {

using json = nlohmann::ordered_json;

namespace detail {
// JSON has no infinities; they are written as strings.
inline json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}
}  // namespace detail

inline json to_json(const ConditionReport& r) {
  json j;
  j["condition"] = to_string(r.condition);
  j["parameter"] = r.parameter;
  j["verdict"] = to_string(r.verdict);
  json c = json::object();
  for (const auto& [k, v] : r.constants) c[k] = detail::number(v);
  j["constants"] = c;
  j["truncation"] = r.truncation;
  json w = json::array();
  for (Eigen::Index i = 0; i < r.witness.size(); ++i) w.push_back(r.witness[i]);
  j["witness"] = w;
  if (!r.note.empty()) j["note"] = r.note;
  json pts = json::array();
  for (const auto& p : r.diagnostics) pts.push_back(json::array({p.x, detail::number(p.value)}));
  j["diagnostics"] = {{"label", r.diagnostics_label}, {"points", pts}};
  return j;
}

inline json to_json(const RateFit& f) {
  json j;
  json g = json::array();
  for (const auto& [x, e] : f.grid()) g.push_back(json::array({x, e}));
  j["grid"] = g;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["max_residual"] = f.max_residual;
  j["window"] = json::array({f.window_lo, f.window_hi});
  j["clipped"] = f.clipped;
  if (!f.note.empty()) j["note"] = f.note;
  return j;
}

inline json to_json(const BoundPair& b) { return {{"lhs", b.lhs}, {"rhs", b.rhs}, {"holds", b.holds()}}; }

inline json to_json(const SplitPoint& s) {
  return {{"Lambda", s.Lambda}, {"A_Lambda", s.A_Lambda}, {"B_Lambda", s.B_Lambda}, {"A_inf", s.A_inf}};
}

inline std::string to_csv(const RateFit& f) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "x,error,alpha_used,trial_witness_index\n";
  for (const auto& r : f.records) os << r.x << ',' << r.error << ',' << r.alpha_used << ',' << r.trial_witness_index << '\n';
  return os.str();
}

struct OperatorFile {
  SpectralOperator op;
  CoeffVector y;
};

inline OperatorFile parse_operator(const json& j) {
  auto vec_of = [](const json& a, const char* what) {
    if (!a.is_array()) throw std::runtime_error(std::string("operator file: '") + what + "' must be an array");
    std::vector<double> v;
    for (const auto& x : a) {
      if (!x.is_number()) throw std::runtime_error(std::string("operator file: '") + what + "' must hold numbers");
      v.push_back(x.get<double>());
    }
    return v;
  };
  if (!j.is_object() || !j.contains("y")) throw std::runtime_error("operator file: missing 'y'");
  if (j.contains("diagonal") == j.contains("matrix"))
    throw std::runtime_error("operator file: need exactly one of 'diagonal' or 'matrix'");
  const auto y = vec_of(j.at("y"), "y");
  const bool truncated = j.value("truncated", false);
  if (j.contains("diagonal")) {
    auto op = SpectralOperator::diagonal(vec_of(j.at("diagonal"), "diagonal"), truncated);
    if (static_cast<Eigen::Index>(y.size()) != op.rows()) throw std::runtime_error("operator file: 'y' length mismatch");
    auto yv = op.codomain_vector(Eigen::Map<const Vec>(y.data(), static_cast<Eigen::Index>(y.size())));
    return {std::move(op), std::move(yv)};
  }
  const auto& m = j.at("matrix");
  if (!m.is_array() || m.empty()) throw std::runtime_error("operator file: 'matrix' must be a non-empty array");
  const auto rows = static_cast<Eigen::Index>(m.size());
  Eigen::Index cols = -1;
  Mat a;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto row = vec_of(m[static_cast<std::size_t>(i)], "matrix row");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      if (cols == 0) throw std::runtime_error("operator file: empty matrix row");
      a.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::runtime_error("operator file: ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) a(i, c) = row[static_cast<std::size_t>(c)];
  }
  auto op = SpectralOperator::dense(a);
  if (static_cast<Eigen::Index>(y.size()) != op.rows()) throw std::runtime_error("operator file: 'y' length mismatch");
  auto yv = op.codomain_vector(Eigen::Map<const Vec>(y.data(), static_cast<Eigen::Index>(y.size())));
  return {std::move(op), std::move(yv)};
}

inline OperatorFile load_operator(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read operator file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("operator file '" + path + "': " + e.what());
  }
  return parse_operator(j);
}

}  // namespace tikreg
