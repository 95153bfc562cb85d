#pragma once

// tikreg command line: check | rates | lemmas | conformance.
// Exit codes: 0 success, 1 verdict or bound mismatch, 2 usage or input error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tikreg/examples_registry.hpp"
#include "tikreg/io.hpp"
#include "tikreg/measure_lemmas.hpp"
#include "tikreg/rates_harness.hpp"

namespace tikreg::cli {

inline constexpr int kOk = 0;
inline constexpr int kMismatch = 1;
inline constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string instance;
  std::string operator_file;
  std::size_t n = 60;
  std::uint64_t seed = 0;
  std::string output;
  std::string format;
  bool no_timestamp = false;
};

struct Problem {
  SpectralOperator op;
  CoeffVector y;
  CoeffVector udag;
  std::string label;
  std::optional<NamedInstance> named;
};

inline Problem load_problem(const Common& c) {
  if (c.instance.empty() == c.operator_file.empty())
    throw UsageError("give exactly one of --instance or --operator");
  if (!c.instance.empty()) {
    NamedInstance inst = build(c.instance, c.n, c.seed);
    Problem p{inst.op, inst.y, inst.u_dagger, inst.name, inst};
    return p;
  }
  auto f = load_operator(c.operator_file);
  auto ud = min_norm_solution(f.op, f.y);
  return Problem{std::move(f.op), std::move(f.y), std::move(ud), c.operator_file, std::nullopt};
}

inline std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline json envelope(const Common& c, const std::string& command, json body) {
  json j;
  j["command"] = command;
  if (!c.instance.empty()) j["instance"] = c.instance;
  if (!c.operator_file.empty()) j["operator"] = c.operator_file;
  j["N"] = c.n;
  j["seed"] = c.seed;
  if (!c.no_timestamp) j["generated_at"] = timestamp();
  j["result"] = std::move(body);
  return j;
}

/// Relative output paths resolve against $TIKREG_OUTPUT_DIR when it is set.
inline std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("TIKREG_OUTPUT_DIR"); dir && *dir) p = std::filesystem::path(dir) / p;
  }
  return p;
}

inline void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.output.empty()) {
    out << text;
    return;
  }
  const auto p = resolve_output(c.output);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  f << text;
}

inline void add_common(CLI::App* sub, Common& c, bool with_format) {
  sub->add_option("--instance", c.instance, "named instance")->check(CLI::IsMember(instance_names()));
  sub->add_option("--operator", c.operator_file, "operator JSON file");
  sub->add_option("--N", c.n, "truncation for named instances")->check(CLI::Range(std::size_t{8}, std::size_t{50'000'000}));
  sub->add_option("--seed", c.seed, "seed for random instances and test vectors");
  sub->add_option("-o,--output", c.output, "output path (default stdout)");
  if (with_format) sub->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sub->add_flag("--no-timestamp", c.no_timestamp, "omit generated_at from JSON");
}

// -- check --------------------------------------------------------------------

struct CheckArgs {
  std::string condition;
  double param = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> beta;
  std::optional<double> gamma;
  std::string expect;
  std::size_t random_vectors = 1000;
};

inline int run_check_cmd(const Common& c, const CheckArgs& a, std::ostream& out, std::ostream& err) {
  const auto cond = parse_condition(a.condition);
  if (!cond) throw UsageError("unknown condition '" + a.condition + "'");
  if (std::isnan(a.param)) throw UsageError("--nu (or --mu for ivi) is required");
  std::optional<Verdict> expect;
  if (!a.expect.empty()) {
    expect = parse_verdict(a.expect);
    if (!expect) throw UsageError("unknown verdict '" + a.expect + "'");
  }
  const Problem p = load_problem(c);
  CheckOptions opt;
  opt.random_vectors = a.random_vectors;
  opt.seed ^= c.seed;
  ExpectedVerdict e{*cond, a.param};
  e.beta = a.beta;
  e.gamma = a.gamma;
  if (*cond == Condition::IVI && a.beta.has_value() != a.gamma.has_value())
    throw UsageError("ivi needs both --beta and --gamma, or neither (converted from hvi)");
  NamedInstance tmp{p.label, p.op, p.y, p.udag, {}, static_cast<std::size_t>(p.op.cols()), c.seed};
  const ConditionReport r = run_check(tmp, e, opt);
  emit(c, envelope(c, "check", to_json(r)).dump(2) + "\n", out);
  if (expect && r.verdict != *expect) {
    err << "verdict " << to_string(r.verdict) << " does not match expected " << to_string(*expect) << "\n";
    return kMismatch;
  }
  return kOk;
}

// -- rates --------------------------------------------------------------------

struct RatesArgs {
  std::string mode = "noise-free";
  std::optional<double> lo, hi;
  int per_decade = 4;
  double mu = 2.0 / 3.0;
  std::string noise = "worst";
  int trials = 0;
  bool project_q = false;
  std::optional<double> expect_slope;
  double tolerance = 0.03;
};

inline int run_rates_cmd(const Common& c, const RatesArgs& a, std::ostream& out, std::ostream& err) {
  const Problem p = load_problem(c);
  RateFit fit;
  if (a.mode == "noise-free") {
    fit = noise_free_rate(p.op, p.y, log_grid(a.lo.value_or(1e-10), a.hi.value_or(1e-4), a.per_decade));
  } else {
    NoiseModel m;
    m.seed ^= c.seed;
    m.projectQ = a.project_q;
    if (a.noise == "worst") m.kind = NoiseKind::WorstCaseBasis;
    else if (a.noise == "inrange") m.kind = NoiseKind::InRange;
    else m.kind = NoiseKind::RandomSphere;
    fit = noisy_rate(p.op, p.y, log_grid(a.lo.value_or(1e-8), a.hi.value_or(1e-2), a.per_decade), a.mu, m, a.trials);
  }
  const bool as_json = c.format == "json";
  emit(c, as_json ? envelope(c, "rates", to_json(fit)).dump(2) + "\n" : to_csv(fit), out);
  std::ostringstream summary;
  summary << std::setprecision(6) << "slope " << fit.slope << " intercept " << fit.intercept << " max_residual "
          << fit.max_residual << " window [" << fit.window_lo << ", " << fit.window_hi << "]"
          << (fit.clipped ? " clipped" : "") << "\n";
  (c.output.empty() ? err : out) << summary.str();
  if (a.expect_slope && std::abs(fit.slope - *a.expect_slope) > a.tolerance) {
    err << "slope " << fit.slope << " outside " << *a.expect_slope << " +- " << a.tolerance << "\n";
    return kMismatch;
  }
  return kOk;
}

// -- lemmas -------------------------------------------------------------------

struct LemmaArgs {
  double nu = 0.5;
  double rho = 1.0;
  std::optional<double> c_tail;
  int samples = 200;
};

inline int run_lemmas_cmd(const Common& c, const LemmaArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.nu > 0.0 && a.rho > a.nu)) throw UsageError("need 0 < nu < rho");
  if (a.samples < 1) throw UsageError("--samples must be >= 1");
  const Problem p = load_problem(c);
  double c_tail;
  if (a.c_tail) {
    c_tail = *a.c_tail;
  } else {
    const auto tail = check_spectral_tail(p.op, p.udag, a.nu);
    if (!tail.has("C")) {
      err << "spectral tail of order " << a.nu << " not certified; pass --C\n";
      return kMismatch;
    }
    c_tail = tail.constant("C");
  }
  bool ok = true;
  json body;
  body["nu"] = a.nu;
  body["rho"] = a.rho;
  body["C_tail"] = c_tail;

  const auto mdd = vector_measure(p.op, p.udag, p.udag);
  json tail = json::object();
  try {
    std::size_t checked = 0, violations = 0;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& at : mdd.atoms()) {
      if (!(at.location > 0.0)) continue;
      const auto b = tail_integral_bound(mdd, a.nu, a.rho, c_tail * c_tail, at.location);
      ++checked;
      if (!b.holds()) ++violations;
      if (b.lhs > 0.0) min_ratio = std::min(min_ratio, b.rhs / b.lhs);
    }
    tail["checked"] = checked;
    tail["violations"] = violations;
    tail["min_rhs_over_lhs"] = detail::number(min_ratio);
    ok = ok && violations == 0;
  } catch (const PremiseViolation& e) {
    tail["premise_violation"] = e.what();
    tail["witness_lambda"] = e.witness();
    ok = false;
  }
  body["tail_integral"] = tail;

  std::mt19937_64 rng(c.seed + 1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::size_t cs_viol = 0, chain_fail = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  const double rhos[] = {-1.0, 0.0, 0.5, 1.0, 2.0};
  for (int s = 0; s < a.samples; ++s) {
    Vec u(p.op.cols());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = g(rng);
    const auto uv = p.op.domain_vector(u);
    const auto muu = vector_measure(p.op, uv, uv);
    const auto mdu = vector_measure(p.op, p.udag, uv);
    const double rho = rhos[s % 5];
    const bool zero_atom = (!mdd.empty() && mdd.atoms().front().location == 0.0) ||
                           (!muu.empty() && muu.atoms().front().location == 0.0);
    if (!(rho != 0.0 && zero_atom)) {
      const auto b = cs_measure_bound(mdd, muu, mdu, 0.0, std::numeric_limits<double>::infinity(), rho);
      worst_margin = std::min(worst_margin, b.rhs - b.lhs);
      if (!b.holds()) ++cs_viol;
    }
    if (tail.contains("premise_violation")) continue;
    const auto rec = reconstruct_tail_to_vi(p.op, p.udag, uv, a.nu, a.rho, c_tail);
    if (!rec.holds) ++chain_fail;
  }
  body["cauchy_schwarz"] = {{"samples", a.samples}, {"violations", cs_viol},
                            {"worst_margin", detail::number(worst_margin)}};
  body["tail_to_vi"] = {{"samples", a.samples},
                        {"failures", chain_fail},
                        {"beta", scr_to_vi_certificate(c_tail, a.nu, a.rho)}};
  ok = ok && cs_viol == 0 && chain_fail == 0;
  if (!mdd.empty()) body["split_point_u_dagger"] = to_json(split_point(mdd));
  body["all_hold"] = ok;
  emit(c, envelope(c, "lemmas", body).dump(2) + "\n", out);
  return ok ? kOk : kMismatch;
}

// -- conformance --------------------------------------------------------------

inline int run_conformance_cmd(const Common& c, bool all, std::ostream& out, std::ostream&) {
  std::vector<std::string> names;
  if (all) {
    names = instance_names();
  } else {
    if (c.instance.empty()) throw UsageError("conformance needs --all or --instance");
    names = {c.instance};
  }
  std::size_t mismatches = 0;
  json rows = json::array();
  std::ostringstream table;
  table << std::left << std::setw(15) << "instance" << std::setw(14) << "condition" << std::setw(10) << "param"
        << std::setw(14) << "expected" << std::setw(14) << "computed" << "match\n";
  for (const auto& name : names) {
    const auto inst = build(name, c.n, c.seed);
    for (const auto& row : evaluate_expected(inst)) {
      if (!row.match) ++mismatches;
      std::ostringstream param;
      param << std::setprecision(4) << row.expected.parameter;
      table << std::left << std::setw(15) << name << std::setw(14) << to_string(row.expected.condition)
            << std::setw(10) << param.str() << std::setw(14) << to_string(row.expected.verdict) << std::setw(14)
            << to_string(row.report.verdict) << (row.match ? "yes" : "NO") << (row.detail.empty() ? "" : "  ")
            << row.detail << "\n";
      json r;
      r["instance"] = name;
      r["condition"] = to_string(row.expected.condition);
      r["parameter"] = row.expected.parameter;
      r["expected"] = to_string(row.expected.verdict);
      r["computed"] = to_string(row.report.verdict);
      r["match"] = row.match;
      r["constants"] = to_json(row.report)["constants"];
      rows.push_back(r);
    }
  }
  table << mismatches << " mismatches at N=" << c.n << "\n";
  if (c.format == "json") {
    emit(c, envelope(c, "conformance", {{"rows", rows}, {"mismatches", mismatches}}).dump(2) + "\n", out);
  } else {
    emit(c, table.str(), out);
  }
  return mismatches == 0 ? kOk : kMismatch;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Tikhonov regularization: source conditions, rates, spectral-measure lemmas"};
  app.name("tikreg");
  app.require_subcommand(1);

  Common c;
  CheckArgs ca;
  auto* check = app.add_subcommand("check", "check one source condition");
  add_common(check, c, false);
  check->add_option("--condition", ca.condition, "standardsc | hvi | ivi | svi | tail")->required();
  check->add_option("--nu,--mu", ca.param, "condition parameter");
  check->add_option("--beta", ca.beta, "ivi constant beta");
  check->add_option("--gamma", ca.gamma, "ivi constant gamma");
  check->add_option("--expect", ca.expect, "exit 1 unless the verdict matches");
  check->add_option("--random-vectors", ca.random_vectors, "random test vectors");

  RatesArgs ra;
  auto* rates = app.add_subcommand("rates", "empirical convergence order");
  add_common(rates, c, true);
  rates->add_option("--mode", ra.mode, "noise-free | noisy")->check(CLI::IsMember({"noise-free", "noisy"}));
  rates->add_option("--lo", ra.lo, "grid start (alpha or delta)");
  rates->add_option("--hi", ra.hi, "grid end");
  rates->add_option("--per-decade", ra.per_decade, "grid points per decade")->check(CLI::Range(1, 1000));
  rates->add_option("--mu", ra.mu, "alpha = delta^(2-mu)")->check(CLI::Range(1e-12, 1.0));
  rates->add_option("--noise", ra.noise, "worst | inrange | sphere")->check(CLI::IsMember({"worst", "inrange", "sphere"}));
  rates->add_option("--trials", ra.trials, "noise trials per delta");
  rates->add_flag("--project-q", ra.project_q, "project noise onto the retained range");
  rates->add_option("--expect-slope", ra.expect_slope, "exit 1 unless the slope is within --tolerance");
  rates->add_option("--tolerance", ra.tolerance, "slope tolerance");

  LemmaArgs la;
  auto* lemmas = app.add_subcommand("lemmas", "spectral-measure inequalities on an instance");
  add_common(lemmas, c, false);
  lemmas->add_option("--nu", la.nu, "tail order");
  lemmas->add_option("--rho", la.rho, "power in the variational inequality");
  lemmas->add_option("--C", la.c_tail, "tail constant (default: certified by the tail check)");
  lemmas->add_option("--samples", la.samples, "random test vectors");

  bool all = false;
  auto* conf = app.add_subcommand("conformance", "expected verdicts of the named instances");
  add_common(conf, c, true);
  conf->add_flag("--all", all, "every named instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  try {
    if (check->parsed()) return run_check_cmd(c, ca, out, err);
    if (rates->parsed()) return run_rates_cmd(c, ra, out, err);
    if (lemmas->parsed()) return run_lemmas_cmd(c, la, out, err);
    return run_conformance_cmd(c, all, out, err);
  } catch (const UsageError& e) {
    err << "tikreg: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "tikreg: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace tikreg::cli
