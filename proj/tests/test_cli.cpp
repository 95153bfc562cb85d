#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "tikreg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = tikreg::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("tikreg_cli_test_" + std::to_string(::getpid())) / name;
  fs::create_directories(p.parent_path());
  return p;
}

}  // namespace

TEST(Cli, CheckCounterHvi) {
  const auto r = run({"check", "--instance", "counter26", "--condition", "hvi", "--nu", "0.5", "--no-timestamp"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = tikreg::json::parse(r.out);
  EXPECT_EQ(j["command"], "check");
  EXPECT_FALSE(j.contains("generated_at"));
  EXPECT_EQ(j["result"]["verdict"], "Certified");
  EXPECT_LE(j["result"]["constants"]["inner_constant"].get<double>(), 2.0 * std::sqrt(2.0));
}

TEST(Cli, ExpectMismatchExitsOne) {
  const auto r = run({"check", "--instance", "counter26", "--condition", "standardsc", "--nu", "0.5", "--expect",
                      "Certified"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("does not match"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"check", "--instance", "nosuch", "--condition", "hvi", "--nu", "0.5"}).code, 2);
  EXPECT_EQ(run({"check", "--instance", "counter26", "--condition", "bogus", "--nu", "0.5"}).code, 2);
  EXPECT_EQ(run({"check", "--instance", "counter26", "--condition", "hvi"}).code, 2);
  EXPECT_EQ(run({"check", "--condition", "hvi", "--nu", "0.5"}).code, 2);
  EXPECT_EQ(run({"check", "--instance", "counter26", "--condition", "hvi", "--nu", "3"}).code, 2);
  EXPECT_EQ(run({"check", "--instance", "counter26", "--condition", "ivi", "--mu", "1", "--beta", "1"}).code, 2);
  EXPECT_EQ(run({"rates", "--instance", "counter26", "--lo", "1e-3", "--hi", "1e-2"}).code, 2);
  EXPECT_EQ(run({"check", "--instance", "counter26", "--N", "3", "--condition", "hvi", "--nu", "0.5"}).code, 2);
  EXPECT_EQ(run({"conformance"}).code, 2);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST(Cli, DeterministicWithoutTimestamp) {
  const std::vector<std::string> args{"check", "--instance", "random_diag", "--seed", "3", "--condition", "hvi",
                                      "--nu", "0.7", "--no-timestamp"};
  const auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto t = run({"check", "--instance", "counter26", "--condition", "hvi", "--nu", "0.5"});
  EXPECT_TRUE(tikreg::json::parse(t.out).contains("generated_at"));
}

TEST(Cli, RatesCsvAndJson) {
  const auto csv = run({"rates", "--instance", "counter26", "--mode", "noise-free", "--expect-slope", "0.25"});
  ASSERT_EQ(csv.code, 0) << csv.err;
  EXPECT_EQ(csv.out.rfind("x,error,alpha_used,trial_witness_index\n", 0), 0u);
  EXPECT_NE(csv.err.find("slope"), std::string::npos);
  const auto js = run({"rates", "--instance", "counter26", "--mode", "noisy", "--format", "json", "--no-timestamp"});
  ASSERT_EQ(js.code, 0) << js.err;
  const auto j = tikreg::json::parse(js.out);
  EXPECT_NEAR(j["result"]["slope"].get<double>(), 1.0 / 3.0, 0.05);
  const auto bad = run({"rates", "--instance", "counter26", "--expect-slope", "0.5"});
  EXPECT_EQ(bad.code, 1);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto dir = scratch("outdir");
  fs::create_directories(dir);
  ::setenv("TIKREG_OUTPUT_DIR", dir.c_str(), 1);
  const auto r = run({"conformance", "--all", "--format", "json", "-o", "sub/conf.json", "--no-timestamp"});
  ::unsetenv("TIKREG_OUTPUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(dir / "sub" / "conf.json");
  ASSERT_TRUE(in.good());
  const auto j = tikreg::json::parse(in);
  EXPECT_EQ(j["result"]["mismatches"], 0);
  EXPECT_GT(j["result"]["rows"].size(), 10u);
}

TEST(Cli, ConformanceTable) {
  const auto r = run({"conformance", "--instance", "counter26"});
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("0 mismatches"), std::string::npos);
}

TEST(Cli, Lemmas) {
  const auto r = run({"lemmas", "--instance", "counter26", "--samples", "20", "--no-timestamp"});
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  const auto j = tikreg::json::parse(r.out);
  EXPECT_TRUE(j["result"]["all_hold"].get<bool>());
  // Too small a tail constant breaks the premise and is reported.
  const auto bad = run({"lemmas", "--instance", "counter26", "--C", "1", "--samples", "5", "--no-timestamp"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_TRUE(tikreg::json::parse(bad.out)["result"]["tail_integral"].contains("witness_lambda"));
}

TEST(Cli, OperatorFiles) {
  const auto diag = scratch("diag.json");
  std::ofstream(diag) << R"({"diagonal": [1, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125],
                             "y": [1, 0.25, 0.0625, 0.015625, 0.00390625, 0.0009765625, 0.000244140625, 6.103515625e-05]})";
  const auto r = run({"check", "--operator", diag.string(), "--condition", "standardsc", "--nu", "1", "--expect",
                      "Certified", "--no-timestamp"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto dense = scratch("dense.json");
  std::ofstream(dense) << R"({"matrix": [[2, 0], [0, 1], [0, 0]], "y": [2, 1, 0]})";
  EXPECT_EQ(run({"check", "--operator", dense.string(), "--condition", "hvi", "--nu", "1", "--expect", "Certified"}).code,
            0);
  const auto off = scratch("off.json");
  std::ofstream(off) << R"({"matrix": [[2, 0], [0, 1], [0, 0]], "y": [2, 1, 1]})";
  EXPECT_EQ(run({"check", "--operator", off.string(), "--condition", "hvi", "--nu", "1"}).code, 2);
  const auto broken = scratch("broken.json");
  std::ofstream(broken) << R"({"matrix": [[1, 2], [3]], "y": [1, 2]})";
  EXPECT_EQ(run({"check", "--operator", broken.string(), "--condition", "hvi", "--nu", "1"}).code, 2);
  EXPECT_EQ(run({"check", "--operator", "/nonexistent.json", "--condition", "hvi", "--nu", "1"}).code, 2);
  EXPECT_EQ(run({"check", "--operator", diag.string(), "--instance", "counter26", "--condition", "hvi", "--nu", "1"})
                .code,
            2);
}

TEST(ParseOperator, Fields) {
  using tikreg::json;
  const auto f = tikreg::parse_operator(json::parse(R"({"diagonal": [1, 0], "y": [3, 0], "truncated": true})"));
  EXPECT_TRUE(f.op.models_truncation());
  EXPECT_EQ(f.op.rank(), 1);
  EXPECT_FALSE(tikreg::parse_operator(json::parse(R"({"diagonal": [1], "y": [3]})")).op.models_truncation());
  EXPECT_THROW(tikreg::parse_operator(json::parse(R"({"diagonal": [1], "matrix": [[1]], "y": [1]})")),
               std::runtime_error);
  EXPECT_THROW(tikreg::parse_operator(json::parse(R"({"diagonal": [1, 2], "y": [1]})")), std::runtime_error);
  EXPECT_THROW(tikreg::parse_operator(json::parse(R"({"diagonal": ["a"], "y": [1]})")), std::runtime_error);
}
