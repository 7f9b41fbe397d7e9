// Copyright 2026 The RootProbe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rootprobe/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "stub_server.hpp"

namespace rootprobe::cli {
namespace {

namespace fs = std::filesystem;

const std::string kFixtures = ROOTPROBE_FIXTURES;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "rootprobe");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path TempDir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rootprobe_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(MakeAnswerer, Specs) {
  EXPECT_EQ(make_answerer("builtin")->kind(), AnswererKind::kBuiltinBaseline);
  EXPECT_EQ(make_answerer("oracle:type:23")->kind(), AnswererKind::kKeywordOracle);
  EXPECT_EQ(make_answerer("oracle:type:23:25")->kind(), AnswererKind::kKeywordOracle);
  EXPECT_EQ(make_answerer("scripted:" + kFixtures + "/type_only_script.json")->kind(),
            AnswererKind::kScripted);
  EXPECT_EQ(make_answerer("http:localhost:9")->kind(), AnswererKind::kRemote);
  EXPECT_EQ(make_answerer("http://localhost:9", 3)->max_inflight(), 3);
  EXPECT_THROW(make_answerer("oracle:type"), UsageError);
  EXPECT_THROW(make_answerer("oracle:type:x"), UsageError);
  EXPECT_THROW(make_answerer("scripted:/nonexistent.json"), UsageError);
  EXPECT_THROW(make_answerer("drqa"), UsageError);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(Invoke({}).code, 1);
  EXPECT_EQ(Invoke({"batch"}).code, 1);  // no --data
  EXPECT_EQ(Invoke({"batch", "--data", "x.json", "--model", "nope"}).code, 1);
  EXPECT_EQ(Invoke({"batch", "--data", "x.json", "--workers", "0"}).code, 1);
  EXPECT_EQ(Invoke({"batch", "--data", "x.json", "--format", "pdf"}).code, 1);
  EXPECT_EQ(Invoke({"batch", "--bogus"}).code, 1);
  EXPECT_EQ(Invoke({"--help"}).code, 0);
}

TEST(Cli, RuntimeFailureExitsTwo) {
  const auto dir = TempDir("runtime");
  const auto r = Invoke({"batch", "--data", "/nonexistent/squad.json", "--out", dir.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos);
  EXPECT_EQ(Invoke({"report", "--out", dir.string()}).code, 2);
}

TEST(Cli, BatchOracleFixture) {
  const auto dir = TempDir("oracle");
  const auto r = Invoke({"batch", "--data", kFixtures + "/squad_min.json", "--model",
                      "oracle:type:23", "--samples", "300", "--seed", "7", "--out",
                      dir.string(), "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(Slurp(dir / "report.json"));
  ASSERT_EQ(report.at("per_example").size(), 1);
  EXPECT_EQ(report.at("per_example")[0].at("root"), "type");
  EXPECT_EQ(report.at("metadata").at("examples_kept"), 1);
  EXPECT_EQ(report.at("metadata").at("examples_dropped"), 1);
  EXPECT_EQ(report.at("metadata").at("surrogate").at("seed"), 7);
  EXPECT_TRUE(fs::exists(dir / "report.csv"));
  EXPECT_TRUE(fs::exists(dir / "categories.csv"));
  EXPECT_TRUE(fs::exists(dir / "traces" / "00000_gc-type.json"));
  const auto run_meta = nlohmann::json::parse(Slurp(dir / "run_metadata.json"));
  EXPECT_EQ(run_meta.at("workers"), 1);
  EXPECT_TRUE(run_meta.contains("started_at"));
}

TEST(Cli, BatchIsReproducibleAndWorkerIndependent) {
  const auto a = TempDir("det_a"), b = TempDir("det_b"), c = TempDir("det_c");
  const std::vector<std::string> base = {"batch", "--data", kFixtures + "/squad5.json",
                                         "--samples", "200", "--seed", "7"};
  auto with = [&](const fs::path& dir, const std::string& workers) {
    auto args = base;
    args.insert(args.end(), {"--out", dir.string(), "--workers", workers});
    return Invoke(args);
  };
  ASSERT_EQ(with(a, "1").code, 0);
  ASSERT_EQ(with(b, "1").code, 0);
  ASSERT_EQ(with(c, "4").code, 0);
  EXPECT_EQ(Slurp(a / "report.json"), Slurp(b / "report.json"));
  EXPECT_EQ(Slurp(a / "report.json"), Slurp(c / "report.json"));
  EXPECT_FALSE(Slurp(a / "report.json").empty());
}

TEST(Cli, ReportReaggregatesStoredTraces) {
  const auto dir = TempDir("reagg");
  ASSERT_EQ(Invoke({"batch", "--data", kFixtures + "/squad5.json", "--samples", "100", "--out",
                 dir.string()})
                .code,
            0);
  const auto original = Slurp(dir / "report.json");
  fs::remove(dir / "report.json");
  ASSERT_EQ(Invoke({"report", "--out", dir.string()}).code, 0);
  EXPECT_EQ(Slurp(dir / "report.json"), original);

  ASSERT_EQ(Invoke({"report", "--out", dir.string(), "--pos-tags", kFixtures + "/pos_tags.json"}).code, 0);
  const auto tagged = nlohmann::json::parse(Slurp(dir / "report.json"));
  EXPECT_EQ(tagged.at("metadata").at("pos_source"), "tags:" + kFixtures + "/pos_tags.json");
}

TEST(Cli, ExplainWithZeroSamplesIsDegenerate) {
  const auto dir = TempDir("explain0");
  const auto r = Invoke({"explain", "--data", kFixtures + "/squad_min.json", "--model",
                      "oracle:type:23", "--samples", "0", "--out", dir.string(), "--format", "svg"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(Slurp(dir / "explanation.json"));
  EXPECT_EQ(j.at("target_class"), 23);
  EXPECT_EQ(j.at("target_token"), "sedimentary");
  const auto& e = j.at("explanation");
  for (const auto& c : e.at("coefficients")) EXPECT_EQ(c.at("coefficient").get<double>(), 0.0);
  EXPECT_EQ(e.at("intercept").get<double>(), KeywordOracle::kPeak);
  EXPECT_TRUE(fs::exists(dir / "coefficients.svg"));
}

TEST(Cli, ExplainSelectsById) {
  const auto dir = TempDir("explain_id");
  const auto r = Invoke({"explain", "--data", kFixtures + "/squad_min.json", "--id", "gc-river",
                      "--samples", "50", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(Slurp(dir / "explanation.json")).at("example_id"), "gc-river");
  EXPECT_EQ(Invoke({"explain", "--data", kFixtures + "/squad_min.json", "--id", "missing", "--out",
                 dir.string()})
                .code,
            2);
}

TEST(Cli, ReduceTypeOnlyScript) {
  const auto dir = TempDir("reduce");
  const auto r = Invoke({"reduce", "--data", kFixtures + "/squad_min.json", "--model",
                      "scripted:" + kFixtures + "/type_only_script.json", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("root question: type (1 of 10 words, 90% removed)"), std::string::npos)
      << r.out;
  const auto trace = nlohmann::json::parse(Slurp(dir / "traces" / "00000_gc-type.json"));
  EXPECT_EQ(trace.at("root").at("percent_removed"), 0.9);
}

TEST(Cli, ReduceRecomputeFlag) {
  const auto dir = TempDir("reduce_recompute");
  const auto r = Invoke({"reduce", "--data", kFixtures + "/squad_min.json", "--model",
                      "oracle:type:23", "--samples", "100", "--recompute-coefficients", "--out",
                      dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("root question: type "), std::string::npos);
}

TEST(Cli, CheckModel) {
  EXPECT_EQ(Invoke({"check-model"}).code, 0);
  EXPECT_EQ(Invoke({"check-model", "--model", "oracle:type:1"}).code, 0);

  BaselineAnswerer baseline;
  testing::StubServer good(baseline);
  const auto ok = Invoke({"check-model", "--model", "http:" + good.url()});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_NE(ok.out.find("health: ok"), std::string::npos);

  testing::StubServer bad(baseline, [](auto& j) { j["start_distribution"][0] = 3.0; });
  const auto broken = Invoke({"check-model", "--model", "http:" + bad.url()});
  EXPECT_EQ(broken.code, 2);
  EXPECT_NE(broken.err.find("sums to"), std::string::npos);
}

TEST(Cli, ModelUrlEnvironmentFallback) {
  BaselineAnswerer baseline;
  testing::StubServer server(baseline);
  ::setenv(kModelUrlEnv, server.url().c_str(), 1);
  const auto r = Invoke({"check-model"});
  ::unsetenv(kModelUrlEnv);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("remote"), std::string::npos);
}

TEST(Cli, BatchThroughRemoteAnswerer) {
  BaselineAnswerer baseline;
  testing::StubServer server(baseline);
  const auto remote_dir = TempDir("remote"), local_dir = TempDir("local");
  const std::vector<std::string> common = {"batch", "--data", kFixtures + "/squad5.json",
                                           "--samples", "50", "--workers", "3"};
  auto args = common;
  args.insert(args.end(), {"--model", "http:" + server.url(), "--max-inflight", "2", "--out",
                           remote_dir.string()});
  ASSERT_EQ(Invoke(args).code, 0);
  args = common;
  args.insert(args.end(), {"--out", local_dir.string()});
  ASSERT_EQ(Invoke(args).code, 0);
  EXPECT_LE(server.peak_inflight(), 2);
  const auto remote = nlohmann::json::parse(Slurp(remote_dir / "report.json"));
  const auto local = nlohmann::json::parse(Slurp(local_dir / "report.json"));
  EXPECT_EQ(remote.at("per_example"), local.at("per_example"));
}

}  // namespace
}  // namespace rootprobe::cli
