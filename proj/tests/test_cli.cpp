// Copyright 2026 The rmkit Authors
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

#include <unistd.h>

#include <sstream>

#include "cli.hpp"
#include "gtest/gtest.h"

using namespace rmkit;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rmkit_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string config(const std::string& name, const std::string& text) {
    auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  int run(std::vector<std::string> args, std::string* err = nullptr) {
    std::ostringstream es;
    int code = cli::run(std::move(args), es);
    if (err) *err = es.str();
    return code;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Data lines of a metadata-prefixed CSV.
  static std::vector<std::string> csv_rows(const fs::path& p) {
    std::vector<std::string> out;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);)
      if (!line.empty() && line[0] != '#') out.push_back(line);
    return out;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, config_errors_exit_2) {
  std::string err;
  EXPECT_EQ(run({"estimate", "--config", config("c.json", R"({"n": 2, "foo": 1, "bar": 2})"), "--out",
                 (dir_ / "o").string()},
                &err),
            2);
  EXPECT_NE(err.find("bar, foo"), std::string::npos) << err;
  EXPECT_EQ(run({"estimate", "--config", config("cap.json", R"({"n": 9})")}, &err), 2);
  EXPECT_NE(err.find("outside"), std::string::npos);
  EXPECT_EQ(run({"estimate", "--config", config("t.json", R"({"n": "two"})")}), 2);
  EXPECT_EQ(run({"estimate", "--config", config("j.json", "{")}), 2);
  EXPECT_EQ(run({"estimate", "--config", (dir_ / "missing.json").string()}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"lgt-energy", "--config", config("odd.json", R"({"triangles": [3]})")}), 2);
  EXPECT_EQ(run({"estimate", "--config", config("w.json", R"({"n": 2, "observable": [[1.0, "XXX"]]})")}), 2);
}

TEST_F(CliTest, numerical_failure_exit_3) {
  // three members cannot represent a generic 2-qubit term
  std::string err;
  EXPECT_EQ(run({"estimate", "--config",
                 config("c.json", R"({"n": 2, "members": 3, "observable": [[1, "XY"], [0.5, "ZZ"], [0.3, "YX"]]})"),
                 "--out", dir_.string()},
                &err),
            3);
  EXPECT_NE(err.find("numerical failure"), std::string::npos) << err;
}

TEST_F(CliTest, bias_scan_default_bowl) {
  ASSERT_EQ(run({"bias-scan", "--out", dir_.string()}), 0);
  auto rows = csv_rows(dir_ / "bias_scan.csv");
  ASSERT_EQ(rows.size(), 27u);  // header, lambda = 0, 25 grid points
  EXPECT_EQ(rows[0], "lambda_or_alpha,bias,var_bound,error_bound,shots_at");
  std::vector<double> err;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<std::string> f;
    std::stringstream ss(rows[i]);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    ASSERT_EQ(f.size(), 5u);
    err.push_back(std::stod(f[3]));
  }
  auto bowl = cli::bowl_shape(err);
  EXPECT_TRUE(bowl.interior);
  EXPECT_GE(bowl.margin, 0.05);
  auto j = cli::json::parse(slurp(dir_ / "bias_scan.json"));
  EXPECT_TRUE(j["interior_minimum"].get<bool>());
  EXPECT_NEAR(j["margin"].get<double>(), bowl.margin, 1e-8);  // CSV keeps 10 digits
}

TEST_F(CliTest, lgt_energy_default_table) {
  ASSERT_EQ(run({"lgt-energy", "--out", dir_.string()}), 0);
  auto rows = csv_rows(dir_ / "lgt_energy.csv");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "strategy,n_qubits,M_terms,epsilon,delta,var_bound_link,Q_variant,N_shots");
  EXPECT_EQ(rows[1].rfind("plain-CS,6,10,0.1,0.1,", 0), 0u);
  std::vector<long> n;
  for (std::size_t i = 1; i < 5; ++i) n.push_back(std::stol(rows[i].substr(rows[i].rfind(',') + 1)));
  EXPECT_LE(n[3], n[1]);
  EXPECT_LE(n[1], n[0]);
  EXPECT_LE(n[3], n[2]);
  EXPECT_LE(n[2], n[0]);
  auto j = cli::json::parse(slurp(dir_ / "lgt_energy.json"));
  EXPECT_TRUE(j["ordering_ok"].get<bool>());
  EXPECT_TRUE(j["link_dominates"].get<bool>());
  EXPECT_EQ(j["meta"]["params"]["epsilon"].get<double>(), 0.1);
  EXPECT_EQ(j["meta"]["params"]["delta"].get<double>(), 0.1);
}

TEST_F(CliTest, metadata_headers) {
  std::string cfg = config("c.json", R"({"n": 2, "shots": 200, "records": true})");
  ASSERT_EQ(run({"estimate", "--config", cfg, "--seed", "42", "--out", dir_.string()}), 0);
  auto j = cli::json::parse(slurp(dir_ / "estimate.json"));
  EXPECT_EQ(j["meta"]["seed"].get<std::uint64_t>(), 42u);
  EXPECT_EQ(j["meta"]["subcommand"], "estimate");
  EXPECT_EQ(j["meta"]["modules"].size(), 10u);
  std::string hash = j["meta"]["config_hash"];
  EXPECT_EQ(hash.size(), 16u);
  std::string csv = slurp(dir_ / "records.csv");
  EXPECT_EQ(csv.rfind("# rmkit", 0), 0u);
  EXPECT_NE(csv.find("seed=42 config_hash=" + hash), std::string::npos);
  EXPECT_EQ(csv_rows(dir_ / "records.csv").size(), 201u);
  // a different config hashes differently
  cli::Config a(cli::json::parse(R"({"n": 2})")), b(cli::json::parse(R"({"n": 3})"));
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash(), cli::Config(cli::json::parse(R"({ "n" : 2 })")).hash());
}

TEST_F(CliTest, estimate_is_close_to_exact) {
  ASSERT_EQ(run({"estimate", "--config", config("c.json", R"({"n": 2, "shots": 20000, "state": "random"})"), "--out",
                 dir_.string()}),
            0);
  auto j = cli::json::parse(slurp(dir_ / "estimate.json"));
  EXPECT_NEAR(j["estimate"].get<double>(), j["exact"].get<double>(), 5 * j["predicted_std_error"].get<double>());
  for (const char* e : {"su2", "cl2"}) {
    std::string cfg = config(std::string(e) + ".json",
                             std::string(R"({"n": 2, "shots": 20000, "state": "zero", "ensemble": ")") + e + "\"}");
    ASSERT_EQ(run({"estimate", "--config", cfg, "--out", (dir_ / e).string()}), 0);
    auto k = cli::json::parse(slurp(dir_ / e / "estimate.json"));
    EXPECT_NEAR(k["estimate"].get<double>(), k["exact"].get<double>(), 5 * k["predicted_std_error"].get<double>());
  }
}

TEST_F(CliTest, self_checks_pass) {
  ASSERT_EQ(run({"channel-check", "--config", config("c.json", R"({"samples": 20000, "trials": 2})"), "--out",
                 dir_.string()}),
            0);
  EXPECT_TRUE(cli::json::parse(slurp(dir_ / "channel_check.json"))["pass"].get<bool>());
  ASSERT_EQ(run({"basis-audit", "--config", config("b.json", R"({"n_max": 3, "samples": 20})"), "--out",
                 dir_.string()}),
            0);
  auto j = cli::json::parse(slurp(dir_ / "basis_audit.json"));
  EXPECT_EQ(j["rows"][1]["sets"].get<int>(), 13);
}

TEST_F(CliTest, byte_identical_across_runs_and_threads) {
  struct Case {
    std::string sub, cfg;
    std::vector<std::string> files;
  };
  std::vector<Case> cases = {
      {"estimate", R"({"n": 3, "observable": "triangle", "shots": 3000, "records": true})",
       {"estimate.json", "records.csv"}},
      {"bias-scan", "{}", {"bias_scan.csv", "bias_scan.json"}},
      {"bias-scan", R"({"mode": "alpha", "alphas": [0.5, 1.0]})", {"bias_scan.csv"}},
      {"lgt-energy", R"({"triangles": [2, 4]})", {"lgt_energy.csv", "lgt_energy.json"}},
      {"channel-check", R"({"samples": 5000, "trials": 1})", {"channel_check.json"}},
      {"phase-classify", R"({"counts": 3, "depth": [0, 1], "n_rp": 800, "n_su2": 100})",
       {"phase_classify.json", "kernel_d0.csv", "kernel_d1.csv"}},
  };
  int idx = 0;
  for (const auto& c : cases) {
    std::string cfg = config("case" + std::to_string(idx) + ".json", c.cfg);
    std::vector<fs::path> outs;
    for (const char* threads : {"1", "1", "3"}) {
      fs::path o = dir_ / ("out" + std::to_string(idx++));
      ASSERT_EQ(run({c.sub, "--config", cfg, "--seed", "7", "--threads", threads, "--out", o.string()}), 0) << c.sub;
      outs.push_back(o);
    }
    for (const auto& f : c.files) {
      std::string ref = slurp(outs[0] / f);
      EXPECT_FALSE(ref.empty()) << f;
      EXPECT_EQ(ref, slurp(outs[1] / f)) << c.sub << " " << f;
      EXPECT_EQ(ref, slurp(outs[2] / f)) << c.sub << " " << f << " (threads)";
    }
  }
  // a different seed changes the output
  fs::path a = dir_ / "s1", b = dir_ / "s2";
  ASSERT_EQ(run({"estimate", "--seed", "1", "--out", a.string()}), 0);
  ASSERT_EQ(run({"estimate", "--seed", "2", "--out", b.string()}), 0);
  EXPECT_NE(slurp(a / "estimate.json"), slurp(b / "estimate.json"));
}

TEST_F(CliTest, phase_classify_output) {
  ASSERT_EQ(run({"phase-classify", "--config",
                 config("c.json", R"({"counts": 3, "depth": 0, "n_rp": 1500, "n_su2": 200})"), "--out",
                 dir_.string()}),
            0);
  auto j = cli::json::parse(slurp(dir_ / "phase_classify.json"));
  ASSERT_EQ(j["states"].size(), 6u);
  EXPECT_EQ(j["states"][0]["phase_label"], "trivial");
  EXPECT_EQ(j["states"][5]["phase_label"], "toric");
  EXPECT_EQ(j["states"][0]["depth"].get<int>(), 0);
  EXPECT_TRUE(j["depths"][0]["separable"].get<bool>());
  auto rows = csv_rows(dir_ / "kernel_d0.csv");
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].substr(0, 2), "1,");
}
