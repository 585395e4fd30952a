// Licensed to the Apache Software Foundation (ASF) under one
// or more contributor license agreements.  See the NOTICE file
// distributed with this work for additional information
// regarding copyright ownership.  The ASF licenses this file
// to you under the Apache License, Version 2.0 (the
// "License"); you may not use this file except in compliance
// with the License.  You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing,
// software distributed under the License is distributed on an
// "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, either express or implied.  See the License for the
// specific language governing permissions and limitations
// under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "skewjoin_cli/cli.hpp"

namespace skewjoin::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("skewjoin_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        unsetenv("SKEWJOIN_SEED");
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run_cli(std::vector<std::string> args) {
        args.insert(args.begin(), "skewjoin");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return run(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }

    void gen(const std::string& name, std::uint64_t seed, std::uint64_t n_uniform, std::uint64_t record_bytes = 8) {
        ASSERT_EQ(run_cli({"gen", "--alpha", "0.9", "--record-bytes", std::to_string(record_bytes), "--n-uniform",
                           std::to_string(n_uniform), "--n-zipf", "300", "--zipf-domain", "40",
                           "--uniform-key-space", "200", "--seed", std::to_string(seed), "--out", path(name)}),
                  kOk)
            << err_.str();
    }

    fs::path dir_;
    std::ostringstream out_;
    std::ostringstream err_;
};

TEST_F(CliTest, GenerateWritesFileAndSummary) {
    EXPECT_EQ(run_cli({"gen", "--alpha", "0.65", "--record-bytes", "100", "--n-uniform", "100", "--n-zipf", "20",
                       "--out", path("d.tsv")}),
              kOk);
    EXPECT_NE(out_.str().find("120 records"), std::string::npos);
    const std::string text = slurp(path("d.tsv"));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 120);
    EXPECT_EQ(text.find('\n'), text.find('\t') + 201);
}

TEST_F(CliTest, GenerateMissingOutIsUsageError) {
    EXPECT_EQ(run_cli({"gen", "--alpha", "1"}), kUsage);
    EXPECT_EQ(run_cli({}), kUsage);
    EXPECT_EQ(run_cli({"frobnicate"}), kUsage);
}

TEST_F(CliTest, GenerateSameSeedSameBytes) {
    gen("a.tsv", 5, 100);
    gen("b.tsv", 5, 100);
    gen("c.tsv", 6, 100);
    EXPECT_EQ(slurp(path("a.tsv")), slurp(path("b.tsv")));
    EXPECT_NE(slurp(path("a.tsv")), slurp(path("c.tsv")));
}

TEST_F(CliTest, SeedFromEnvironment) {
    setenv("SKEWJOIN_SEED", "5", 1);
    ASSERT_EQ(run_cli({"gen", "--alpha", "0.9", "--record-bytes", "8", "--n-uniform", "100", "--n-zipf", "300",
                       "--zipf-domain", "40", "--uniform-key-space", "200", "--out", path("env.tsv")}),
              kOk);
    unsetenv("SKEWJOIN_SEED");
    gen("flag.tsv", 5, 100);
    EXPECT_EQ(slurp(path("env.tsv")), slurp(path("flag.tsv")));
    setenv("SKEWJOIN_SEED", "abc", 1);
    EXPECT_EQ(run_cli({"gen", "--out", path("x.tsv")}), kUsage);
    unsetenv("SKEWJOIN_SEED");
}

TEST_F(CliTest, JoinWritesRowsAndMetrics) {
    gen("r.tsv", 1, 400);
    gen("s.tsv", 2, 50);
    ASSERT_EQ(run_cli({"join", "--r", path("r.tsv"), "--s", path("s.tsv"), "--algo", "am", "--mode", "full",
                       "--lambda", "3", "--executors", "16", "--out", path("o.tsv"), "--metrics", path("m.json"),
                       "--verify"}),
              kOk)
        << err_.str();
    EXPECT_NE(out_.str().find("verify: ok"), std::string::npos);
    const auto m = nlohmann::json::parse(slurp(path("m.json")));
    for (const char* field : {"stages", "shuffledBytes", "broadcastBytes", "emittedRecordsPerExecutor",
                              "emittedBytesPerExecutor", "seed", "algorithm", "mode", "totalRows"}) {
        EXPECT_TRUE(m.contains(field)) << field;
    }
    EXPECT_EQ(m["executors"], 16);
    EXPECT_EQ(m["emittedRecordsPerExecutor"].size(), 16u);
    EXPECT_EQ(m["algorithm"], "am");
    const std::string rows = slurp(path("o.tsv"));
    EXPECT_EQ(static_cast<std::uint64_t>(std::count(rows.begin(), rows.end(), '\n')), m["totalRows"].get<std::uint64_t>());
}

TEST_F(CliTest, EveryAlgorithmVerifies) {
    gen("r.tsv", 3, 400);
    gen("s.tsv", 4, 60);
    const std::vector<std::pair<std::string, std::string>> pairs{
        {"tree-basic", "inner"}, {"tree", "inner"},     {"am", "inner"},       {"am", "left"},
        {"am", "right"},         {"am", "full"},        {"shuffle", "inner"},  {"shuffle", "left"},
        {"shuffle", "right"},    {"shuffle", "full"},   {"ib", "inner"},       {"ib-left", "left"},
        {"ib-right", "right"},   {"ib-full", "full"},   {"der", "full"},       {"ddr", "full"}};
    for (const auto& [algo, mode] : pairs) {
        EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--s", path("s.tsv"), "--algo", algo, "--mode", mode,
                           "--executors", "5", "--verify"}),
                  kOk)
            << algo << " " << mode << ": " << err_.str();
    }
    EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--algo", "self-tree", "--mode", "self", "--verify"}), kOk);
    EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--algo", "am", "--mode", "self", "--verify"}), kOk);
}

TEST_F(CliTest, JoinUsageErrors) {
    gen("r.tsv", 1, 50);
    EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--s", path("r.tsv"), "--algo", "tree-basic", "--mode",
                       "full"}),
              kUsage);
    EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--s", path("r.tsv"), "--algo", "self-tree", "--mode",
                       "inner"}),
              kUsage);
    EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--s", path("r.tsv"), "--algo", "nope"}), kUsage);
    EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--s", path("r.tsv"), "--mode", "sideways"}), kUsage);
    EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--algo", "am", "--mode", "inner"}), kUsage);
    EXPECT_EQ(run_cli({"join", "--s", path("r.tsv")}), kUsage);
    EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--s", path("r.tsv"), "--executors", "0"}), kUsage);
}

TEST_F(CliTest, IndexOverMemoryIsCapacityError) {
    gen("r.tsv", 1, 100);
    gen("s.tsv", 2, 100);
    EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--s", path("s.tsv"), "--algo", "ib", "--memory", "64"}),
              kCapacity);
    EXPECT_NE(err_.str().find("capacity"), std::string::npos);
    // am falls back to shuffling instead
    EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--s", path("s.tsv"), "--algo", "am", "--memory", "100000",
                       "--verify"}),
              kOk);
}

TEST_F(CliTest, InputErrors) {
    EXPECT_EQ(run_cli({"join", "--r", path("missing.tsv"), "--s", path("missing.tsv")}), kInputOutput);
    std::ofstream(path("bad.tsv")) << "1\tzz\n";
    EXPECT_EQ(run_cli({"join", "--r", path("bad.tsv"), "--s", path("bad.tsv")}), kInputOutput);
    EXPECT_NE(err_.str().find("line 1"), std::string::npos);
    gen("r.tsv", 1, 20);
    EXPECT_EQ(run_cli({"join", "--r", path("r.tsv"), "--s", path("r.tsv"), "--out", path("no/dir/o.tsv")}),
              kInputOutput);
}

TEST_F(CliTest, BenchSweep) {
    const std::vector<std::string> args{"bench", "--algos", "am,shuffle", "--alphas", "0,0.25,0.5,0.75,1",
                                        "--executors", "8", "--n-uniform", "2000", "--n-zipf", "500",
                                        "--record-bytes", "8", "--seed", "3"};
    ASSERT_EQ(run_cli(args), kOk) << err_.str();
    const std::string first = out_.str();
    std::istringstream lines(first);
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, kBenchHeader);
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        EXPECT_TRUE(line.ends_with(",ok")) << line;
    }
    EXPECT_EQ(rows, 10);
    ASSERT_EQ(run_cli(args), kOk);
    EXPECT_EQ(out_.str(), first);
}

TEST_F(CliTest, BenchRecordsFailuresAndContinues) {
    ASSERT_EQ(run_cli({"bench", "--algos", "ib,shuffle,tree-basic", "--modes", "inner,full", "--alphas", "1",
                       "--executors", "4", "--n-uniform", "500", "--n-zipf", "100", "--memory", "64", "--out",
                       path("b.csv")}),
              kOk)
        << err_.str();
    const std::string csv = slurp(path("b.csv"));
    EXPECT_NE(csv.find("ib,inner,1,4,1,0,0,0,0,0,capacity-error"), std::string::npos);
    EXPECT_NE(csv.find("tree-basic,full,1,4,1,0,0,0,0,0,unsupported"), std::string::npos);
    EXPECT_NE(csv.find("shuffle,full,1,4,1,"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(CliAlgorithms, PairTable) {
    EXPECT_TRUE(supports(Algorithm::kTreeBasic, JoinMode::kInner));
    EXPECT_FALSE(supports(Algorithm::kTreeBasic, JoinMode::kLeftOuter));
    EXPECT_TRUE(supports(Algorithm::kSelfTree, JoinMode::kSelfSameAttribute));
    EXPECT_FALSE(supports(Algorithm::kShuffle, JoinMode::kSelfSameAttribute));
    EXPECT_TRUE(supports(Algorithm::kDdr, JoinMode::kFullOuter));
    for (auto name : {"tree-basic", "tree", "self-tree", "am", "shuffle", "ib", "ib-left", "ib-right", "ib-full",
                      "der", "ddr"}) {
        const auto a = parse_algorithm(name);
        ASSERT_TRUE(a.has_value()) << name;
        EXPECT_EQ(to_string(*a), name);
    }
    EXPECT_FALSE(parse_algorithm("AM").has_value());
}

}  // namespace
}  // namespace skewjoin::cli
