// Copyright (c) 2026 The leakmeter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <filesystem>
#include <map>
#include <sstream>

#include "json.hpp"
#include "leakmeter/ingestion.h"
#include "test_util.h"

namespace leakmeter {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "leakmeter");
  std::ostringstream out, err;
  int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> EmbFlags(const fs::path& dir) {
  return {"--emb", "sim:orig=" + (dir / "sim_orig.xvec").string(),
          "--emb", "sim:deid:1=" + (dir / "sim_deid_p1.xvec").string(),
          "--emb", "sim:deid:2=" + (dir / "sim_deid_p2.xvec").string()};
}

std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files[e.path().filename().string()] = ReadFileBytes(e.path());
  return files;
}

void Append(std::vector<std::string>* a, const std::vector<std::string>& b) {
  a->insert(a->end(), b.begin(), b.end());
}

TEST(CliTest, SimulateWritesCorpus) {
  TempDir dir;
  auto r = Cli({"simulate", "--preset", "tiny", "--out", dir.path().string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"manifest.jsonl", "sim_orig.xvec", "sim_deid_p1.xvec",
                        "sim_deid_p2.xvec", "truth.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_NE(r.out.find("--emb sim:deid:2="), std::string::npos);
  std::vector<std::string> v{"validate", "--manifest", (dir / "manifest.jsonl").string()};
  Append(&v, EmbFlags(dir.path()));
  auto val = Cli(v);
  EXPECT_EQ(val.code, kExitOk) << val.err;
  EXPECT_NE(val.out.find("ok"), std::string::npos);
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({}).code, kExitUsageError);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitUsageError);
  EXPECT_EQ(Cli({"simulate", "--preset", "nope", "--out", "/tmp/x"}).code,
            kExitUsageError);
  EXPECT_EQ(Cli({"eval", "--bogus"}).code, kExitUsageError);
  EXPECT_EQ(Cli({"eval", "--emb", "a:orig=x"}).code, kExitUsageError);
  EXPECT_EQ(Cli({"trials", "--manifest", "m", "--profiles", "one"}).code,
            kExitUsageError);
  EXPECT_EQ(Cli({"eval", "--manifest", "m", "--emb", "bad"}).code, kExitUsageError);
  EXPECT_EQ(Cli({"--help"}).code, kExitOk);
}

TEST(CliTest, MissingManifestIsDomainError) {
  TempDir dir;
  const auto missing = (dir / "absent.jsonl").string();
  auto r = Cli({"eval", "--manifest", missing, "--emb", "a:orig=x.xvec"});
  EXPECT_EQ(r.code, kExitDomainError);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST(CliTest, ValidateRejectsBrokenCorpus) {
  TempDir dir;
  ASSERT_EQ(Cli({"simulate", "--preset", "tiny", "--out", dir.path().string()}).code, 0);
  // Declare only two of the three files: profile-2 rows go missing.
  auto flags = EmbFlags(dir.path());
  flags.resize(4);
  std::vector<std::string> v{"validate", "--manifest", (dir / "manifest.jsonl").string()};
  Append(&v, flags);
  auto r = Cli(v);
  EXPECT_EQ(r.code, kExitDomainError);
  EXPECT_NE(r.out.find("missing embeddings"), std::string::npos);
}

TEST(CliTest, PipelineIsReproducible) {
  TempDir root;
  std::vector<std::map<std::string, std::string>> runs;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path d = root / ("run" + std::to_string(rep));
    const std::string m = (d / "manifest.jsonl").string();
    ASSERT_EQ(Cli({"simulate", "--preset", "tiny", "--out", d.string()}).code, 0);
    auto t = Cli({"trials", "--manifest", m, "--out", (d / "trials.csv").string(),
                  "--seed", "4"});
    ASSERT_EQ(t.code, 0) << t.err;
    std::vector<std::string> s{"score", "--manifest", m, "--trials",
                               (d / "trials.csv").string(), "--out",
                               (d / "scores.csv").string()};
    Append(&s, EmbFlags(d));
    auto sr = Cli(s);
    ASSERT_EQ(sr.code, 0) << sr.err;
    std::vector<std::string> e{"eval", "--manifest", m, "--out", (d / "eval").string(),
                               "--seed", "4", "--jobs", rep ? "4" : "1"};
    Append(&e, EmbFlags(d));
    auto er = Cli(e);
    ASSERT_EQ(er.code, 0) << er.err;
    auto rr = Cli({"report", "--in", (d / "eval" / "report.json").string(), "--out",
                   (d / "eval").string()});
    ASSERT_EQ(rr.code, 0) << rr.err;
    auto files = Snapshot(d);
    for (auto& [k, v] : Snapshot(d / "eval")) files["eval/" + k] = v;
    runs.push_back(files);
  }
  EXPECT_TRUE(runs[0].count("eval/report.json"));
  EXPECT_TRUE(runs[0].count("eval/cmc_hit_rate.csv"));
  EXPECT_TRUE(runs[0].count("eval/cmc_average.csv"));
  ASSERT_EQ(runs[0].size(), runs[1].size());
  for (const auto& [name, bytes] : runs[0]) EXPECT_EQ(bytes, runs[1].at(name)) << name;
}

TEST(CliTest, EvalUsesTrialFile) {
  TempDir d;
  const std::string m = (d / "manifest.jsonl").string();
  ASSERT_EQ(Cli({"simulate", "--preset", "tiny", "--out", d.path().string()}).code, 0);
  ASSERT_EQ(Cli({"trials", "--manifest", m, "--scenario", "set2", "--out",
                 (d / "t.csv").string()})
                .code,
            0);
  std::vector<std::string> e{"eval", "--manifest", m, "--trials", (d / "t.csv").string(),
                             "--scenario", "set2", "--no-identification",
                             "--no-subspace"};
  Append(&e, EmbFlags(d.path()));
  auto r = Cli(e);
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  // Trial files carry no profile column, so both profiles pool into one cell.
  ASSERT_EQ(j.at("verification").size(), 1u);
  const auto& cell = j.at("verification")[0];
  EXPECT_EQ(cell.at("profiles"), nlohmann::json({1, 2}));
  const std::string csv = ReadFileBytes(d / "t.csv");
  size_t targets = 0;
  for (size_t pos = 0; (pos = csv.find(",target,", pos)) != std::string::npos; ++pos)
    ++targets;
  EXPECT_EQ(cell.at("n_target"), targets);
  EXPECT_TRUE(j.at("identification").empty());
}

TEST(CliTest, FlagsOverrideConfig) {
  TempDir d;
  ASSERT_EQ(Cli({"simulate", "--preset", "tiny", "--out", d.path().string()}).code, 0);
  nlohmann::json cfg;
  cfg["manifest"] = (d / "manifest.jsonl").string();
  cfg["embeddings"] = {"sim:orig=" + (d / "sim_orig.xvec").string(),
                       "sim:deid:1=" + (d / "sim_deid_p1.xvec").string(),
                       "sim:deid:2=" + (d / "sim_deid_p2.xvec").string()};
  cfg["seed"] = 5;
  cfg["metrics"] = {{"verification", true}, {"identification", false}, {"subspace", false}};
  WriteFileBytes(d / "cfg.json", cfg.dump());
  auto from_file = Cli({"eval", "--config", (d / "cfg.json").string()});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  auto j = nlohmann::json::parse(from_file.out);
  EXPECT_EQ(j.at("provenance").at("seed"), 5);
  EXPECT_TRUE(j.at("subspace").empty());

  auto flagged = Cli({"eval", "--config", (d / "cfg.json").string(), "--seed", "7"});
  ASSERT_EQ(flagged.code, 0) << flagged.err;
  auto k = nlohmann::json::parse(flagged.out);
  EXPECT_EQ(k.at("provenance").at("seed"), 7);
  EXPECT_NE(k.at("provenance").at("config_hash"), j.at("provenance").at("config_hash"));

  WriteFileBytes(d / "bad.json", R"({"manifest": "m", "colour": 1})");
  auto bad = Cli({"eval", "--config", (d / "bad.json").string()});
  EXPECT_EQ(bad.code, kExitUsageError);
}

}  // namespace
}  // namespace leakmeter
