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

#include "leakmeter/verify.h"

#include <algorithm>
#include <cmath>

#include "leakmeter/rng.h"
#include "leakmeter/synthsim.h"
#include "test_util.h"

namespace leakmeter {
namespace {

using testing::Deid;
using testing::Orig;

// Exhaustive threshold sweep, O(n^2): for every candidate threshold count the
// errors directly and keep the point where max(FAR, FRR) is smallest.
struct BruteEer {
  double eer;
  double step;  // widest single jump of FAR or FRR between candidates
};

BruteEer BruteForceEer(const std::vector<double>& tar,
                       const std::vector<double>& non) {
  std::vector<double> cand(tar);
  cand.insert(cand.end(), non.begin(), non.end());
  cand.push_back(std::numeric_limits<double>::infinity());
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  double best = 2.0, step = 0.0, prev_far = 1.0, prev_frr = 0.0;
  for (double th : cand) {
    double fr = 0, fa = 0;
    for (double t : tar) fr += t < th;
    for (double n : non) fa += n >= th;
    fr /= static_cast<double>(tar.size());
    fa /= static_cast<double>(non.size());
    best = std::min(best, std::max(fa, fr));
    step = std::max({step, prev_far - fa, fr - prev_frr});
    prev_far = fa;
    prev_frr = fr;
  }
  return {best, step};
}

TEST(CosineTest, Examples) {
  std::vector<double> x{1, 0}, y{0, 1}, z{1, 1};
  EXPECT_DOUBLE_EQ(CosineScore(x, x), 1.0);
  EXPECT_DOUBLE_EQ(CosineScore(x, y), 0.0);
  EXPECT_NEAR(CosineScore(x, z), 0.70710678118654752, 1e-15);
}

TEST(CosineTest, Errors) {
  std::vector<double> x{1, 0}, zero{0, 0}, three{1, 2, 3};
  EXPECT_LEAKMETER_ERROR(CosineScore(x, zero), ErrorCode::kZeroNormVector);
  EXPECT_LEAKMETER_ERROR(CosineScore(x, three), ErrorCode::kDimensionMismatch);
}

TEST(ScoreTrialsTest, SingleTrial) {
  auto m = BuildManifest({Orig("a", "A", "s1"), Deid("b", "A", "s2", 1)});
  EmbeddingMatrix e{"m", 2, {"a", "b"}, {1, 0, 1, 1}};
  auto list = GenerateSet1(m, 1);
  ASSERT_EQ(list.trials.size(), 1u);
  auto s = ScoreTrials(list, m, e);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.labels[0], Label::kTarget);
  EXPECT_NEAR(s.scores[0], std::sqrt(0.5), 1e-15);
  auto csv = EncodeScoresCsv(list, m, s);
  auto back = ParseScoresCsv(csv);
  EXPECT_EQ(back.ids[0], (std::pair<std::string, std::string>{"a", "b"}));
  EXPECT_EQ(back.scores.scores, s.scores);
}

TEST(ScoreTrialsTest, MissingEmbeddingNamesId) {
  auto m = BuildManifest({Orig("a", "A", "s1"), Deid("b", "A", "s2", 1)});
  EmbeddingMatrix e{"m", 2, {"a"}, {1, 0}};
  try {
    ScoreTrials(GenerateSet1(m, 1), m, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kMissingEmbedding);
    EXPECT_NE(std::string(err.what()).find("b"), std::string::npos);
  }
}

TEST(ScoreTrialsTest, ParallelMatchesSequential) {
  auto sim = Simulate(Preset("decoupling_b"));
  auto emb = sim.Combined();
  TrialOptions o;
  o.seed = 1;
  auto list = GenerateSet1(sim.manifest, 1, o);
  ASSERT_GT(list.trials.size(), 10000u);
  auto a = ScoreTrials(list, sim.manifest, emb, 1);
  for (int jobs : {2, 3, 8}) {
    auto b = ScoreTrials(list, sim.manifest, emb, jobs);
    EXPECT_EQ(a.scores, b.scores);
    EXPECT_EQ(a.labels, b.labels);
  }
}

TEST(EerTest, PerfectSeparation) {
  std::vector<double> tar{0.9, 0.8, 0.7}, non{0.1, 0.2, 0.3};
  EXPECT_DOUBLE_EQ(ComputeEer(tar, non).eer, 0.0);
}

TEST(EerTest, HandExample) {
  std::vector<double> tar{0.9, 0.8, 0.2}, non{0.7, 0.1, 0.05};
  auto r = ComputeEer(tar, non);
  EXPECT_NEAR(r.eer, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(BruteForceEer(tar, non).eer, 1.0 / 3.0, 1e-15);
}

TEST(EerTest, SameDistribution) {
  Rng rng(2024);
  std::vector<double> tar(100000), non(100000);
  for (double& v : tar) v = rng.Normal();
  for (double& v : non) v = rng.Normal();
  EXPECT_NEAR(ComputeEer(tar, non).eer, 0.5, 0.01);
}

TEST(EerTest, MatchesBruteForceOnRandomSets) {
  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    const size_t nt = 1 + rng.UniformIndex(200);
    const size_t nn = 1 + rng.UniformIndex(200);
    const double shift = 2 * rng.Uniform();
    const bool coarse = rng.Uniform() < 0.3;  // force ties
    std::vector<double> tar(nt), non(nn);
    for (double& v : tar) v = rng.Normal() + shift;
    for (double& v : non) v = rng.Normal();
    if (coarse) {
      for (double& v : tar) v = std::round(v * 2) / 2;
      for (double& v : non) v = std::round(v * 2) / 2;
    }
    auto brute = BruteForceEer(tar, non);
    EXPECT_LE(std::abs(ComputeEer(tar, non).eer - brute.eer),
              brute.step + 1e-12)
        << "instance " << i;
  }
}

TEST(EerTest, MonotoneTransformInvariance) {
  Rng rng(5);
  std::vector<double> tar(500), non(700);
  for (double& v : tar) v = rng.Normal() + 1;
  for (double& v : non) v = rng.Normal();
  auto f = [](double x) { return x * x * x + 2 * x - 7; };
  std::vector<double> ft, fn;
  for (double v : tar) ft.push_back(f(v));
  for (double v : non) fn.push_back(f(v));
  EXPECT_DOUBLE_EQ(ComputeEer(tar, non).eer, ComputeEer(ft, fn).eer);
  std::vector<double> et, en;
  for (double v : tar) et.push_back(std::exp(v));
  for (double v : non) en.push_back(std::exp(v));
  EXPECT_DOUBLE_EQ(ComputeEer(tar, non).eer, ComputeEer(et, en).eer);
}

TEST(EerTest, LabelSwap) {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> tar(1 + rng.UniformIndex(300)),
        non(1 + rng.UniformIndex(300));
    for (double& v : tar) v = rng.Normal() + rng.Uniform();
    for (double& v : non) v = rng.Normal();
    const double step = std::max(1.0 / static_cast<double>(tar.size()),
                                 1.0 / static_cast<double>(non.size()));
    EXPECT_NEAR(ComputeEer(non, tar).eer, 1.0 - ComputeEer(tar, non).eer,
                step + 1e-12);
  }
}

TEST(EerTest, RocIsMonotone) {
  Rng rng(7);
  std::vector<double> tar(300), non(400);
  for (double& v : tar) v = std::round((rng.Normal() + 1) * 4) / 4;
  for (double& v : non) v = std::round(rng.Normal() * 4) / 4;
  auto r = ComputeEer(tar, non);
  ASSERT_GE(r.roc.size(), 2u);
  EXPECT_DOUBLE_EQ(r.roc.front().far, 1.0);
  EXPECT_DOUBLE_EQ(r.roc.front().frr, 0.0);
  EXPECT_DOUBLE_EQ(r.roc.back().far, 0.0);
  EXPECT_DOUBLE_EQ(r.roc.back().frr, 1.0);
  for (size_t k = 1; k < r.roc.size(); ++k) {
    EXPECT_LT(r.roc[k - 1].threshold, r.roc[k].threshold);
    EXPECT_GE(r.roc[k - 1].far, r.roc[k].far);
    EXPECT_LE(r.roc[k - 1].frr, r.roc[k].frr);
  }
  // The EER sits between the bracketing operating points.
  bool bracketed = false;
  for (size_t k = 1; k < r.roc.size(); ++k) {
    const auto& a = r.roc[k - 1];
    const auto& b = r.roc[k];
    if (a.far - a.frr >= 0 && b.far - b.frr <= 0) {
      bracketed = r.eer <= std::max(a.far, b.frr) + 1e-12 &&
                  r.eer >= std::min(b.far, a.frr) - 1e-12;
      break;
    }
  }
  EXPECT_TRUE(bracketed);
}

TEST(EerTest, DegenerateLabels) {
  std::vector<double> some{0.1}, none;
  EXPECT_LEAKMETER_ERROR(ComputeEer(some, none), ErrorCode::kDegenerateLabels);
  EXPECT_LEAKMETER_ERROR(ComputeEer(none, some), ErrorCode::kDegenerateLabels);
}

TEST(EerTest, DecimateKeepsEnds) {
  Rng rng(8);
  std::vector<double> tar(2000), non(2000);
  for (double& v : tar) v = rng.Normal() + 1;
  for (double& v : non) v = rng.Normal();
  auto r = ComputeEer(tar, non);
  auto d = DecimateRoc(r.roc, 100);
  ASSERT_EQ(d.size(), 100u);
  EXPECT_EQ(d.front(), r.roc.front());
  EXPECT_EQ(d.back(), r.roc.back());
  EXPECT_EQ(DecimateRoc(d, 512), d);
}

TEST(ScoresCsvTest, Errors) {
  EXPECT_LEAKMETER_ERROR(ParseScoresCsv("x\n"), ErrorCode::kParseFailure);
  EXPECT_LEAKMETER_ERROR(
      ParseScoresCsv("enroll_id,test_id,label,score\na,b,target,nan\n"),
      ErrorCode::kParseFailure);
  auto s = ParseScoresCsv(
      "enroll_id,test_id,label,score\na,b,target,0.5\nc,d,nontarget,-0.25\n");
  EXPECT_EQ(s.scores.n_target(), 1u);
  EXPECT_EQ(s.scores.scores, (std::vector<double>{0.5, -0.25}));
}

}  // namespace
}  // namespace leakmeter
