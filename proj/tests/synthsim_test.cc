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

#include "leakmeter/synthsim.h"

#include <algorithm>
#include <map>

#include "json.hpp"
#include "leakmeter/ident.h"
#include "leakmeter/subspace.h"
#include "leakmeter/trialgen.h"
#include "leakmeter/verify.h"
#include "test_util.h"

namespace leakmeter {
namespace {

double Set1Eer(const SimOutput& sim, const CorpusManifest& manifest, int p = 1) {
  TrialOptions o;
  o.seed = 1;
  auto list = GenerateSet1(manifest, p, o);
  return ComputeEer(ScoreTrials(list, manifest, sim.Combined(), 4)).eer;
}

double XprofEer(const SimOutput& sim) {
  auto list = GenerateCrossProfile(sim.manifest, 1, 2);
  return ComputeEer(ScoreTrials(list, sim.manifest, sim.Combined())).eer;
}

double Set2Eer(const SimOutput& sim, int p = 1) {
  TrialOptions o;
  o.seed = 1;
  auto list = GenerateSet2(sim.manifest, p, o);
  return ComputeEer(ScoreTrials(list, sim.manifest, sim.Combined())).eer;
}

CmcCurve Cmc(const SimOutput& sim, const CorpusManifest& manifest, int p = 1) {
  auto gp = BuildGallery(manifest, sim.Combined(), {Condition::kOrig, {}},
                         {Condition::kDeid, p});
  return ComputeCmc(gp.gallery, gp.probes, 4);
}

SimConfig Small(double leak, uint64_t seed = 3) {
  SimConfig c;
  c.seed = seed;
  c.dim = 32;
  c.n_speakers = 60;
  c.leak = leak;
  c.within_noise = 0.3;
  return c;
}

TEST(SimulateTest, Deterministic) {
  auto c = Preset("decoupling_a");
  auto a = Simulate(c);
  auto b = Simulate(c);
  EXPECT_EQ(a.manifest, b.manifest);
  EXPECT_EQ(a.orig, b.orig);
  EXPECT_EQ(a.deid, b.deid);
  EXPECT_EQ(a.truth.rotation, b.truth.rotation);
  c.seed += 1;
  EXPECT_NE(Simulate(c).orig, a.orig);
}

TEST(SimulateTest, OutputValidates) {
  for (const auto& name : PresetNames()) {
    auto sim = Simulate(Preset(name));
    auto report = ValidateCorpus(sim.manifest, sim.Combined());
    EXPECT_TRUE(report.ok()) << name;
    EXPECT_EQ(sim.truth.speakers.size(), sim.manifest.speakers().size());
    EXPECT_EQ(sim.truth.rotation.has_value(), sim.config.rotate_manifold);
  }
}

TEST(SimulateTest, GeneratedFromGroundTruth) {
  // Without noise every segment sits on its centroid.
  SimConfig c = Small(0.3);
  c.within_noise = 0.0;
  c.rotate_manifold = true;
  auto sim = Simulate(c);
  const Matrix& q = *sim.truth.rotation;
  for (size_t s = 0; s < sim.truth.speakers.size(); ++s) {
    const auto& spk = sim.truth.speakers[s];
    for (size_t i : sim.manifest.speakers().at(spk)) {
      const auto& rec = sim.manifest.at(i);
      if (rec.condition == Condition::kOrig) {
        auto it = std::find(sim.orig.ids.begin(), sim.orig.ids.end(), rec.segment_id);
        auto row = sim.orig.row(static_cast<size_t>(it - sim.orig.ids.begin()));
        for (size_t k = 0; k < c.dim; ++k)
          EXPECT_NEAR(row[k], sim.truth.speaker_centroids(s, k), 1e-6);
      } else {
        const auto& m = sim.deid.at(*rec.profile_id);
        auto it = std::find(m.ids.begin(), m.ids.end(), rec.segment_id);
        auto row = m.row(static_cast<size_t>(it - m.ids.begin()));
        const Matrix& a = sim.truth.profile_centroids.at(*rec.profile_id);
        for (size_t k = 0; k < c.dim; ++k) {
          double want = 0;
          for (size_t j = 0; j < c.dim; ++j) want += a(s, j) * q(j, k);
          EXPECT_NEAR(row[k], want, 1e-6);
        }
      }
    }
  }
}

TEST(SimulateTest, ProfileCentroidsMixLeak) {
  auto full = Simulate(Small(1.0));
  for (const auto& [p, m] : full.truth.profile_centroids)
    EXPECT_EQ(m, full.truth.speaker_centroids);
}

TEST(SimulateTest, GroundTruthJsonResimulates) {
  auto sim = Simulate(Preset("tiny"));
  auto j = nlohmann::json::parse(EncodeGroundTruthJson(sim));
  SimConfig c;
  const auto& jc = j.at("config");
  c.seed = jc.at("seed");
  c.dim = jc.at("dim");
  c.n_speakers = jc.at("n_speakers");
  c.min_sessions = jc.at("min_sessions");
  c.max_sessions = jc.at("max_sessions");
  c.segments_per_session = jc.at("segments_per_session");
  c.n_profiles = jc.at("n_profiles");
  c.selected_profiles = jc.at("selected_profiles").get<std::vector<int>>();
  c.leak = jc.at("leak");
  c.within_noise = jc.at("within_noise");
  c.profile_instability = jc.at("profile_instability");
  c.rotate_manifold = jc.at("rotate_manifold");
  c.pseudo_spread = jc.at("pseudo_spread");
  c.sid_model_tag = jc.at("sid_model_tag");
  auto again = Simulate(c);
  EXPECT_EQ(again.orig, sim.orig);
  EXPECT_EQ(again.deid, sim.deid);
  EXPECT_EQ(j.at("speakers").size(), 5u);
  EXPECT_EQ(j.at("speaker_centroids")[2][3].get<double>(),
            sim.truth.speaker_centroids(2, 3));
  EXPECT_TRUE(j.at("rotation").is_null());
}

TEST(SimulateTest, SelectionDoesNotShiftOtherStreams) {
  SimConfig a = Small(0.5);
  SimConfig b = a;
  b.selected_profiles = {1, 3};
  auto sa = Simulate(a);
  auto sb = Simulate(b);
  EXPECT_EQ(sa.orig, sb.orig);
  EXPECT_EQ(sa.truth.profile_centroids.at(1), sb.truth.profile_centroids.at(1));
}

TEST(PresetTest, Values) {
  auto tiny = Preset("tiny");
  EXPECT_EQ(tiny.n_speakers, 5u);
  EXPECT_EQ(tiny.dim, 8u);
  auto shape = Preset("paper_shape");
  EXPECT_EQ(shape.n_speakers, 223u);
  EXPECT_EQ(shape.n_profiles, 8);
  EXPECT_EQ(shape.selected_profiles.size(), 2u);
  auto sim = Simulate(shape);
  EXPECT_NEAR(static_cast<double>(sim.manifest.size()), 2983.0, 2983 * 0.05);
  EXPECT_TRUE(Preset("decoupling_a").rotate_manifold);
  EXPECT_LEAKMETER_ERROR(Preset("huge"), ErrorCode::kUnknownPreset);
}

TEST(ValidateSimConfigTest, Rejects) {
  auto bad = [](auto mutate) {
    SimConfig c;
    mutate(c);
    EXPECT_LEAKMETER_ERROR(Simulate(c), ErrorCode::kInvalidConfig);
  };
  bad([](SimConfig& c) { c.leak = 1.5; });
  bad([](SimConfig& c) { c.leak = -0.1; });
  bad([](SimConfig& c) { c.within_noise = -1; });
  bad([](SimConfig& c) { c.profile_instability = -1; });
  bad([](SimConfig& c) { c.n_profiles = 0; });
  bad([](SimConfig& c) { c.dim = 0; });
  bad([](SimConfig& c) { c.pseudo_spread = 0; });
  bad([](SimConfig& c) { c.selected_profiles = {1, 9}; });
  bad([](SimConfig& c) { c.selected_profiles = {2, 2}; });
  bad([](SimConfig& c) { c.min_sessions = 9; });
}

TEST(ShuffleLabelsTest, SingleSpeakerUnchanged) {
  SimConfig c = Small(0.5);
  c.n_speakers = 1;
  auto sim = Simulate(c);
  EXPECT_EQ(ShuffleLabels(sim.manifest, 3), sim.manifest);
}

TEST(ShuffleLabelsTest, PermutationProperties) {
  auto sim = Simulate(Preset("decoupling_b"));
  auto a = ShuffleLabels(sim.manifest, 1);
  auto b = ShuffleLabels(sim.manifest, 2);
  std::multiset<std::string> orig_labels, la, lb;
  bool differ = false;
  for (size_t i = 0; i < sim.manifest.size(); ++i) {
    const auto& r = sim.manifest.at(i);
    EXPECT_EQ(a.at(i).segment_id, r.segment_id);
    EXPECT_EQ(a.at(i).session_id, r.session_id);
    if (r.condition == Condition::kOrig) {
      EXPECT_EQ(a.at(i), r);
      continue;
    }
    orig_labels.insert(r.speaker_id);
    la.insert(a.at(i).speaker_id);
    lb.insert(b.at(i).speaker_id);
    differ |= a.at(i).speaker_id != b.at(i).speaker_id;
  }
  EXPECT_EQ(la, orig_labels);
  EXPECT_EQ(lb, orig_labels);
  EXPECT_TRUE(differ);
  EXPECT_EQ(ShuffleLabels(sim.manifest, 1), a);
}

TEST(SimOracleTest, FullLeakIsVerifiable) {
  SimConfig c = Small(1.0);
  c.within_noise = 0.1;
  auto sim = Simulate(c);
  EXPECT_LT(Set1Eer(sim, sim.manifest), 0.05);
}

TEST(SimOracleTest, NoLeakIsChance) {
  SimConfig c = Small(0.0);
  c.n_speakers = 150;
  auto sim = Simulate(c);
  EXPECT_NEAR(Set1Eer(sim, sim.manifest), 0.5, 0.03);
  auto gp = BuildGallery(sim.manifest, sim.Combined(), {Condition::kOrig, {}},
                         {Condition::kDeid, 1});
  auto chance = ChanceLevelsFor(gp.gallery, gp.probes);
  const double rank1 = CmcHitRate(ComputeCmc(gp.gallery, gp.probes), 1);
  const double se = std::sqrt(chance.rank1 * (1 - chance.rank1) /
                              static_cast<double>(gp.probes.size()));
  EXPECT_NEAR(rank1, chance.rank1, 3 * se);
}

TEST(SimOracleTest, LeakMonotonicity) {
  double prev_eer = 1.0, prev_auc = 0.0;
  for (double leak : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    auto sim = Simulate(Small(leak, 8));
    const double eer = Set1Eer(sim, sim.manifest);
    const double auc = AucCmc(Cmc(sim, sim.manifest));
    EXPECT_LE(eer, prev_eer + 0.01) << leak;
    EXPECT_GE(auc, prev_auc - 0.01) << leak;
    prev_eer = eer;
    prev_auc = auc;
  }
}

TEST(SimOracleTest, AucStrictlyIncreasesOverLeakGrid) {
  double prev = 0.0;
  for (double leak : {0.0, 0.3, 0.6, 0.9}) {
    auto sim = Simulate(Small(leak, 9));
    const double auc = AucCmc(Cmc(sim, sim.manifest));
    EXPECT_GT(auc, prev) << leak;
    prev = auc;
  }
}

TEST(SimOracleTest, ProfileDistinctness) {
  SimConfig spread = Small(0.0);
  spread.pseudo_spread = 5.0;
  spread.within_noise = 0.3;
  EXPECT_LT(XprofEer(Simulate(spread)), 0.03);

  SimConfig merged = Small(0.0);
  merged.pseudo_spread = 1e-4;
  merged.within_noise = 0.3;
  EXPECT_NEAR(XprofEer(Simulate(merged)), 0.5, 0.05);
}

TEST(SimOracleTest, StableProfilesAreConsistent) {
  SimConfig c = Small(0.0);
  EXPECT_LT(Set2Eer(Simulate(c)), 0.03);
  c.profile_instability = 3.0;
  EXPECT_GT(Set2Eer(Simulate(c)), 0.2);
}

TEST(SimOracleTest, ShuffledLabelsAreChance) {
  auto sim = Simulate(Small(1.0));
  auto shuffled = ShuffleLabels(sim.manifest, 4);
  EXPECT_NEAR(Set1Eer(sim, shuffled), 0.5, 0.04);
}

TEST(SimOracleTest, DecouplingPresets) {
  auto a = Simulate(Preset("decoupling_a"));
  auto b = Simulate(Preset("decoupling_b"));
  for (int p : {1, 2}) {
    auto pa = PairEmbeddings(a.manifest, a.Combined(), p);
    auto pb = PairEmbeddings(b.manifest, b.Combined(), p);
    EXPECT_GE(CcaMeanTop(pa.x, pa.y), 0.9);
    EXPECT_LE(CcaMeanTop(pb.x, pb.y), 0.7);
    EXPECT_GE(CmcHitRate(Cmc(b, b.manifest, p), 50), 0.4);
    EXPECT_LT(AucCmc(Cmc(a, a.manifest, p)), AucCmc(Cmc(b, b.manifest, p)));
  }
}

}  // namespace
}  // namespace leakmeter
