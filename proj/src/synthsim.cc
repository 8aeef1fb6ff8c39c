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

#include <cmath>
#include <set>

#include "json.hpp"
#include "leakmeter/error.h"
#include "leakmeter/linalg.h"
#include "leakmeter/rng.h"

namespace leakmeter {
namespace {

constexpr uint64_t kRotationStream = 0x0707a7e;
constexpr uint64_t kShuffleStream = 0x5b0ff1e;

std::string Padded(size_t value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width)
    s.insert(0, static_cast<size_t>(width) - s.size(), '0');
  return s;
}

int Digits(size_t n) {
  int d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

void FillGaussian(Rng* rng, std::span<double> out, double scale) {
  for (double& x : out) x = rng->Normal() * scale;
}

}  // namespace

void ValidateSimConfig(const SimConfig& c) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidConfig, msg);
  };
  if (c.dim == 0) fail("dim must be positive");
  if (c.n_speakers == 0) fail("n_speakers must be positive");
  if (c.min_sessions == 0 || c.min_sessions > c.max_sessions)
    fail("need 1 <= min_sessions <= max_sessions");
  if (c.segments_per_session == 0) fail("segments_per_session must be positive");
  if (c.n_profiles < 1) fail("n_profiles must be >= 1");
  if (c.selected_profiles.empty()) fail("no selected profiles");
  std::set<int> seen;
  for (int p : c.selected_profiles) {
    if (p < 1 || p > c.n_profiles)
      fail("selected profile " + std::to_string(p) + " outside 1.." +
           std::to_string(c.n_profiles));
    if (!seen.insert(p).second)
      fail("selected profile " + std::to_string(p) + " listed twice");
  }
  if (!(c.leak >= 0.0 && c.leak <= 1.0)) fail("leak must lie in [0, 1]");
  if (!(c.within_noise >= 0.0) || !std::isfinite(c.within_noise))
    fail("within_noise must be >= 0");
  if (!(c.profile_instability >= 0.0) || !std::isfinite(c.profile_instability))
    fail("profile_instability must be >= 0");
  if (!(c.pseudo_spread > 0.0) || !std::isfinite(c.pseudo_spread))
    fail("pseudo_spread must be > 0");
  if (c.sid_model_tag.empty()) fail("sid_model_tag is empty");
}

EmbeddingMatrix SimOutput::Combined() const {
  std::vector<EmbeddingMatrix> parts{orig};
  for (const auto& [p, m] : deid) parts.push_back(m);
  return ConcatEmbeddings(parts);
}

SimOutput Simulate(const SimConfig& config) {
  ValidateSimConfig(config);
  const size_t d = config.dim;
  const double unit = 1.0 / std::sqrt(static_cast<double>(d));
  const size_t n_sel = config.selected_profiles.size();

  SimOutput out;
  out.config = config;
  out.truth.speaker_centroids = Matrix(config.n_speakers, d);
  for (int p : config.selected_profiles)
    out.truth.profile_centroids.emplace(p, Matrix(config.n_speakers, d));
  if (config.rotate_manifold)
    out.truth.rotation =
        RandomOrthogonal(d, DeriveSeed(config.seed, kRotationStream));

  out.orig.sid_model_tag = config.sid_model_tag;
  out.orig.dim = d;
  for (int p : config.selected_profiles) {
    auto& m = out.deid[p];
    m.sid_model_tag = config.sid_model_tag;
    m.dim = d;
  }

  std::vector<SegmentRecord> records;
  const int spk_width = std::max(3, Digits(config.n_speakers));
  const int ses_width = std::max(2, Digits(config.max_sessions));
  const int seg_width = std::max(2, Digits(config.segments_per_session));
  std::vector<double> noise(d), drift(d), deid(d), rotated(d);
  std::vector<std::vector<double>> anchor(static_cast<size_t>(config.n_profiles),
                                          std::vector<double>(d));

  for (size_t s = 0; s < config.n_speakers; ++s) {
    Rng rng(DeriveSeed(config.seed, s + 1));
    const std::string spk = "spk" + Padded(s + 1, spk_width);
    out.truth.speakers.push_back(spk);
    const size_t n_sessions =
        config.min_sessions +
        rng.UniformIndex(config.max_sessions - config.min_sessions + 1);

    auto centroid = out.truth.speaker_centroids.row(s);
    FillGaussian(&rng, centroid, unit);
    // Every profile gets its draw, rendered or not, so that changing the
    // selection does not shift the other streams.
    for (int p = 1; p <= config.n_profiles; ++p) {
      auto& a = anchor[static_cast<size_t>(p - 1)];
      FillGaussian(&rng, a, unit);
      for (size_t k = 0; k < d; ++k)
        a[k] = (1.0 - config.leak) * config.pseudo_spread * a[k] +
               config.leak * centroid[k];
    }
    for (int p : config.selected_profiles) {
      auto dst = out.truth.profile_centroids.at(p).row(s);
      const auto& a = anchor[static_cast<size_t>(p - 1)];
      std::copy(a.begin(), a.end(), dst.begin());
    }

    size_t k_seg = 0;
    for (size_t ses = 0; ses < n_sessions; ++ses) {
      const std::string session = spk + "_ses" + Padded(ses + 1, ses_width);
      for (size_t g = 0; g < config.segments_per_session; ++g, ++k_seg) {
        const std::string stem = session + "_seg" + Padded(g, seg_width);
        const auto duration = static_cast<DurationClass>(k_seg % 3);
        const int profile = config.selected_profiles[k_seg % n_sel];

        FillGaussian(&rng, noise, unit);
        out.orig.ids.push_back(stem + "_orig");
        for (size_t k = 0; k < d; ++k)
          out.orig.values.push_back(static_cast<float>(
              centroid[k] + config.within_noise * noise[k]));
        records.push_back({stem + "_orig", spk, session, Condition::kOrig,
                           std::nullopt, duration});

        FillGaussian(&rng, noise, unit);
        FillGaussian(&rng, drift, unit);
        const auto& a = anchor[static_cast<size_t>(profile - 1)];
        for (size_t k = 0; k < d; ++k)
          deid[k] = a[k] + config.within_noise * noise[k] +
                    config.profile_instability * drift[k];
        if (out.truth.rotation) {
          const Matrix& q = *out.truth.rotation;
          std::fill(rotated.begin(), rotated.end(), 0.0);
          for (size_t i = 0; i < d; ++i)
            for (size_t j = 0; j < d; ++j) rotated[j] += deid[i] * q(i, j);
          deid.swap(rotated);
        }
        const std::string id = stem + "_p" + std::to_string(profile);
        auto& m = out.deid.at(profile);
        m.ids.push_back(id);
        for (double v : deid) m.values.push_back(static_cast<float>(v));
        records.push_back({id, spk, session, Condition::kDeid, profile,
                           duration});
      }
    }
  }
  // A small config can leave a selected profile without segments.
  for (auto it = out.deid.begin(); it != out.deid.end();) {
    if (it->second.ids.empty()) {
      out.truth.profile_centroids.erase(it->first);
      it = out.deid.erase(it);
    } else {
      ++it;
    }
  }
  out.manifest = BuildManifest(std::move(records));
  return out;
}

CorpusManifest ShuffleLabels(const CorpusManifest& manifest, uint64_t seed) {
  std::vector<SegmentRecord> records = manifest.segments();
  std::vector<size_t> deid;
  std::vector<std::string> labels;
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].condition != Condition::kDeid) continue;
    deid.push_back(i);
    labels.push_back(records[i].speaker_id);
  }
  Rng rng(DeriveSeed(seed, kShuffleStream));
  rng.Shuffle(labels.begin(), labels.end());
  for (size_t k = 0; k < deid.size(); ++k)
    records[deid[k]].speaker_id = labels[k];
  return BuildManifest(std::move(records), manifest.deid_only());
}

SimConfig Preset(std::string_view name) {
  SimConfig c;
  if (name == "paper_shape") {
    c.seed = 2983;
    c.dim = 128;
    c.n_speakers = 223;
    c.min_sessions = 5;
    c.max_sessions = 8;
    c.leak = 0.4;
    c.within_noise = 2.5;
    c.profile_instability = 0.2;
    c.pseudo_spread = 1.0;
  } else if (name == "tiny") {
    c.seed = 7;
    c.dim = 8;
    c.n_speakers = 5;
    c.min_sessions = 6;
    c.max_sessions = 6;
    c.leak = 0.5;
    c.within_noise = 0.2;
  } else if (name == "decoupling_a") {
    c.seed = 11;
    c.dim = 32;
    c.n_speakers = 120;
    c.leak = 0.95;
    c.within_noise = 0.1;
    c.rotate_manifold = true;
  } else if (name == "decoupling_b") {
    c.seed = 13;
    c.dim = 32;
    c.n_speakers = 120;
    c.leak = 0.6;
    c.within_noise = 1.2;
  } else {
    throw Error(ErrorCode::kUnknownPreset, std::string(name));
  }
  return c;
}

std::vector<std::string> PresetNames() {
  return {"paper_shape", "tiny", "decoupling_a", "decoupling_b"};
}

namespace {

nlohmann::ordered_json MatrixJson(const Matrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

}  // namespace

std::string EncodeGroundTruthJson(const SimOutput& out) {
  const SimConfig& c = out.config;
  nlohmann::ordered_json j;
  j["config"] = {
      {"seed", c.seed},
      {"dim", c.dim},
      {"n_speakers", c.n_speakers},
      {"min_sessions", c.min_sessions},
      {"max_sessions", c.max_sessions},
      {"segments_per_session", c.segments_per_session},
      {"n_profiles", c.n_profiles},
      {"selected_profiles", c.selected_profiles},
      {"leak", c.leak},
      {"within_noise", c.within_noise},
      {"profile_instability", c.profile_instability},
      {"rotate_manifold", c.rotate_manifold},
      {"pseudo_spread", c.pseudo_spread},
      {"sid_model_tag", c.sid_model_tag},
  };
  j["speakers"] = out.truth.speakers;
  j["speaker_centroids"] = MatrixJson(out.truth.speaker_centroids);
  auto profiles = nlohmann::ordered_json::object();
  for (const auto& [p, m] : out.truth.profile_centroids)
    profiles[std::to_string(p)] = MatrixJson(m);
  j["profile_centroids"] = profiles;
  j["rotation"] = out.truth.rotation ? MatrixJson(*out.truth.rotation)
                                     : nlohmann::ordered_json(nullptr);
  return j.dump(1) + "\n";
}

}  // namespace leakmeter
