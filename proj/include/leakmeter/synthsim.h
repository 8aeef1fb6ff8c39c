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

#ifndef LEAKMETER_SYNTHSIM_H_
#define LEAKMETER_SYNTHSIM_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leakmeter/corpus.h"
#include "leakmeter/matrix.h"

namespace leakmeter {

// Gaussian speaker / pseudo-profile clouds. All random vectors are drawn as
// N(0, I/dim) so that centroids have roughly unit norm and the noise scales
// below are relative to that.
struct SimConfig {
  uint64_t seed = 1;
  size_t dim = 64;
  size_t n_speakers = 20;
  // Sessions per speaker are drawn uniformly from [min_sessions, max_sessions].
  size_t min_sessions = 5;
  size_t max_sessions = 8;
  size_t segments_per_session = 1;
  int n_profiles = 8;
  // The profiles that are actually rendered; each original segment gets one
  // de-identified counterpart, cycling through these.
  std::vector<int> selected_profiles = {1, 2};
  double leak = 0.4;                  // lambda
  double within_noise = 0.3;          // sigma_w
  double profile_instability = 0.0;   // tau
  bool rotate_manifold = false;
  double pseudo_spread = 1.0;
  std::string sid_model_tag = "sim";
};

// Throws kInvalidConfig.
void ValidateSimConfig(const SimConfig& config);

struct SimGroundTruth {
  std::vector<std::string> speakers;  // row order of the matrices below
  Matrix speaker_centroids;           // n_speakers × dim
  std::map<int, Matrix> profile_centroids;  // per selected profile
  std::optional<Matrix> rotation;           // set iff rotate_manifold
};

struct SimOutput {
  SimConfig config;
  CorpusManifest manifest;
  EmbeddingMatrix orig;
  std::map<int, EmbeddingMatrix> deid;  // keyed by profile
  SimGroundTruth truth;

  // orig followed by every de-identified matrix.
  EmbeddingMatrix Combined() const;
};

// Pure function of the config, seed included.
SimOutput Simulate(const SimConfig& config);

// Permutes speaker_id over the de-identified segments; original segments
// and session structure are left alone.
CorpusManifest ShuffleLabels(const CorpusManifest& manifest, uint64_t seed);

// "paper_shape", "tiny", "decoupling_a", "decoupling_b". Throws
// kUnknownPreset.
SimConfig Preset(std::string_view name);
std::vector<std::string> PresetNames();

// Sidecar document: config plus centroids and rotation.
std::string EncodeGroundTruthJson(const SimOutput& out);

}  // namespace leakmeter

#endif  // LEAKMETER_SYNTHSIM_H_
