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

#ifndef LEAKMETER_VERIFY_H_
#define LEAKMETER_VERIFY_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "leakmeter/corpus.h"
#include "leakmeter/trialgen.h"

namespace leakmeter {

// x·y / (|x||y|) in double precision.
double CosineScore(std::span<const double> x, std::span<const double> y);

// Scores aligned with the trial order of the list they came from.
struct ScoreSet {
  std::vector<Label> labels;
  std::vector<double> scores;

  size_t size() const { return scores.size(); }
  size_t n_target() const;
  size_t n_nontarget() const { return size() - n_target(); }
};

// One cosine score per trial. The result is identical for any `jobs`.
ScoreSet ScoreTrials(const TrialList& trials, const CorpusManifest& manifest,
                     const EmbeddingMatrix& emb, int jobs = 1);

struct OperatingPoint {
  double far = 0.0;
  double frr = 0.0;
  double threshold = 0.0;

  bool operator==(const OperatingPoint&) const = default;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  size_t n_target = 0;
  size_t n_nontarget = 0;
  // Ascending thresholds: every distinct score, then one point above the
  // maximum where everything is rejected.
  std::vector<OperatingPoint> roc;
};

// FRR(t) = #{target < t} / n_target, FAR(t) = #{nontarget >= t} /
// n_nontarget. The EER is read off where FAR - FRR changes sign, linearly
// interpolated between the two neighbouring operating points.
EerResult ComputeEer(const ScoreSet& scores);
EerResult ComputeEer(std::span<const double> target_scores,
                     std::span<const double> nontarget_scores);

// Evenly thinned copy of a ROC trace for plotting; keeps both ends.
std::vector<OperatingPoint> DecimateRoc(const std::vector<OperatingPoint>& roc,
                                        size_t max_points);

// Score file "enroll_id,test_id,label,score".
std::string EncodeScoresCsv(const TrialList& trials,
                            const CorpusManifest& manifest,
                            const ScoreSet& scores);

struct ImportedScores {
  std::vector<std::pair<std::string, std::string>> ids;
  ScoreSet scores;
};
ImportedScores ParseScoresCsv(std::string_view text);

}  // namespace leakmeter

#endif  // LEAKMETER_VERIFY_H_
