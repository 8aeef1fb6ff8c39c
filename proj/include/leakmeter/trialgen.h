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

#ifndef LEAKMETER_TRIALGEN_H_
#define LEAKMETER_TRIALGEN_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leakmeter/corpus.h"

namespace leakmeter {

enum class Label { kTarget, kNonTarget };
enum class Scenario { kSet1, kSet2, kXprof };

std::string_view LabelName(Label l);  // "target" | "nontarget"
Label ParseLabel(std::string_view s);
std::string_view ScenarioName(Scenario s);  // "set1" | "set2" | "xprof"
Scenario ParseScenario(std::string_view s);

// A trial refers to segments by their position in the manifest's canonical
// order, so comparing positions is the same as comparing segment ids.
struct Trial {
  uint32_t enroll = 0;
  uint32_t test = 0;
  Label label = Label::kTarget;
  Scenario scenario = Scenario::kSet1;

  bool operator==(const Trial&) const = default;
};

struct TrialList {
  Scenario scenario = Scenario::kSet1;
  std::vector<int> profiles;
  std::vector<Trial> trials;
  size_t n_target = 0;
  size_t n_nontarget = 0;

  bool operator==(const TrialList&) const = default;
};

// Non-target to target ratio of the reference Mixer 3 trial list
// (940,567 / 10,458).
inline constexpr double kReferenceNontargetRatio = 940567.0 / 10458.0;

struct TrialOptions {
  uint64_t seed = 0;
  // SET1/SET2: keep at most ratio x n_target non-targets. Unset = exhaustive.
  std::optional<double> max_nontarget_ratio;
  // Cross-profile sizing: non-target count aimed at ratio x n_target; when
  // too few non-targets exist, targets are subsampled instead. Unset =
  // exhaustive.
  std::optional<double> xprof_ratio = 2.0;
  // Cross-profile: also emit cross-speaker P1-P2 non-targets.
  bool include_cross_speaker = false;
  // Target pairs must come from different sessions.
  bool cross_session_targets = true;
  // Restrict to these duration classes; empty = all.
  std::vector<DurationClass> durations;
};

// Original vs de-identified (profile n).
TrialList GenerateSet1(const CorpusManifest& manifest, int profile,
                       const TrialOptions& options = {});
// De-identified vs de-identified, both profile n.
TrialList GenerateSet2(const CorpusManifest& manifest, int profile,
                       const TrialOptions& options = {});
// Same-profile targets vs cross-profile non-targets.
TrialList GenerateCrossProfile(const CorpusManifest& manifest, int profile_a,
                               int profile_b, const TrialOptions& options = {});

// Cross-profile list restricted to the targets of one profile (all
// non-targets kept).
TrialList SplitCrossProfile(const TrialList& list,
                            const CorpusManifest& manifest, int profile);

struct AuditReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

AuditReport AuditTrials(const TrialList& list, const CorpusManifest& manifest);

// Sorts trials canonically (label, enroll, test) and recomputes counts.
void Canonicalize(TrialList* list);

// CSV "enroll_id,test_id,label,scenario"; rows ordered by scenario, label,
// enroll_id, test_id.
std::string EncodeTrialsCsv(const std::vector<TrialList>& lists,
                            const CorpusManifest& manifest);
// Groups rows by scenario. Profiles are recovered from the segments.
std::vector<TrialList> ParseTrialsCsv(std::string_view text,
                                      const CorpusManifest& manifest);

}  // namespace leakmeter

#endif  // LEAKMETER_TRIALGEN_H_
