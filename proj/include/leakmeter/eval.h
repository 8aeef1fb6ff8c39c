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

#ifndef LEAKMETER_EVAL_H_
#define LEAKMETER_EVAL_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leakmeter/corpus.h"
#include "leakmeter/ident.h"
#include "leakmeter/trialgen.h"
#include "leakmeter/verify.h"

namespace leakmeter {

inline constexpr std::string_view kToolName = "leakmeter";
inline constexpr std::string_view kToolVersion = "0.1.0";

// One embedding file: "<model>:<condition>[:<profile>]=<path>".
struct EmbeddingSource {
  std::string model;
  Condition condition = Condition::kOrig;
  std::optional<int> profile;
  std::string path;
  bool operator==(const EmbeddingSource&) const = default;
};
// Throws kConfigInvalid.
EmbeddingSource ParseEmbeddingSource(std::string_view spec);
std::string FormatEmbeddingSource(const EmbeddingSource& source);

struct MetricToggles {
  bool verification = true;
  bool identification = true;
  bool subspace = true;
  bool operator==(const MetricToggles&) const = default;
};

struct EvalConfig {
  std::string manifest;
  std::vector<EmbeddingSource> embeddings;
  // Pre-built trial file; empty = generate from the manifest.
  std::string trials;
  std::vector<Scenario> scenarios = {Scenario::kSet1, Scenario::kSet2,
                                     Scenario::kXprof};
  // Empty = the first two profile ids of the manifest.
  std::vector<int> profiles;
  MetricToggles metrics;
  std::string out;
  uint64_t seed = 0;
  std::optional<double> nontarget_ratio;
  std::optional<double> xprof_ratio = 2.0;
  bool include_cross_speaker = false;
  double cca_ridge = 1e-6;
  bool deid_only = false;
  int jobs = 1;
  bool operator==(const EvalConfig&) const = default;
};

// JSON document with the field names above. Keys absent from the document
// keep the values already in `base`.
EvalConfig ParseEvalConfigJson(std::string_view text, EvalConfig base = {});
std::string EncodeEvalConfigJson(const EvalConfig& config);

// Loaded and cross-checked inputs of one evaluation.
struct EvalInputs {
  CorpusManifest manifest;
  std::map<std::string, EmbeddingMatrix> models;  // all conditions stacked
  std::optional<std::vector<TrialList>> trials;
  uint64_t digest = 0;  // content hash of everything above
};

// Reads every file named by the config. Throws kIoFailure, the ingestion
// errors, and kCorpusInvalid when a file disagrees with its declared
// condition/profile.
EvalInputs LoadEvalInputs(const EvalConfig& config);
// Hash of in-memory inputs, as stored in EvalInputs::digest.
uint64_t DigestInputs(const EvalInputs& inputs);

struct Provenance {
  std::string tool{kToolName};
  std::string version{kToolVersion};
  uint64_t seed = 0;
  std::string config_hash;  // 16 hex digits
  bool operator==(const Provenance&) const = default;
};

// Failed cells keep their key and carry the error text; their values are
// meaningless.
struct VerificationCell {
  std::string model;
  Scenario scenario = Scenario::kSet1;
  std::vector<int> profiles;
  std::optional<std::string> error;
  size_t n_target = 0;
  size_t n_nontarget = 0;
  double eer = 0.0;
  double threshold = 0.0;
  std::vector<OperatingPoint> roc;  // decimated
  bool operator==(const VerificationCell&) const = default;
};

struct IdentificationCell {
  std::string model;
  int profile = 0;
  std::optional<std::string> error;
  size_t gallery_size = 0;
  size_t n_probes = 0;
  std::vector<double> hits;  // k = 1..G
  double auc_cmc = 0.0;
  double mean_rank = 0.0;
  ChanceLevels chance;
  bool operator==(const IdentificationCell&) const = default;
};

struct SubspaceCell {
  std::string model;
  int profile = 0;
  std::optional<std::string> error;
  size_t n = 0;
  size_t d1 = 0;
  size_t d2 = 0;
  std::string pairing;
  double ridge = 0.0;
  double cca_mean_top10 = 0.0;
  std::optional<double> p_mse;
  std::optional<double> p_cosine;
  bool operator==(const SubspaceCell&) const = default;
};

// Averages over the successful cells, as the summary tables report them.
struct ReportSummary {
  std::map<std::string, double> mean_eer;  // by scenario name
  std::optional<CmcCurve> cmc;             // curve average
  std::optional<double> auc_cmc;
  std::optional<double> mean_rank;
  std::optional<ChanceLevels> chance;
  std::optional<double> cca_mean_top10;
  std::optional<double> p_mse;
  std::optional<double> p_cosine;
  bool operator==(const ReportSummary&) const = default;
};

struct EvalReport {
  Provenance provenance;
  std::vector<std::string> models;
  std::vector<int> profiles;
  std::vector<VerificationCell> verification;
  std::vector<IdentificationCell> identification;
  std::vector<SubspaceCell> subspace;
  ReportSummary summary;
  bool operator==(const EvalReport&) const = default;
};

// Ranks reported in the hit-rate tables.
inline constexpr size_t kReportRanks[] = {1, 5, 10, 20, 50};
inline constexpr size_t kMaxRocPoints = 512;

// Throws kConfigInvalid, kCorpusInvalid. Cell failures are recorded, not
// thrown.
EvalReport RunEval(const EvalInputs& inputs, const EvalConfig& config);
EvalReport RunEval(const EvalConfig& config);

ReportSummary Summarize(const EvalReport& report);

}  // namespace leakmeter

#endif  // LEAKMETER_EVAL_H_
