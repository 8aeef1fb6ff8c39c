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

#ifndef LEAKMETER_ERROR_H_
#define LEAKMETER_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace leakmeter {

enum class ErrorCode {
  // corpus
  kDuplicateSegmentId,
  kProfileOnOriginal,
  kMissingProfile,
  kEmptyInput,
  kInvalidRecord,
  // ingestion
  kBadMagic,
  kUnsupportedVersion,
  kBadHeader,
  kTruncatedFile,
  kTrailingData,
  kNonFiniteValue,
  kDimensionMismatch,
  kParseFailure,
  kIoFailure,
  // trials and scoring
  kEmptyScenario,
  kMissingEmbedding,
  kZeroNormVector,
  kDegenerateLabels,
  // identification
  kProbeWithoutGalleryIdentity,
  kRankOutOfRange,
  kDegenerateGallery,
  // numerics
  kNoConvergence,
  kRankDeficient,
  kDegenerateCloud,
  kInsufficientSamples,
  // simulation and evaluation
  kInvalidConfig,
  kUnknownPreset,
  kConfigInvalid,
  kCorpusInvalid,
};

std::string_view ErrorCodeName(ErrorCode code);

// All domain failures are reported through this exception type; the code
// lets callers (and the CLI exit-code mapping) distinguish them.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace leakmeter

#endif  // LEAKMETER_ERROR_H_
