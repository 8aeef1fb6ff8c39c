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

#include "leakmeter/error.h"

namespace leakmeter {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateSegmentId: return "DuplicateSegmentId";
    case ErrorCode::kProfileOnOriginal: return "ProfileOnOriginal";
    case ErrorCode::kMissingProfile: return "MissingProfile";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidRecord: return "InvalidRecord";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kBadHeader: return "BadHeader";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kTrailingData: return "TrailingData";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kParseFailure: return "ParseFailure";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kEmptyScenario: return "EmptyScenario";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kZeroNormVector: return "ZeroNormVector";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kProbeWithoutGalleryIdentity:
      return "ProbeWithoutGalleryIdentity";
    case ErrorCode::kRankOutOfRange: return "RankOutOfRange";
    case ErrorCode::kDegenerateGallery: return "DegenerateGallery";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kDegenerateCloud: return "DegenerateCloud";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kUnknownPreset: return "UnknownPreset";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kCorpusInvalid: return "CorpusInvalid";
  }
  return "UnknownError";
}

}  // namespace leakmeter
