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

#ifndef LEAKMETER_CORPUS_H_
#define LEAKMETER_CORPUS_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace leakmeter {

enum class Condition { kOrig, kDeid };
enum class DurationClass { kS10, kS30, kS60 };

std::string_view ConditionName(Condition c);  // "orig" | "deid"
Condition ParseCondition(std::string_view s);
std::string_view DurationClassName(DurationClass d);  // "s10" | "s30" | "s60"
DurationClass ParseDurationClass(std::string_view s);

struct SegmentRecord {
  std::string segment_id;
  std::string speaker_id;
  std::string session_id;
  Condition condition = Condition::kOrig;
  // Pseudo-profile index; present iff condition == kDeid.
  std::optional<int> profile_id;
  DurationClass duration_class = DurationClass::kS10;

  bool operator==(const SegmentRecord&) const = default;
};

// Immutable set of segments in canonical (segment_id) order, with derived
// speaker and (speaker, profile) indices. Indices hold positions into
// segments().
class CorpusManifest {
 public:
  using ProfileKey = std::pair<std::string, int>;

  CorpusManifest() = default;

  const std::vector<SegmentRecord>& segments() const { return segments_; }
  size_t size() const { return segments_.size(); }
  const SegmentRecord& at(size_t index) const { return segments_[index]; }

  const std::map<std::string, std::vector<size_t>>& speakers() const {
    return speakers_;
  }
  const std::map<ProfileKey, std::vector<size_t>>& profiles() const {
    return profiles_;
  }

  bool deid_only() const { return deid_only_; }

  // Position of segment_id in segments(), if present.
  std::optional<size_t> Find(std::string_view segment_id) const;

  // Sorted distinct profile ids across DEID segments.
  std::vector<int> ProfileIds() const;
  size_t CountCondition(Condition c) const;

  // Speakers referenced by DEID segments without any ORIG segment.
  std::vector<std::string> SpeakersWithoutOriginal() const;

  bool operator==(const CorpusManifest& other) const {
    return segments_ == other.segments_ && deid_only_ == other.deid_only_;
  }

 private:
  friend CorpusManifest BuildManifest(std::vector<SegmentRecord>, bool);
  void RebuildIndices();

  std::vector<SegmentRecord> segments_;
  std::map<std::string, std::vector<size_t>> speakers_;
  std::map<ProfileKey, std::vector<size_t>> profiles_;
  bool deid_only_ = false;
};

// Sorts by segment_id and builds indices. Throws kEmptyInput,
// kDuplicateSegmentId, kProfileOnOriginal, kMissingProfile, kInvalidRecord.
CorpusManifest BuildManifest(std::vector<SegmentRecord> records,
                             bool deid_only = false);

// Embeddings for one (SID model, condition) pair; one row per segment.
// Readers and the simulator only ever produce matrices that satisfy
// CheckEmbeddings(); a hand-built matrix may not.
struct EmbeddingMatrix {
  std::string sid_model_tag;
  size_t dim = 0;
  std::vector<std::string> ids;
  std::vector<double> values;  // ids.size() x dim, row-major

  size_t rows() const { return ids.size(); }
  std::span<const double> row(size_t r) const {
    return {values.data() + r * dim, dim};
  }
  std::span<double> row(size_t r) { return {values.data() + r * dim, dim}; }

  bool operator==(const EmbeddingMatrix&) const = default;
};

struct ValidationReport {
  std::vector<std::string> missing_embeddings;  // in manifest, not in matrix
  std::vector<std::string> orphan_embeddings;   // in matrix, not in manifest
  std::vector<std::string> non_finite;          // rows with NaN/Inf
  std::vector<std::string> duplicate_ids;       // repeated matrix ids
  std::vector<std::string> dimension_issues;
  std::vector<std::string> speakers_without_original;

  bool ok() const {
    return missing_embeddings.empty() && orphan_embeddings.empty() &&
           non_finite.empty() && duplicate_ids.empty() &&
           dimension_issues.empty() && speakers_without_original.empty();
  }
};

// Matrix-only invariants (shape, distinct ids, finite values).
ValidationReport CheckEmbeddings(const EmbeddingMatrix& emb);

ValidationReport ValidateCorpus(const CorpusManifest& manifest,
                                const EmbeddingMatrix& emb);

// Stacks matrices with equal dim into one; ids must stay distinct.
EmbeddingMatrix ConcatEmbeddings(std::span<const EmbeddingMatrix> parts);

// Row lookup by segment id.
class EmbeddingIndex {
 public:
  explicit EmbeddingIndex(const EmbeddingMatrix& emb);
  std::optional<size_t> Find(std::string_view id) const;
  const EmbeddingMatrix& matrix() const { return *emb_; }

 private:
  const EmbeddingMatrix* emb_;
  std::map<std::string, size_t, std::less<>> rows_;
};

}  // namespace leakmeter

#endif  // LEAKMETER_CORPUS_H_
