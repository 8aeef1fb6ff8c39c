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

#include "leakmeter/corpus.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "leakmeter/error.h"

namespace leakmeter {

std::string_view ConditionName(Condition c) {
  return c == Condition::kOrig ? "orig" : "deid";
}

Condition ParseCondition(std::string_view s) {
  if (s == "orig") return Condition::kOrig;
  if (s == "deid") return Condition::kDeid;
  throw Error(ErrorCode::kParseFailure,
              "unknown condition '" + std::string(s) + "'");
}

std::string_view DurationClassName(DurationClass d) {
  switch (d) {
    case DurationClass::kS10: return "s10";
    case DurationClass::kS30: return "s30";
    case DurationClass::kS60: return "s60";
  }
  return "s10";
}

DurationClass ParseDurationClass(std::string_view s) {
  if (s == "s10") return DurationClass::kS10;
  if (s == "s30") return DurationClass::kS30;
  if (s == "s60") return DurationClass::kS60;
  throw Error(ErrorCode::kParseFailure,
              "unknown duration class '" + std::string(s) + "'");
}

std::optional<size_t> CorpusManifest::Find(std::string_view segment_id) const {
  auto it = std::lower_bound(
      segments_.begin(), segments_.end(), segment_id,
      [](const SegmentRecord& r, std::string_view id) {
        return r.segment_id < id;
      });
  if (it == segments_.end() || it->segment_id != segment_id)
    return std::nullopt;
  return static_cast<size_t>(it - segments_.begin());
}

std::vector<int> CorpusManifest::ProfileIds() const {
  std::set<int> ids;
  for (const auto& [key, _] : profiles_) ids.insert(key.second);
  return {ids.begin(), ids.end()};
}

size_t CorpusManifest::CountCondition(Condition c) const {
  return static_cast<size_t>(
      std::count_if(segments_.begin(), segments_.end(),
                    [c](const SegmentRecord& r) { return r.condition == c; }));
}

std::vector<std::string> CorpusManifest::SpeakersWithoutOriginal() const {
  std::vector<std::string> out;
  for (const auto& [speaker, idx] : speakers_) {
    bool has_orig = false, has_deid = false;
    for (size_t i : idx) {
      if (segments_[i].condition == Condition::kOrig) has_orig = true;
      else has_deid = true;
    }
    if (has_deid && !has_orig) out.push_back(speaker);
  }
  return out;
}

void CorpusManifest::RebuildIndices() {
  speakers_.clear();
  profiles_.clear();
  for (size_t i = 0; i < segments_.size(); ++i) {
    const auto& r = segments_[i];
    speakers_[r.speaker_id].push_back(i);
    if (r.profile_id) profiles_[{r.speaker_id, *r.profile_id}].push_back(i);
  }
}

CorpusManifest BuildManifest(std::vector<SegmentRecord> records,
                             bool deid_only) {
  if (records.empty())
    throw Error(ErrorCode::kEmptyInput, "manifest has no records");
  for (const auto& r : records) {
    if (r.segment_id.empty() || r.speaker_id.empty())
      throw Error(ErrorCode::kInvalidRecord,
                  "segment_id and speaker_id must be non-empty");
    if (r.condition == Condition::kOrig && r.profile_id)
      throw Error(ErrorCode::kProfileOnOriginal, r.segment_id);
    if (r.condition == Condition::kDeid && !r.profile_id)
      throw Error(ErrorCode::kMissingProfile, r.segment_id);
  }
  std::sort(records.begin(), records.end(),
            [](const SegmentRecord& a, const SegmentRecord& b) {
              return a.segment_id < b.segment_id;
            });
  for (size_t i = 1; i < records.size(); ++i) {
    if (records[i].segment_id == records[i - 1].segment_id)
      throw Error(ErrorCode::kDuplicateSegmentId, records[i].segment_id);
  }
  CorpusManifest m;
  m.segments_ = std::move(records);
  m.deid_only_ = deid_only;
  m.RebuildIndices();
  return m;
}

ValidationReport CheckEmbeddings(const EmbeddingMatrix& emb) {
  ValidationReport report;
  if (emb.dim == 0) report.dimension_issues.push_back("dim is zero");
  if (emb.values.size() != emb.ids.size() * emb.dim) {
    report.dimension_issues.push_back(
        "value count " + std::to_string(emb.values.size()) + " != " +
        std::to_string(emb.ids.size()) + " rows x " + std::to_string(emb.dim));
    return report;
  }
  std::set<std::string_view> seen;
  for (size_t r = 0; r < emb.rows(); ++r) {
    if (!seen.insert(emb.ids[r]).second)
      report.duplicate_ids.push_back(emb.ids[r]);
    auto row = emb.row(r);
    if (!std::all_of(row.begin(), row.end(),
                     [](double v) { return std::isfinite(v); }))
      report.non_finite.push_back(emb.ids[r]);
  }
  return report;
}

ValidationReport ValidateCorpus(const CorpusManifest& manifest,
                                const EmbeddingMatrix& emb) {
  ValidationReport report = CheckEmbeddings(emb);
  std::set<std::string_view> emb_ids(emb.ids.begin(), emb.ids.end());
  for (const auto& seg : manifest.segments()) {
    if (!emb_ids.count(seg.segment_id))
      report.missing_embeddings.push_back(seg.segment_id);
  }
  for (const auto& id : emb_ids) {
    if (!manifest.Find(id)) report.orphan_embeddings.emplace_back(id);
  }
  if (!manifest.deid_only())
    report.speakers_without_original = manifest.SpeakersWithoutOriginal();
  return report;
}

EmbeddingMatrix ConcatEmbeddings(std::span<const EmbeddingMatrix> parts) {
  EmbeddingMatrix out;
  if (parts.empty()) return out;
  out.sid_model_tag = parts.front().sid_model_tag;
  out.dim = parts.front().dim;
  for (const auto& p : parts) {
    if (p.dim != out.dim)
      throw Error(ErrorCode::kDimensionMismatch,
                  "cannot stack dim " + std::to_string(p.dim) + " onto " +
                      std::to_string(out.dim));
    out.ids.insert(out.ids.end(), p.ids.begin(), p.ids.end());
    out.values.insert(out.values.end(), p.values.begin(), p.values.end());
  }
  auto check = CheckEmbeddings(out);
  if (!check.duplicate_ids.empty())
    throw Error(ErrorCode::kDuplicateSegmentId, check.duplicate_ids.front());
  return out;
}

EmbeddingIndex::EmbeddingIndex(const EmbeddingMatrix& emb) : emb_(&emb) {
  for (size_t r = 0; r < emb.rows(); ++r) rows_.emplace(emb.ids[r], r);
}

std::optional<size_t> EmbeddingIndex::Find(std::string_view id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

}  // namespace leakmeter
