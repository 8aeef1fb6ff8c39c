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

#ifndef LEAKMETER_IDENT_H_
#define LEAKMETER_IDENT_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leakmeter/corpus.h"
#include "leakmeter/matrix.h"

namespace leakmeter {

// Which segments form the gallery or the probe set.
struct SegmentSelector {
  Condition condition = Condition::kOrig;
  std::optional<int> profile;  // DEID only

  bool Matches(const SegmentRecord& r) const {
    return r.condition == condition &&
           (!profile || r.profile_id == profile);
  }
};

struct Probe {
  std::string segment_id;
  std::string speaker_id;
  std::vector<double> values;
};

// Segment-level gallery in canonical segment_id order. Rows are stored
// unit-normalized; ranking uses cosine similarity.
class Gallery {
 public:
  struct Entry {
    std::string segment_id;
    std::string speaker_id;
  };

  // Entries need not be sorted. Throws kDegenerateGallery when fewer than two
  // entries, kZeroNormVector for an all-zero row.
  Gallery(std::vector<Entry> entries, const Matrix& rows);

  size_t size() const { return entries_.size(); }
  size_t dim() const { return unit_rows_.cols(); }
  const std::vector<Entry>& entries() const { return entries_; }
  const std::map<std::string, size_t>& multiplicity() const {
    return multiplicity_;
  }
  size_t Multiplicity(const std::string& speaker) const;

  // 1-based position of the first entry of `speaker_id` after sorting by
  // descending cosine to `probe`; ties go to the earlier entry.
  size_t RankProbe(std::span<const double> probe,
                   const std::string& speaker_id) const;

 private:
  std::vector<Entry> entries_;
  std::vector<int> speaker_of_;
  std::map<std::string, size_t> multiplicity_;
  std::map<std::string, int> speaker_index_;
  Matrix unit_rows_;
};

struct GalleryAndProbes {
  Gallery gallery;
  std::vector<Probe> probes;
};

// Throws kProbeWithoutGalleryIdentity if a probe's speaker is not enrolled,
// kMissingEmbedding if a selected segment has no row.
GalleryAndProbes BuildGallery(const CorpusManifest& manifest,
                              const EmbeddingMatrix& emb,
                              const SegmentSelector& gallery_side,
                              const SegmentSelector& probe_side);

// Rank of every probe, in probe order; identical for any `jobs`.
std::vector<size_t> RankProbes(const Gallery& gallery,
                               const std::vector<Probe>& probes, int jobs = 1);

struct CmcCurve {
  // hits[k - 1] = fraction of probes with rank <= k, k = 1..G.
  std::vector<double> hits;
  size_t n_probes = 0;
  size_t gallery_size = 0;

  bool operator==(const CmcCurve&) const = default;
};

CmcCurve CmcFromRanks(std::span<const size_t> ranks, size_t gallery_size);
CmcCurve ComputeCmc(const Gallery& gallery, const std::vector<Probe>& probes,
                    int jobs = 1);

// hits[k]; throws kRankOutOfRange unless 1 <= k <= G.
double CmcHitRate(const CmcCurve& curve, size_t k);
// (1/G) * sum_k hits[k].
double AucCmc(const CmcCurve& curve);
double MeanRank(std::span<const size_t> ranks);
double MeanRank(const Gallery& gallery, const std::vector<Probe>& probes,
                int jobs = 1);

// Pointwise mean of curves over the same gallery size.
CmcCurve AverageCurves(std::span<const CmcCurve> curves);

// Expectations under uniformly random ranking, given each probe's number of
// correct gallery entries m: P(rank 1) = m/G, E[rank] = (G+1)/(m+1).
struct ChanceLevels {
  double rank1 = 0.0;
  double mean_rank = 0.0;
  double auc_cmc = 0.0;
  bool operator==(const ChanceLevels&) const = default;
};
ChanceLevels ChanceLevelsFor(const Gallery& gallery,
                             const std::vector<Probe>& probes);

}  // namespace leakmeter

#endif  // LEAKMETER_IDENT_H_
