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

#include "leakmeter/ident.h"

#include <algorithm>
#include <numeric>
#include <thread>

#include "leakmeter/error.h"

namespace leakmeter {

Gallery::Gallery(std::vector<Entry> entries, const Matrix& rows) {
  if (entries.size() != rows.rows())
    throw Error(ErrorCode::kDimensionMismatch, "gallery rows vs entries");
  if (entries.size() < 2)
    throw Error(ErrorCode::kDegenerateGallery,
                "gallery needs at least two entries");
  std::vector<size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return entries[a].segment_id < entries[b].segment_id;
  });
  unit_rows_ = Matrix(entries.size(), rows.cols());
  for (size_t k = 0; k < order.size(); ++k) {
    Entry& e = entries[order[k]];
    auto src = rows.row(order[k]);
    const double n = Norm(src);
    if (n == 0.0) throw Error(ErrorCode::kZeroNormVector, e.segment_id);
    auto dst = unit_rows_.row(k);
    for (size_t c = 0; c < src.size(); ++c) dst[c] = src[c] / n;
    auto [it, inserted] = speaker_index_.emplace(
        e.speaker_id, static_cast<int>(speaker_index_.size()));
    speaker_of_.push_back(it->second);
    ++multiplicity_[e.speaker_id];
    entries_.push_back(std::move(e));
  }
}

size_t Gallery::Multiplicity(const std::string& speaker) const {
  auto it = multiplicity_.find(speaker);
  return it == multiplicity_.end() ? 0 : it->second;
}

size_t Gallery::RankProbe(std::span<const double> probe,
                          const std::string& speaker_id) const {
  if (probe.size() != dim())
    throw Error(ErrorCode::kDimensionMismatch,
                "probe dim " + std::to_string(probe.size()) + ", gallery dim " +
                    std::to_string(dim()));
  auto sp = speaker_index_.find(speaker_id);
  if (sp == speaker_index_.end())
    throw Error(ErrorCode::kProbeWithoutGalleryIdentity, speaker_id);
  const int target = sp->second;

  // Dividing every score by |probe| would not change the order.
  std::vector<double> score(size());
  size_t best = size();
  for (size_t e = 0; e < size(); ++e) {
    score[e] = Dot(unit_rows_.row(e), probe);
    if (speaker_of_[e] == target && (best == size() || score[e] > score[best]))
      best = e;
  }
  size_t ahead = 0;
  for (size_t e = 0; e < size(); ++e) {
    if (speaker_of_[e] == target) continue;
    if (score[e] > score[best] || (score[e] == score[best] && e < best)) ++ahead;
  }
  return ahead + 1;
}

GalleryAndProbes BuildGallery(const CorpusManifest& manifest,
                              const EmbeddingMatrix& emb,
                              const SegmentSelector& gallery_side,
                              const SegmentSelector& probe_side) {
  EmbeddingIndex index(emb);
  auto row_for = [&](const SegmentRecord& r) {
    auto row = index.Find(r.segment_id);
    if (!row) throw Error(ErrorCode::kMissingEmbedding, r.segment_id);
    return emb.row(*row);
  };
  std::vector<Gallery::Entry> entries;
  std::vector<double> values;
  std::vector<Probe> probes;
  for (const auto& r : manifest.segments()) {
    if (gallery_side.Matches(r)) {
      entries.push_back({r.segment_id, r.speaker_id});
      auto row = row_for(r);
      values.insert(values.end(), row.begin(), row.end());
    } else if (probe_side.Matches(r)) {
      auto row = row_for(r);
      probes.push_back({r.segment_id, r.speaker_id, {row.begin(), row.end()}});
    }
  }
  if (probes.empty())
    throw Error(ErrorCode::kEmptyInput, "no probe segments selected");
  const size_t n = entries.size();
  Gallery gallery(std::move(entries), Matrix(n, emb.dim, std::move(values)));
  for (const auto& p : probes) {
    if (gallery.Multiplicity(p.speaker_id) == 0)
      throw Error(ErrorCode::kProbeWithoutGalleryIdentity,
                  p.speaker_id + " (probe " + p.segment_id + ")");
  }
  return {std::move(gallery), std::move(probes)};
}

std::vector<size_t> RankProbes(const Gallery& gallery,
                               const std::vector<Probe>& probes, int jobs) {
  std::vector<size_t> ranks(probes.size(), 0);
  const size_t workers = std::clamp<size_t>(static_cast<size_t>(std::max(jobs, 1)),
                                            1, std::max<size_t>(probes.size(), 1));
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](size_t w) {
    try {
      for (size_t i = w; i < probes.size(); i += workers)
        ranks[i] = gallery.RankProbe(probes[i].values, probes[i].speaker_id);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return ranks;
}

CmcCurve CmcFromRanks(std::span<const size_t> ranks, size_t gallery_size) {
  if (ranks.empty()) throw Error(ErrorCode::kEmptyInput, "no probes");
  std::vector<size_t> count(gallery_size + 1, 0);
  for (size_t r : ranks) {
    if (r < 1 || r > gallery_size)
      throw Error(ErrorCode::kRankOutOfRange, std::to_string(r));
    ++count[r];
  }
  CmcCurve curve;
  curve.n_probes = ranks.size();
  curve.gallery_size = gallery_size;
  curve.hits.resize(gallery_size);
  size_t cumulative = 0;
  for (size_t k = 1; k <= gallery_size; ++k) {
    cumulative += count[k];
    curve.hits[k - 1] =
        static_cast<double>(cumulative) / static_cast<double>(ranks.size());
  }
  return curve;
}

CmcCurve ComputeCmc(const Gallery& gallery, const std::vector<Probe>& probes,
                    int jobs) {
  auto ranks = RankProbes(gallery, probes, jobs);
  return CmcFromRanks(ranks, gallery.size());
}

double CmcHitRate(const CmcCurve& curve, size_t k) {
  if (k < 1 || k > curve.gallery_size)
    throw Error(ErrorCode::kRankOutOfRange,
                "k = " + std::to_string(k) + ", G = " +
                    std::to_string(curve.gallery_size));
  return curve.hits[k - 1];
}

double AucCmc(const CmcCurve& curve) {
  if (curve.gallery_size == 0) return 0.0;
  double s = 0.0;
  for (double h : curve.hits) s += h;
  return s / static_cast<double>(curve.gallery_size);
}

double MeanRank(std::span<const size_t> ranks) {
  if (ranks.empty()) throw Error(ErrorCode::kEmptyInput, "no probes");
  double s = 0.0;
  for (size_t r : ranks) s += static_cast<double>(r);
  return s / static_cast<double>(ranks.size());
}

double MeanRank(const Gallery& gallery, const std::vector<Probe>& probes,
                int jobs) {
  auto ranks = RankProbes(gallery, probes, jobs);
  return MeanRank(ranks);
}

CmcCurve AverageCurves(std::span<const CmcCurve> curves) {
  if (curves.empty()) throw Error(ErrorCode::kEmptyInput, "no curves");
  CmcCurve out;
  out.gallery_size = curves.front().gallery_size;
  out.hits.assign(out.gallery_size, 0.0);
  for (const auto& c : curves) {
    if (c.gallery_size != out.gallery_size)
      throw Error(ErrorCode::kDimensionMismatch,
                  "cannot average curves over different gallery sizes");
    for (size_t k = 0; k < c.hits.size(); ++k) out.hits[k] += c.hits[k];
    out.n_probes += c.n_probes;
  }
  for (double& h : out.hits) h /= static_cast<double>(curves.size());
  return out;
}

ChanceLevels ChanceLevelsFor(const Gallery& gallery,
                             const std::vector<Probe>& probes) {
  ChanceLevels c;
  if (probes.empty()) return c;
  const double g = static_cast<double>(gallery.size());
  for (const auto& p : probes) {
    const double m = static_cast<double>(gallery.Multiplicity(p.speaker_id));
    c.rank1 += m / g;
    c.mean_rank += (g + 1.0) / (m + 1.0);
  }
  c.rank1 /= static_cast<double>(probes.size());
  c.mean_rank /= static_cast<double>(probes.size());
  c.auc_cmc = 1.0 - (c.mean_rank - 1.0) / g;
  return c;
}

}  // namespace leakmeter
