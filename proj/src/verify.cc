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

#include "leakmeter/verify.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <thread>

#include "leakmeter/error.h"
#include "leakmeter/matrix.h"

namespace leakmeter {

double CosineScore(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  const double nx = Norm(x);
  const double ny = Norm(y);
  if (nx == 0.0 || ny == 0.0)
    throw Error(ErrorCode::kZeroNormVector, "cosine of a zero vector");
  return Dot(x, y) / (nx * ny);
}

size_t ScoreSet::n_target() const {
  return static_cast<size_t>(
      std::count(labels.begin(), labels.end(), Label::kTarget));
}

ScoreSet ScoreTrials(const TrialList& trials, const CorpusManifest& manifest,
                     const EmbeddingMatrix& emb, int jobs) {
  EmbeddingIndex index(emb);
  // Manifest position -> embedding row, resolved once.
  constexpr size_t kUnresolved = std::numeric_limits<size_t>::max();
  std::vector<size_t> row_of(manifest.size(), kUnresolved);
  auto resolve = [&](uint32_t seg) {
    if (row_of[seg] != kUnresolved) return;
    auto row = index.Find(manifest.at(seg).segment_id);
    if (!row)
      throw Error(ErrorCode::kMissingEmbedding, manifest.at(seg).segment_id);
    row_of[seg] = *row;
  };
  for (const auto& t : trials.trials) {
    resolve(t.enroll);
    resolve(t.test);
  }

  ScoreSet out;
  out.labels.reserve(trials.trials.size());
  for (const auto& t : trials.trials) out.labels.push_back(t.label);
  out.scores.assign(trials.trials.size(), 0.0);

  const size_t n = trials.trials.size();
  const size_t workers =
      std::clamp<size_t>(static_cast<size_t>(std::max(jobs, 1)), 1,
                         std::max<size_t>(n / 1024, 1));
  auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const auto& t = trials.trials[i];
      out.scores[i] = CosineScore(emb.row(row_of[t.enroll]),
                                  emb.row(row_of[t.test]));
    }
  };
  if (workers == 1) {
    work(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const size_t chunk = (n + workers - 1) / workers;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        work(w * chunk, std::min(n, (w + 1) * chunk));
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

EerResult ComputeEer(std::span<const double> target_scores,
                     std::span<const double> nontarget_scores) {
  if (target_scores.empty() || nontarget_scores.empty())
    throw Error(ErrorCode::kDegenerateLabels,
                "EER needs at least one target and one non-target score");
  std::vector<double> tar(target_scores.begin(), target_scores.end());
  std::vector<double> non(nontarget_scores.begin(), nontarget_scores.end());
  for (double v : tar)
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValue, "score");
  for (double v : non)
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValue, "score");
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());

  EerResult result;
  result.n_target = tar.size();
  result.n_nontarget = non.size();
  const double nt = static_cast<double>(tar.size());
  const double nn = static_cast<double>(non.size());

  // Merge-walk over distinct score values in ascending order.
  size_t ti = 0, ni = 0;
  while (ti < tar.size() || ni < non.size()) {
    double theta;
    if (ti == tar.size()) theta = non[ni];
    else if (ni == non.size()) theta = tar[ti];
    else theta = std::min(tar[ti], non[ni]);
    // ti targets lie strictly below theta; non.size() - ni non-targets are
    // at or above it.
    result.roc.push_back(
        {static_cast<double>(non.size() - ni) / nn, static_cast<double>(ti) / nt,
         theta});
    while (ti < tar.size() && tar[ti] == theta) ++ti;
    while (ni < non.size() && non[ni] == theta) ++ni;
  }
  const double top = std::max(tar.back(), non.back());
  result.roc.push_back(
      {0.0, 1.0, std::nextafter(top, std::numeric_limits<double>::infinity())});

  // FAR - FRR starts at 1 and ends at -1, so a sign change always exists.
  const auto& roc = result.roc;
  for (size_t k = 0; k + 1 < roc.size(); ++k) {
    const double d0 = roc[k].far - roc[k].frr;
    if (d0 == 0.0) {
      result.eer = roc[k].far;
      result.threshold = roc[k].threshold;
      return result;
    }
    const double d1 = roc[k + 1].far - roc[k + 1].frr;
    if (d0 > 0.0 && d1 <= 0.0) {
      const double t = d0 / (d0 - d1);
      result.eer = roc[k].far + t * (roc[k + 1].far - roc[k].far);
      result.threshold =
          roc[k].threshold + t * (roc[k + 1].threshold - roc[k].threshold);
      return result;
    }
  }
  result.eer = roc.back().far;
  result.threshold = roc.back().threshold;
  return result;
}

EerResult ComputeEer(const ScoreSet& scores) {
  std::vector<double> tar, non;
  for (size_t i = 0; i < scores.size(); ++i) {
    (scores.labels[i] == Label::kTarget ? tar : non).push_back(scores.scores[i]);
  }
  return ComputeEer(tar, non);
}

std::vector<OperatingPoint> DecimateRoc(const std::vector<OperatingPoint>& roc,
                                        size_t max_points) {
  if (roc.size() <= max_points || max_points < 2) return roc;
  std::vector<OperatingPoint> out;
  out.reserve(max_points);
  const double step =
      static_cast<double>(roc.size() - 1) / static_cast<double>(max_points - 1);
  for (size_t k = 0; k < max_points; ++k) {
    const auto idx = static_cast<size_t>(std::llround(step * k));
    out.push_back(roc[std::min(idx, roc.size() - 1)]);
  }
  return out;
}

std::string EncodeScoresCsv(const TrialList& trials,
                            const CorpusManifest& manifest,
                            const ScoreSet& scores) {
  if (scores.size() != trials.trials.size())
    throw Error(ErrorCode::kDimensionMismatch, "scores do not match trials");
  std::string out = "enroll_id,test_id,label,score\n";
  char buf[64];
  for (size_t i = 0; i < scores.size(); ++i) {
    const auto& t = trials.trials[i];
    out += manifest.at(t.enroll).segment_id;
    out += ',';
    out += manifest.at(t.test).segment_id;
    out += ',';
    out += LabelName(t.label);
    out += ',';
    auto res = std::to_chars(buf, buf + sizeof(buf), scores.scores[i]);
    out.append(buf, res.ptr);
    out += '\n';
  }
  return out;
}

ImportedScores ParseScoresCsv(std::string_view text) {
  ImportedScores out;
  size_t start = 0, line_no = 0;
  bool header = false;
  while (start < text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header) {
      if (line != "enroll_id,test_id,label,score")
        throw Error(ErrorCode::kParseFailure, "unexpected score file header");
      header = true;
      continue;
    }
    std::vector<std::string_view> f;
    size_t p = 0;
    while (true) {
      size_t c = line.find(',', p);
      f.push_back(line.substr(p, c == std::string_view::npos ? c : c - p));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }
    const std::string where = "score line " + std::to_string(line_no);
    if (f.size() != 4) throw Error(ErrorCode::kParseFailure, where);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), v);
    if (ec != std::errc() || ptr != f[3].data() + f[3].size() ||
        !std::isfinite(v))
      throw Error(ErrorCode::kParseFailure, where + ": bad score");
    out.ids.emplace_back(std::string(f[0]), std::string(f[1]));
    out.scores.labels.push_back(ParseLabel(f[2]));
    out.scores.scores.push_back(v);
  }
  return out;
}

}  // namespace leakmeter
