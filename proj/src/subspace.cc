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

#include "leakmeter/subspace.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "leakmeter/error.h"
#include "leakmeter/linalg.h"

namespace leakmeter {

std::string_view PairingModeName(PairingMode mode) {
  return mode == PairingMode::kSegment ? "segment" : "session_mean";
}

PairedEmbeddings PairEmbeddings(const CorpusManifest& manifest,
                                const EmbeddingMatrix& emb, int profile) {
  EmbeddingIndex index(emb);
  using Key = std::pair<std::string, std::string>;
  std::map<Key, std::vector<size_t>> orig, deid;
  for (const auto& r : manifest.segments()) {
    const bool is_orig = r.condition == Condition::kOrig;
    if (!is_orig && r.profile_id != profile) continue;
    auto row = index.Find(r.segment_id);
    if (!row) throw Error(ErrorCode::kMissingEmbedding, r.segment_id);
    (is_orig ? orig : deid)[{r.speaker_id, r.session_id}].push_back(*row);
  }
  std::vector<Key> keys;
  bool one_to_one = true;
  for (const auto& [key, rows] : orig) {
    auto it = deid.find(key);
    if (it == deid.end()) continue;
    keys.push_back(key);
    if (rows.size() != 1 || it->second.size() != 1) one_to_one = false;
  }
  if (keys.empty())
    throw Error(ErrorCode::kEmptyInput,
                "no (speaker, session) shared by original and profile " +
                    std::to_string(profile) + " segments");

  PairedEmbeddings out;
  out.mode = one_to_one ? PairingMode::kSegment : PairingMode::kSessionMean;
  out.x = Matrix(keys.size(), emb.dim);
  out.y = Matrix(keys.size(), emb.dim);
  auto mean_into = [&](const std::vector<size_t>& rows, std::span<double> dst) {
    for (size_t r : rows) {
      auto src = emb.row(r);
      for (size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
    for (double& v : dst) v /= static_cast<double>(rows.size());
  };
  for (size_t i = 0; i < keys.size(); ++i) {
    mean_into(orig[keys[i]], out.x.row(i));
    mean_into(deid[keys[i]], out.y.row(i));
    out.keys.push_back(keys[i].first + "/" + keys[i].second);
  }
  return out;
}

namespace {

struct Whitened {
  Matrix basis;                 // n×r left singular vectors of the centered data
  std::vector<double> shrink;   // s / sqrt(s² + (n-1)·eps), per column
  double eps = 0.0;
};

Whitened Whiten(Matrix data, double ridge, const char* side) {
  CenterColumns(&data);
  const double n = static_cast<double>(data.rows());
  const double d = static_cast<double>(data.cols());
  const double total_var = data.FrobeniusNorm() * data.FrobeniusNorm() / (n - 1.0);
  Whitened w;
  w.eps = ridge * total_var / d;
  Svd svd = ComputeSvd(data);
  if (ridge == 0.0) {
    const double smax = svd.s.empty() ? 0.0 : svd.s.front();
    const bool short_rank = data.rows() - 1 < data.cols();
    if (short_rank || smax == 0.0 || svd.s.back() <= 1e-9 * smax)
      throw Error(ErrorCode::kRankDeficient,
                  std::string(side) + " covariance is singular; use a ridge");
  }
  w.basis = std::move(svd.u);
  for (double s : svd.s) {
    const double denom = std::sqrt(s * s + (n - 1.0) * w.eps);
    w.shrink.push_back(denom > 0.0 ? s / denom : 0.0);
  }
  return w;
}

}  // namespace

CcaResult Cca(const Matrix& x, const Matrix& y, const CcaOptions& options) {
  if (x.rows() != y.rows())
    throw Error(ErrorCode::kDimensionMismatch,
                "CCA needs paired rows: " + std::to_string(x.rows()) + " vs " +
                    std::to_string(y.rows()));
  const size_t m = std::min({options.top, x.cols(), y.cols()});
  if (x.rows() <= m || x.rows() < 2)
    throw Error(ErrorCode::kInsufficientSamples,
                std::to_string(x.rows()) + " rows for top " + std::to_string(m));
  if (options.ridge < 0.0)
    throw Error(ErrorCode::kInvalidConfig, "ridge must be >= 0");
  Whitened wx = Whiten(x, options.ridge, "x");
  Whitened wy = Whiten(y, options.ridge, "y");

  Matrix k = MultiplyTransposed(wx.basis, wy.basis);
  for (size_t r = 0; r < k.rows(); ++r)
    for (size_t c = 0; c < k.cols(); ++c) k(r, c) *= wx.shrink[r] * wy.shrink[c];
  Svd svd = ComputeSvd(k);

  CcaResult out;
  out.ridge_x = wx.eps;
  out.ridge_y = wy.eps;
  const size_t available = std::min(x.cols(), y.cols());
  for (size_t i = 0; i < std::min(available, svd.s.size()); ++i)
    out.correlations.push_back(std::clamp(svd.s[i], 0.0, 1.0));
  out.used = std::min(options.top, out.correlations.size());
  double sum = 0.0;
  for (size_t i = 0; i < out.used; ++i) sum += out.correlations[i];
  out.mean_top = out.used ? sum / static_cast<double>(out.used) : 0.0;
  return out;
}

double CcaMeanTop(const Matrix& x, const Matrix& y, const CcaOptions& options) {
  return Cca(x, y, options).mean_top;
}

ProcrustesResult Procrustes(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw Error(ErrorCode::kDimensionMismatch,
                "Procrustes needs equal shapes: " + std::to_string(x.rows()) +
                    "x" + std::to_string(x.cols()) + " vs " +
                    std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
  Matrix xs = x, ys = y;
  CenterColumns(&xs);
  CenterColumns(&ys);
  const double nx = xs.FrobeniusNorm();
  const double ny = ys.FrobeniusNorm();
  if (nx == 0.0 || ny == 0.0)
    throw Error(ErrorCode::kDegenerateCloud, "all rows identical");
  for (double& v : xs.data()) v /= nx;
  for (double& v : ys.data()) v /= ny;

  Svd svd = ComputeSvd(MultiplyTransposed(xs, ys));
  ProcrustesResult out;
  out.rotation = Multiply(svd.u, svd.v.Transpose());

  Matrix aligned = Multiply(xs, out.rotation);
  double sq = 0.0;
  for (size_t i = 0; i < aligned.data().size(); ++i) {
    const double diff = aligned.data()[i] - ys.data()[i];
    sq += diff * diff;
  }
  const double n = static_cast<double>(x.rows());
  const double d = static_cast<double>(x.cols());
  out.p_mse = sq / (n * d);

  constexpr double kZeroRow = 1e-12;
  double cos_sum = 0.0;
  for (size_t r = 0; r < aligned.rows(); ++r) {
    const double na = Norm(aligned.row(r));
    const double nb = Norm(ys.row(r));
    if (na <= kZeroRow || nb <= kZeroRow) continue;
    cos_sum += Dot(aligned.row(r), ys.row(r)) / (na * nb);
    ++out.cosine_rows;
  }
  out.p_cosine = out.cosine_rows ? cos_sum / static_cast<double>(out.cosine_rows)
                                 : 0.0;
  return out;
}

SubspaceReport ComputeSubspaceReport(const PairedEmbeddings& pairs,
                                     const CcaOptions& options) {
  SubspaceReport report;
  report.n = pairs.x.rows();
  report.d1 = pairs.x.cols();
  report.d2 = pairs.y.cols();
  report.pairing = pairs.mode;
  report.ridge = options.ridge;
  report.cca_mean_top10 = CcaMeanTop(pairs.x, pairs.y, options);
  if (report.d1 == report.d2) {
    auto proc = Procrustes(pairs.x, pairs.y);
    report.p_mse = proc.p_mse;
    report.p_cosine = proc.p_cosine;
    report.rotation = std::move(proc.rotation);
  }
  return report;
}

}  // namespace leakmeter
