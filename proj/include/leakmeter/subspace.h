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

#ifndef LEAKMETER_SUBSPACE_H_
#define LEAKMETER_SUBSPACE_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leakmeter/corpus.h"
#include "leakmeter/matrix.h"

namespace leakmeter {

enum class PairingMode {
  kSegment,      // one original and one de-identified segment per key
  kSessionMean,  // per-(speaker, session) mean vectors
};
std::string_view PairingModeName(PairingMode mode);

// Row i of x and row i of y describe the same (speaker, session).
struct PairedEmbeddings {
  Matrix x;  // original
  Matrix y;  // de-identified
  std::vector<std::string> keys;  // "speaker/session"
  PairingMode mode = PairingMode::kSegment;
};

// Pairs original segments with profile-`profile` de-identified segments on
// (speaker, session). When every shared key holds exactly one segment per
// side the pairing is segment-level; otherwise both sides fall back to
// per-key means. Keys present on only one side are dropped.
PairedEmbeddings PairEmbeddings(const CorpusManifest& manifest,
                                const EmbeddingMatrix& emb, int profile);

struct CcaOptions {
  size_t top = 10;
  // Ridge relative to the average variance of each side:
  // eps = ridge * trace(cov) / d. Zero disables regularization.
  double ridge = 1e-6;
};

struct CcaResult {
  std::vector<double> correlations;  // non-increasing, clamped to [0, 1]
  double mean_top = 0.0;
  size_t used = 0;  // min(top, correlations.size())
  double ridge_x = 0.0;
  double ridge_y = 0.0;
};

// Canonical correlations as the singular values of
// (Sxx + eps I)^{-1/2} Sxy (Syy + eps I)^{-1/2}, with both sides whitened
// through the SVD of the centered data. Throws kRankDeficient when ridge == 0
// and either covariance is singular, kInsufficientSamples when
// n <= min(top, d1, d2).
CcaResult Cca(const Matrix& x, const Matrix& y, const CcaOptions& options = {});
double CcaMeanTop(const Matrix& x, const Matrix& y,
                  const CcaOptions& options = {});

struct ProcrustesResult {
  Matrix rotation;  // d×d orthogonal, applied on the right of x
  double p_mse = 0.0;
  double p_cosine = 0.0;
  size_t cosine_rows = 0;  // rows that entered the mean cosine
};

// Centers both clouds, scales each to unit Frobenius norm, and aligns x onto
// y with the orthogonal R = U·Vᵀ from the SVD of xᵀy.
// p_mse = |xR - y|_F^2 / (n·d); p_cosine averages row cosines, skipping rows
// that are zero after centering. Throws kDimensionMismatch,
// kDegenerateCloud.
ProcrustesResult Procrustes(const Matrix& x, const Matrix& y);

struct SubspaceReport {
  size_t n = 0;
  size_t d1 = 0;
  size_t d2 = 0;
  PairingMode pairing = PairingMode::kSegment;
  double ridge = 0.0;
  double cca_mean_top10 = 0.0;
  // Procrustes needs d1 == d2.
  std::optional<double> p_mse;
  std::optional<double> p_cosine;
  Matrix rotation;
};

SubspaceReport ComputeSubspaceReport(const PairedEmbeddings& pairs,
                                     const CcaOptions& options = {});

}  // namespace leakmeter

#endif  // LEAKMETER_SUBSPACE_H_
