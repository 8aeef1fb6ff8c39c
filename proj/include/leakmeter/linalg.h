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

#ifndef LEAKMETER_LINALG_H_
#define LEAKMETER_LINALG_H_

#include <cstdint>
#include <vector>

#include "leakmeter/matrix.h"

namespace leakmeter {

struct SvdOptions {
  int max_sweeps = 60;
  // A column pair counts as orthogonal once |a_i·a_j| <= tol·|a_i||a_j|.
  double tolerance = 1e-12;
};

// Thin SVD of a p×q matrix, r = min(p, q): M = U·diag(S)·Vᵀ with U p×r and
// V q×r having orthonormal columns and S non-increasing. Columns of U that
// belong to zero singular values are completed to an orthonormal set.
struct Svd {
  Matrix u;
  std::vector<double> s;
  Matrix v;
};

// One-sided Jacobi. Throws kNoConvergence past max_sweeps and
// kNonFiniteValue on NaN/Inf input.
Svd ComputeSvd(const Matrix& m, const SvdOptions& options = {});

// U·diag(S)·Vᵀ.
Matrix Reconstruct(const Svd& svd);

// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
// sign correction), deterministic in `seed`.
Matrix RandomOrthogonal(size_t n, uint64_t seed);

}  // namespace leakmeter

#endif  // LEAKMETER_LINALG_H_
