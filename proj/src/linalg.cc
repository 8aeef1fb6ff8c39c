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

#include "leakmeter/linalg.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "leakmeter/error.h"
#include "leakmeter/rng.h"

namespace leakmeter {
namespace {

double ColDot(const std::vector<double>& cols, size_t len, size_t i, size_t j) {
  const double* a = cols.data() + i * len;
  const double* b = cols.data() + j * len;
  double s = 0.0;
  for (size_t k = 0; k < len; ++k) s += a[k] * b[k];
  return s;
}

void Rotate(std::vector<double>* cols, size_t len, size_t i, size_t j, double c,
            double s) {
  double* a = cols->data() + i * len;
  double* b = cols->data() + j * len;
  for (size_t k = 0; k < len; ++k) {
    const double x = a[k];
    const double y = b[k];
    a[k] = c * x - s * y;
    b[k] = s * x + c * y;
  }
}

// Replaces the flagged columns of `q` (rows x cols) with unit vectors
// orthogonal to every other column.
void CompleteOrthonormal(Matrix* q, const std::vector<bool>& deficient) {
  const size_t p = q->rows();
  std::vector<bool> valid(q->cols());
  for (size_t k = 0; k < q->cols(); ++k) valid[k] = !deficient[k];
  size_t n_valid = static_cast<size_t>(std::count(valid.begin(), valid.end(), true));
  size_t next_basis = 0;
  std::vector<double> v(p);
  for (size_t k = 0; k < q->cols(); ++k) {
    if (valid[k]) continue;
    const double want = 0.5 * static_cast<double>(p - n_valid) / static_cast<double>(p);
    for (; next_basis < p; ++next_basis) {
      std::fill(v.begin(), v.end(), 0.0);
      v[next_basis] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (size_t j = 0; j < q->cols(); ++j) {
          if (!valid[j]) continue;
          double d = 0.0;
          for (size_t r = 0; r < p; ++r) d += (*q)(r, j) * v[r];
          for (size_t r = 0; r < p; ++r) v[r] -= d * (*q)(r, j);
        }
      }
      double n2 = 0.0;
      for (double x : v) n2 += x * x;
      if (n2 > want) {
        const double n = std::sqrt(n2);
        for (size_t r = 0; r < p; ++r) (*q)(r, k) = v[r] / n;
        valid[k] = true;
        ++n_valid;
        ++next_basis;
        break;
      }
    }
  }
}

// Jacobi on a tall matrix (p >= q).
Svd TallSvd(const Matrix& m, const SvdOptions& options) {
  const size_t p = m.rows();
  const size_t q = m.cols();
  // Column-major working copies.
  std::vector<double> a(p * q);
  for (size_t r = 0; r < p; ++r)
    for (size_t c = 0; c < q; ++c) a[c * p + r] = m(r, c);
  std::vector<double> v(q * q, 0.0);
  for (size_t c = 0; c < q; ++c) v[c * q + c] = 1.0;

  // Columns whose squared norm falls below this are numerically zero; their
  // relative orthogonality is pure rounding noise.
  const double eps = std::numeric_limits<double>::epsilon();
  const double negligible = eps * eps * m.FrobeniusNorm() * m.FrobeniusNorm();
  bool converged = q < 2;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    converged = true;
    for (size_t i = 0; i + 1 < q; ++i) {
      for (size_t j = i + 1; j < q; ++j) {
        const double alpha = ColDot(a, p, i, i);
        const double beta = ColDot(a, p, j, j);
        const double gamma = ColDot(a, p, i, j);
        if (alpha <= negligible || beta <= negligible) continue;
        if (std::abs(gamma) <= options.tolerance * std::sqrt(alpha * beta))
          continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        Rotate(&a, p, i, j, c, s);
        Rotate(&v, q, i, j, c, s);
      }
    }
  }
  if (!converged)
    throw Error(ErrorCode::kNoConvergence,
                "Jacobi SVD did not converge in " +
                    std::to_string(options.max_sweeps) + " sweeps");

  std::vector<double> sigma(q);
  for (size_t c = 0; c < q; ++c) sigma[c] = std::sqrt(ColDot(a, p, c, c));
  std::vector<size_t> order(q);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t x, size_t y) { return sigma[x] > sigma[y]; });

  Svd out;
  out.s.resize(q);
  out.u = Matrix(p, q);
  out.v = Matrix(q, q);
  const double floor = (q ? sigma[order[0]] : 0.0) *
                       static_cast<double>(std::max(p, q)) *
                       std::numeric_limits<double>::epsilon();
  std::vector<bool> deficient(q, false);
  for (size_t k = 0; k < q; ++k) {
    const size_t c = order[k];
    out.s[k] = sigma[c];
    for (size_t r = 0; r < q; ++r) out.v(r, k) = v[c * q + r];
    if (sigma[c] <= floor || sigma[c] == 0.0) {
      deficient[k] = true;
      continue;
    }
    for (size_t r = 0; r < p; ++r) out.u(r, k) = a[c * p + r] / sigma[c];
  }
  if (std::find(deficient.begin(), deficient.end(), true) != deficient.end())
    CompleteOrthonormal(&out.u, deficient);
  return out;
}

}  // namespace

Svd ComputeSvd(const Matrix& m, const SvdOptions& options) {
  for (double x : m.data())
    if (!std::isfinite(x))
      throw Error(ErrorCode::kNonFiniteValue, "SVD input is not finite");
  if (m.rows() >= m.cols()) return TallSvd(m, options);
  Svd t = TallSvd(m.Transpose(), options);
  std::swap(t.u, t.v);
  return t;
}

Matrix Reconstruct(const Svd& svd) {
  Matrix us = svd.u;
  for (size_t r = 0; r < us.rows(); ++r)
    for (size_t k = 0; k < us.cols(); ++k) us(r, k) *= svd.s[k];
  return Multiply(us, svd.v.Transpose());
}

Matrix RandomOrthogonal(size_t n, uint64_t seed) {
  Rng rng(seed);
  Matrix g(n, n);
  for (double& x : g.data()) x = rng.Normal();
  // Modified Gram-Schmidt on the columns; QR with positive diag(R) makes the
  // distribution Haar.
  Matrix q(n, n);
  for (size_t j = 0; j < n; ++j) {
    std::vector<double> col(n);
    for (size_t r = 0; r < n; ++r) col[r] = g(r, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (size_t k = 0; k < j; ++k) {
        double d = 0.0;
        for (size_t r = 0; r < n; ++r) d += q(r, k) * col[r];
        for (size_t r = 0; r < n; ++r) col[r] -= d * q(r, k);
      }
    }
    const double norm = Norm(col);
    for (size_t r = 0; r < n; ++r) q(r, j) = col[r] / norm;
  }
  return q;
}

}  // namespace leakmeter
