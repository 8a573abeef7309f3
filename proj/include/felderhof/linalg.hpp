#pragma once

// Small dense complex determinants by partially pivoted LU. The kernels in
// this project are at most 8x8, where this is unconditionally adequate.

#include <cmath>
#include <vector>

#include "felderhof/theta.hpp"

namespace felderhof {

/// Determinant of a row-major n x n matrix; the buffer is destroyed.
inline cx det_inplace(std::vector<cx>& a, int n) {
  cx det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(a[static_cast<std::size_t>(col) * n + col]);
    for (int r = col + 1; r < n; ++r) {
      const double m = std::abs(a[static_cast<std::size_t>(r) * n + col]);
      if (m > best) {
        best = m;
        piv = r;
      }
    }
    if (best == 0.0) return cx(0.0);
    if (piv != col) {
      for (int c = 0; c < n; ++c)
        std::swap(a[static_cast<std::size_t>(piv) * n + c],
                  a[static_cast<std::size_t>(col) * n + c]);
      det = -det;
    }
    const cx pivot = a[static_cast<std::size_t>(col) * n + col];
    det *= pivot;
    for (int r = col + 1; r < n; ++r) {
      const cx f = a[static_cast<std::size_t>(r) * n + col] / pivot;
      if (f == cx(0.0)) continue;
      for (int c = col; c < n; ++c)
        a[static_cast<std::size_t>(r) * n + c] -= f * a[static_cast<std::size_t>(col) * n + c];
    }
  }
  return det;
}

/// det of the n x n matrix with entries entry(j, k), 1-indexed.
template <typename F>
cx det_n(int n, F&& entry) {
  if (n == 0) return cx(1.0);
  std::vector<cx> a(static_cast<std::size_t>(n) * n);
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k)
      a[static_cast<std::size_t>(j - 1) * n + (k - 1)] = entry(j, k);
  return det_inplace(a, n);
}

}  // namespace felderhof
