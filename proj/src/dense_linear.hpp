#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace fracpq::detail {

/// Solves A x = b by Gaussian elimination with partial pivoting. A is n x n
/// row-major and is destroyed; the solution lands in b. Returns false on a
/// singular or non-finite system.
inline bool solve_dense(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int col = 0; col < n; ++col) {
    int best = col;
    double mag = std::abs(a[static_cast<std::size_t>(col) * n + col]);
    for (int row = col + 1; row < n; ++row) {
      const double m = std::abs(a[static_cast<std::size_t>(row) * n + col]);
      if (m > mag) {
        mag = m;
        best = row;
      }
    }
    if (!(mag > 0.0) || !std::isfinite(mag)) return false;
    if (best != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(a[static_cast<std::size_t>(best) * n + c],
                  a[static_cast<std::size_t>(col) * n + c]);
      }
      std::swap(b[static_cast<std::size_t>(best)], b[static_cast<std::size_t>(col)]);
    }
    const double d = a[static_cast<std::size_t>(col) * n + col];
    for (int row = col + 1; row < n; ++row) {
      const double f = a[static_cast<std::size_t>(row) * n + col] / d;
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) {
        a[static_cast<std::size_t>(row) * n + c] -= f * a[static_cast<std::size_t>(col) * n + c];
      }
      b[static_cast<std::size_t>(row)] -= f * b[static_cast<std::size_t>(col)];
    }
  }
  for (int row = n - 1; row >= 0; --row) {
    double s = b[static_cast<std::size_t>(row)];
    for (int c = row + 1; c < n; ++c) {
      s -= a[static_cast<std::size_t>(row) * n + c] * b[static_cast<std::size_t>(c)];
    }
    b[static_cast<std::size_t>(row)] = s / a[static_cast<std::size_t>(row) * n + row];
    if (!std::isfinite(b[static_cast<std::size_t>(row)])) return false;
  }
  return true;
}

}  // namespace fracpq::detail
