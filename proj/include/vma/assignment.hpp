#ifndef VMA_ASSIGNMENT_HPP_
#define VMA_ASSIGNMENT_HPP_

#include <cstddef>
#include <limits>
#include <vector>

#include "vma/error.hpp"

namespace vma {

/// Minimum-cost one-to-one assignment (Hungarian method with potentials,
/// O(n^2 m)). `cost` is rows x cols; returns, for each row, its column or -1
/// when the row is left unassigned (only possible when rows > cols).
inline std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size();
  if (rows == 0) return {};
  const std::size_t cols = cost.front().size();
  for (const auto& r : cost)
    if (r.size() != cols) throw Error(ErrorCode::InvalidArgument, "ragged cost matrix");
  if (cols == 0) return std::vector<int>(rows, -1);

  const bool transposed = rows > cols;
  const std::size_t n = transposed ? cols : rows;  // n <= m
  const std::size_t m = transposed ? rows : cols;
  auto at = [&](std::size_t i, std::size_t j) { return transposed ? cost[j][i] : cost[i][j]; };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> result(rows, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    if (transposed) result[j - 1] = static_cast<int>(p[j] - 1);
    else result[p[j] - 1] = static_cast<int>(j - 1);
  }
  return result;
}

}  // namespace vma

#endif  // VMA_ASSIGNMENT_HPP_
