/*
 * Copyright 2026 The mvassoc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mvassoc/errors.hpp"

namespace mvassoc {

using Assignment = std::vector<std::pair<int, int>>;

/// Constant used to pad a rectangular cost matrix to a square one. It exceeds
/// the total of any real assignment so padded cells are only used when a row
/// or column has no real partner left.
inline double padding_cost(const Eigen::MatrixXd& costs) {
  const double max_cost = costs.size() == 0 ? 0.0 : costs.maxCoeff();
  return 10.0 * (max_cost + 1.0);
}

/// Minimum-cost bipartite assignment (Kuhn-Munkres with row potentials and
/// shortest augmenting paths, O(n^3)).
///
/// Rectangular inputs are padded to n x n with padding_cost(); padded pairs
/// are dropped, so the result has min(rows, cols) pairs sorted by row.
/// An empty side yields an empty assignment.
inline Assignment kuhn_munkres_assign(const Eigen::MatrixXd& costs) {
  const auto rows = static_cast<int>(costs.rows());
  const auto cols = static_cast<int>(costs.cols());
  if (rows == 0 || cols == 0) return {};
  if (!costs.allFinite()) {
    throw InvariantError("assignment costs must be finite");
  }
  if (costs.minCoeff() < 0.0) {
    throw InvariantError("assignment costs must be non-negative");
  }

  const int n = std::max(rows, cols);
  const double pad = padding_cost(costs);
  auto cost = [&](int r, int c) {
    return (r < rows && c < cols) ? costs(r, c) : pad;
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; index 0 is the virtual source row/column.
  std::vector<double> row_pot(n + 1, 0.0), col_pot(n + 1, 0.0);
  std::vector<int> col_match(n + 1, 0), way(n + 1, 0);

  for (int r = 1; r <= n; ++r) {
    col_match[0] = r;
    int c0 = 0;
    std::vector<double> min_slack(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[c0] = 1;
      const int r0 = col_match[c0];
      double delta = kInf;
      int c1 = 0;
      for (int c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double cur = cost(r0 - 1, c - 1) - row_pot[r0] - col_pot[c];
        if (cur < min_slack[c]) {
          min_slack[c] = cur;
          way[c] = c0;
        }
        if (min_slack[c] < delta) {
          delta = min_slack[c];
          c1 = c;
        }
      }
      for (int c = 0; c <= n; ++c) {
        if (used[c]) {
          row_pot[col_match[c]] += delta;
          col_pot[c] -= delta;
        } else {
          min_slack[c] -= delta;
        }
      }
      c0 = c1;
    } while (col_match[c0] != 0);
    do {
      const int c1 = way[c0];
      col_match[c0] = col_match[c1];
      c0 = c1;
    } while (c0 != 0);
  }

  Assignment out;
  out.reserve(static_cast<std::size_t>(std::min(rows, cols)));
  for (int c = 1; c <= n; ++c) {
    const int r = col_match[c] - 1;
    if (r < rows && c - 1 < cols) out.emplace_back(r, c - 1);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double assignment_cost(const Eigen::MatrixXd& costs,
                              const Assignment& assignment) {
  double total = 0.0;
  for (const auto& [r, c] : assignment) total += costs(r, c);
  return total;
}

}  // namespace mvassoc
