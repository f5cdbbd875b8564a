#pragma once

// Exact linear assignment via shortest augmenting paths with potentials
// (O(n^3)). Forbidden entries are modeled as a large finite cost and
// filtered out of the returned assignment.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gmva/tensor.hpp"

namespace gmva {

struct Assignment {
  // row -> assigned column, -1 when the row ended up unmatched
  std::vector<int> row_to_col;
  double total = 0.0;
};

namespace detail {

constexpr double kForbiddenCost = 1e12;

// Minimizes total cost over a square matrix. Every row gets a column; the
// caller drops pairs that land on forbidden entries.
inline std::vector<int> lap_min(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  const double INF = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, INF);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = INF;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
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
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

// One-to-one assignment over an N x N score matrix. Entries that are
// -inf (maximize) or +inf (minimize) are never assigned; rows with no
// feasible column stay unmatched.
inline Assignment hungarian(const std::vector<std::vector<double>>& scores, bool maximize) {
  const int n = static_cast<int>(scores.size());
  Assignment out;
  out.row_to_col.assign(n, -1);
  if (n == 0) return out;
  for (const auto& row : scores)
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("hungarian: matrix must be square");

  std::vector<std::vector<char>> forbidden(n, std::vector<char>(n, 0));
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = scores[i][j];
      if (std::isnan(s)) throw std::invalid_argument("hungarian: NaN score");
      bool bad = maximize ? (s == -std::numeric_limits<double>::infinity())
                          : (s == std::numeric_limits<double>::infinity());
      if (!bad && std::abs(s) >= detail::kForbiddenCost)
        throw std::invalid_argument("hungarian: finite scores must stay below 1e12");
      forbidden[i][j] = bad ? 1 : 0;
      cost[i][j] = bad ? detail::kForbiddenCost : (maximize ? -s : s);
    }

  std::vector<int> rc = detail::lap_min(cost);
  for (int i = 0; i < n; ++i) {
    int j = rc[i];
    if (j < 0 || forbidden[i][j]) continue;
    out.row_to_col[i] = j;
    out.total += scores[i][j];
  }
  return out;
}

}  // namespace gmva
