#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "qjacobi/core.hpp"

namespace qjacobi {

// Exact solver for the square assignment problem (shortest augmenting path
// variant of the Kuhn-Munkres algorithm, O(n^3)). `cost` is row-major n x n.
// Returns the minimal total cost; `rowsol[i]` is the column assigned to row i.
inline double solve_assignment(const std::vector<double>& cost, int n, Perm& rowsol) {
  rowsol.assign(n, -1);
  if (n == 0) return 0.0;
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    if (p[j]) {
      rowsol[p[j] - 1] = j - 1;
      total += cost[(p[j] - 1) * n + (j - 1)];
    }
  }
  return total;
}

namespace detail {

// Optimal assignment cost over a sub-problem: rows `rows` against columns
// `cols` (both index into the original n x n matrix).
inline double sub_assignment_cost(const std::vector<double>& cost, int n,
                                  const std::vector<int>& rows,
                                  const std::vector<int>& cols) {
  const int m = static_cast<int>(rows.size());
  if (m == 0) return 0.0;
  std::vector<double> sub(static_cast<std::size_t>(m) * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) sub[a * m + b] = cost[rows[a] * n + cols[b]];
  Perm tmp;
  return solve_assignment(sub, m, tmp);
}

}  // namespace detail

// Assignment with a deterministic tie-break: among all matchings whose total
// cost equals the optimum (within a relative slack), returns the permutation
// that is lexicographically smallest as the sequence (sigma(0), sigma(1), ...).
// Row i is fixed to the smallest feasible column, then the next row, etc.
inline double solve_assignment_lex(const std::vector<double>& cost, int n, Perm& rowsol) {
  Perm first;
  const double best = solve_assignment(cost, n, first);
  const double tol = 1e-12 * (1.0 + std::abs(best));

  rowsol.assign(n, -1);
  std::vector<int> free_cols(n);
  for (int j = 0; j < n; ++j) free_cols[j] = j;
  double fixed_cost = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<int> rest_rows;
    for (int r = i + 1; r < n; ++r) rest_rows.push_back(r);
    bool placed = false;
    for (std::size_t jj = 0; jj < free_cols.size() && !placed; ++jj) {
      const int j = free_cols[jj];
      std::vector<int> rest_cols;
      for (int c : free_cols)
        if (c != j) rest_cols.push_back(c);
      const double completion = detail::sub_assignment_cost(cost, n, rest_rows, rest_cols);
      if (fixed_cost + cost[i * n + j] + completion <= best + tol) {
        rowsol[i] = j;
        fixed_cost += cost[i * n + j];
        free_cols.erase(free_cols.begin() + static_cast<long>(jj));
        placed = true;
      }
    }
    if (!placed) {  // numerically impossible, but keep the invariant
      rowsol[i] = free_cols.front();
      fixed_cost += cost[i * n + rowsol[i]];
      free_cols.erase(free_cols.begin());
    }
  }
  return best;
}

}  // namespace qjacobi
