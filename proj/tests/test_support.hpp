#pragma once

// Shared helpers for the test suites: brute-force oracles and random data
// generators. Everything here is independent of the library's solution paths
// so it can serve as a check on them.

#include <algorithm>
#include <numeric>
#include <vector>

#include "qjacobi/qpoint.hpp"

namespace qjtest {

using qjacobi::Perm;
using qjacobi::QPoint;
using qjacobi::Rng;
using qjacobi::Vec;

// Exhaustive minimum over all Q! permutations; oracle for the assignment
// solver (usable up to Q = 7 or so).
inline double brute_force_g_distance2(const QPoint& t, const QPoint& s) {
  const int q = t.q();
  Perm sigma(q);
  std::iota(sigma.begin(), sigma.end(), 0);
  double best = qjacobi::kInf;
  do {
    double c = 0.0;
    for (int l = 0; l < q; ++l) c += qjacobi::dist2(t.sheet_vec(l), s.sheet_vec(sigma[l]));
    best = std::min(best, c);
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return best;
}

inline Vec random_vec(Rng& rng, int d, double scale = 1.0) {
  Vec v(d);
  for (double& x : v) x = rng.gaussian(scale);
  return v;
}

inline QPoint random_qpoint(Rng& rng, int q, int d, double scale = 1.0) {
  QPoint t(q, d);
  for (int l = 0; l < q; ++l) t.set_sheet(l, random_vec(rng, d, scale));
  return t;
}

}  // namespace qjtest
