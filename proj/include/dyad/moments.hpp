#pragma once

// Sample cross moments of the regressors: pairwise, path (shared-node), and
// first moments. Assembled from row sums in O(N^2 L^2); the O(N^3) triple
// loop is never materialized.

#include "dyad/core.hpp"
#include "dyad/types.hpp"

namespace dyad {

struct CrossMoments {
  Matrix xx;      // mean of X_ij X_ij' over ordered pairs i != j
  Matrix x_path;  // mean of X_ij X_jk' over ordered distinct triples
  Vector x_mean;  // mean of X_ij over ordered pairs i != j
};

inline CrossMoments cross_moments(const DyadicDesign& design) {
  const Index n = design.n();
  const Index l = design.l();
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  const double triples = pairs * static_cast<double>(n - 2);

  CrossMoments cm;
  cm.xx.resize(l, l);
  cm.x_path.resize(l, l);
  cm.x_mean.resize(l);

  std::vector<Vector> rowsum(static_cast<std::size_t>(l));
  for (Index a = 0; a < l; ++a) rowsum[static_cast<std::size_t>(a)] = design.x(a).rowwise().sum();

  for (Index a = 0; a < l; ++a) {
    cm.x_mean(a) = design.x(a).sum() / pairs;
    for (Index b = 0; b <= a; ++b) {
      const double dot = design.x(a).cwiseProduct(design.x(b)).sum();
      cm.xx(a, b) = dot / pairs;
      cm.xx(b, a) = cm.xx(a, b);
      // sum over i,j,k with X_jj = 0 killing i == j and k == j; subtract the
      // i == k terms, which reduce to the pairwise dot.
      const double path = rowsum[static_cast<std::size_t>(a)].dot(rowsum[static_cast<std::size_t>(b)]) - dot;
      cm.x_path(a, b) = path / triples;
      cm.x_path(b, a) = cm.x_path(a, b);
    }
  }
  return cm;
}

}  // namespace dyad
