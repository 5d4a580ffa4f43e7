#pragma once

#include <vector>

#include "dyad/dgp.hpp"
#include "dyad/rng.hpp"
#include "dyad/types.hpp"

namespace dyad::test {

inline Matrix random_symmetric(Index n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) {
      m(i, j) = scale * rng.normal();
      m(j, i) = m(i, j);
    }
  return m;
}

inline Matrix random_symmetric_hollow(Index n, std::uint64_t seed, double scale = 1.0) {
  Matrix m = random_symmetric(n, seed, scale);
  m.diagonal().setZero();
  return m;
}

// Y_ij = mu0 + U_i U_j + V_ij with standard normal U and V; the model of the
// objective-profile figure.
inline DesignSpec intercept_only_spec(Index n, double gamma, std::uint64_t seed,
                                      double beta1 = 1.0) {
  DesignSpec d;
  d.n = n;
  d.beta = Vector::Constant(1, beta1);
  d.regressors = {RegressorForm::intercept};
  d.gamma = gamma;
  d.seed = seed;
  return d;
}

inline DesignSpec paper_design(int index, Index n, std::uint64_t seed) {
  DesignSpec d = standard_designs()[static_cast<std::size_t>(index - 1)];
  d.n = n;
  d.seed = seed;
  return d;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

inline double skewness(const std::vector<double>& v) {
  const double m = mean(v);
  double s2 = 0.0, s3 = 0.0;
  for (double x : v) {
    s2 += (x - m) * (x - m);
    s3 += (x - m) * (x - m) * (x - m);
  }
  const double n = static_cast<double>(v.size());
  s2 /= n;
  s3 /= n;
  return s3 / std::pow(s2, 1.5);
}

}  // namespace dyad::test
