#pragma once

// Dyadic data model: symmetric zero-diagonal regressor and outcome matrices,
// the residual matrix M(mu) = Y - sum_l mu_l X_l, and the two least-squares
// objectives (full and eigenvalue-corrected).

#include <string>
#include <utility>
#include <vector>

#include "dyad/errors.hpp"
#include "dyad/spectral.hpp"
#include "dyad/types.hpp"

namespace dyad {

using ParamVector = Vector;

namespace detail {

inline void check_dyadic_matrix(const Matrix& m, Index n, const char* who) {
  if (m.rows() != n || m.cols() != n)
    throw contract_error(std::string(who) + ": expected " + std::to_string(n) + "x" +
                         std::to_string(n) + " matrix");
  for (Index i = 0; i < n; ++i) {
    if (m(i, i) != 0.0)
      throw contract_error(std::string(who) + ": nonzero diagonal at index " +
                           std::to_string(i));
    for (Index j = 0; j < i; ++j)
      if (m(i, j) != m(j, i))
        throw contract_error(std::string(who) + ": asymmetry at (" + std::to_string(i) +
                             "," + std::to_string(j) + ")");
  }
}

}  // namespace detail

// Symmetric N x N x L regressor tensor with zero diagonals. Immutable after
// construction; construction validates the invariants.
class DyadicDesign {
 public:
  DyadicDesign(std::vector<Matrix> x, int intercept_column = -1)
      : x_(std::move(x)), intercept_column_(intercept_column) {
    if (x_.empty()) throw contract_error("DyadicDesign: needs at least one regressor");
    n_ = x_[0].rows();
    if (n_ < 4) throw contract_error("DyadicDesign: n must be >= 4");
    for (std::size_t l = 0; l < x_.size(); ++l)
      detail::check_dyadic_matrix(x_[l], n_, "DyadicDesign regressor");
    if (intercept_column_ >= static_cast<int>(x_.size()))
      throw contract_error("DyadicDesign: intercept column out of range");
    if (intercept_column_ >= 0) {
      const Matrix& c = x_[static_cast<std::size_t>(intercept_column_)];
      for (Index i = 0; i < n_; ++i)
        for (Index j = 0; j < n_; ++j)
          if (i != j && c(i, j) != 1.0)
            throw contract_error("DyadicDesign: intercept column is not 1 off-diagonal");
    }
  }

  Index n() const { return n_; }
  Index l() const { return static_cast<Index>(x_.size()); }
  const Matrix& x(Index l) const { return x_[static_cast<std::size_t>(l)]; }
  const std::vector<Matrix>& regressors() const { return x_; }
  bool has_intercept_column() const { return intercept_column_ >= 0; }
  Index intercept_column() const {
    if (intercept_column_ < 0) throw contract_error("DyadicDesign: no intercept column");
    return intercept_column_;
  }

 private:
  std::vector<Matrix> x_;
  Index n_ = 0;
  int intercept_column_ = -1;
};

class OutcomeMatrix {
 public:
  explicit OutcomeMatrix(Matrix y) : y_(std::move(y)) {
    detail::check_dyadic_matrix(y_, y_.rows(), "OutcomeMatrix");
  }
  Index n() const { return y_.rows(); }
  const Matrix& y() const { return y_; }

 private:
  Matrix y_;
};

// M(mu) = Y - sum_l mu_l X_l, built from data; symmetric, zero diagonal.
struct ResidualMatrix {
  Matrix m;
  ParamVector mu;
  Index n() const { return m.rows(); }
};

inline ResidualMatrix build_residual_matrix(const DyadicDesign& design,
                                            const OutcomeMatrix& y,
                                            const ParamVector& mu) {
  if (mu.size() != design.l())
    throw contract_error("build_residual_matrix: mu has length " +
                         std::to_string(mu.size()) + ", design has " +
                         std::to_string(design.l()) + " regressors");
  if (y.n() != design.n())
    throw contract_error("build_residual_matrix: outcome/design dimension mismatch");
  Matrix m = y.y();
  for (Index l = 0; l < design.l(); ++l) m.noalias() -= mu(l) * design.x(l);
  m.diagonal().setZero();
  return {std::move(m), mu};
}

// Full OLS objective: sum over ordered pairs i != j of M_ij^2, which equals
// Trace(M^2) = sum_i lambda_i(M)^2 for zero-diagonal symmetric M.
inline double objective_full(const ResidualMatrix& m) { return m.m.squaredNorm(); }

// Eigenvalue-corrected objective: Trace(M^2) minus the largest squared
// eigenvalue, i.e. the sum of the N-1 smallest eigenvalues of M^2.
inline double objective_corrected(const ResidualMatrix& m, const SpectralSummary& spec) {
  if (spec.eigenvalues.size() != m.n())
    throw contract_error("objective_corrected: stale spectral summary (size " +
                         std::to_string(spec.eigenvalues.size()) + " vs matrix " +
                         std::to_string(m.n()) + ")");
  const double lead = spec.leading_eigenvalue();
  return spec.eigenvalues.squaredNorm() - lead * lead;
}

inline double objective_corrected(const ResidualMatrix& m) {
  return objective_corrected(m, eig_sym(m.m));
}

}  // namespace dyad
