#pragma once

// Symmetric eigendecomposition services, leading-eigenpair extraction with a
// fixed sign convention, and random-matrix diagnostics (semicircle law,
// rank-one interlacing, spike expansion).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dyad/errors.hpp"
#include "dyad/types.hpp"

namespace dyad {

struct SpectralSummary {
  Vector eigenvalues;   // sorted descending
  Index leading_index;  // position of the maximal-|lambda| eigenvalue
  Vector nu;            // unit eigenvector for that eigenvalue, sign-fixed
  bool sign_fixed = false;
  bool abs_tie = false;  // |l_1| == |l_N| within 1e-12; positive one returned

  double leading_eigenvalue() const { return eigenvalues(leading_index); }
};

struct SemicircleSpec {
  double sigma;
  explicit SemicircleSpec(double s) : sigma(s) {
    if (!(sigma > 0.0)) throw contract_error("SemicircleSpec: sigma must be > 0");
  }
};

namespace detail {

inline void check_square_symmetric(const Matrix& m, const char* who) {
  if (m.rows() != m.cols())
    throw contract_error(std::string(who) + ": matrix is not square");
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale)
    throw contract_error(std::string(who) + ": matrix is not symmetric (asymmetry " +
                         std::to_string(asym) + ")");
}

// Sign convention: sum(nu) >= 0; on an exact zero sum, first nonzero
// component positive. Idempotent.
inline void fix_sign(Vector& nu) {
  double s = nu.sum();
  if (s > 0.0) return;
  if (s < 0.0) {
    nu = -nu;
    return;
  }
  for (Index i = 0; i < nu.size(); ++i) {
    if (nu(i) != 0.0) {
      if (nu(i) < 0.0) nu = -nu;
      return;
    }
  }
}

}  // namespace detail

// Full symmetric eigendecomposition. Eigenvalues are returned descending and
// nu is the sign-fixed unit eigenvector of the maximal-|lambda| eigenvalue.
inline SpectralSummary eig_sym(const Matrix& m) {
  detail::check_square_symmetric(m, "eig_sym");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success)
    throw numerical_error("eig_sym: eigensolver failed to converge (n=" +
                          std::to_string(m.rows()) +
                          ", max|entry|=" + std::to_string(m.cwiseAbs().maxCoeff()) + ")");
  const Index n = m.rows();
  SpectralSummary out;
  out.eigenvalues = solver.eigenvalues().reverse();  // ascending -> descending
  const double lo = out.eigenvalues(n - 1);
  const double hi = out.eigenvalues(0);
  const double tie_tol = 1e-12 * (1.0 + std::max(std::abs(hi), std::abs(lo)));
  if (std::abs(std::abs(hi) - std::abs(lo)) <= tie_tol && n > 1 && hi != lo) {
    out.abs_tie = true;
    out.leading_index = 0;  // tie rule: return the positive one
  } else {
    out.leading_index = (std::abs(hi) >= std::abs(lo)) ? 0 : n - 1;
  }
  // column (n-1) of the ascending decomposition is the largest eigenvalue
  const Index src_col = (out.leading_index == 0) ? n - 1 : 0;
  out.nu = solver.eigenvectors().col(src_col);
  detail::fix_sign(out.nu);
  out.sign_fixed = true;
  return out;
}

// Eigenvalues only (descending); cheaper when eigenvectors are not needed.
inline Vector eigenvalues_sym(const Matrix& m) {
  detail::check_square_symmetric(m, "eigenvalues_sym");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw numerical_error("eigenvalues_sym: eigensolver failed to converge (n=" +
                          std::to_string(m.rows()) + ")");
  return solver.eigenvalues().reverse();
}

struct LeadingEigenpair {
  double lambda;  // signed; |lambda| == max_i |lambda_i|
  Vector nu;
  bool abs_tie = false;
};

inline LeadingEigenpair leading_abs_eigenpair(const Matrix& m) {
  SpectralSummary s = eig_sym(m);
  return {s.leading_eigenvalue(), std::move(s.nu), s.abs_tie};
}

// Density of the Wigner semicircle law, support [-2s, 2s].
inline double semicircle_pdf(double x, const SemicircleSpec& spec) {
  const double s = spec.sigma;
  if (std::abs(x) >= 2.0 * s) return 0.0;
  return std::sqrt(4.0 * s * s - x * x) / (6.283185307179586476925286766559 * s * s);
}

inline double semicircle_cdf(double x, const SemicircleSpec& spec) {
  const double s = spec.sigma;
  if (x <= -2.0 * s) return 0.0;
  if (x >= 2.0 * s) return 1.0;
  const double pi = 3.141592653589793238462643383279;
  return 0.5 + x * std::sqrt(4.0 * s * s - x * x) / (4.0 * pi * s * s) +
         std::asin(x / (2.0 * s)) / pi;
}

// Kolmogorov-Smirnov distance between the empirical CDF of the (already
// rescaled) eigenvalues and the semicircle CDF.
inline double semicircle_distance(const std::vector<double>& eigenvalues,
                                  const SemicircleSpec& spec) {
  if (eigenvalues.empty())
    throw contract_error("semicircle_distance: empty eigenvalue list");
  std::vector<double> e = eigenvalues;
  std::sort(e.begin(), e.end());
  const double n = static_cast<double>(e.size());
  double d = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double f = semicircle_cdf(e[i], spec);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

struct InterlacingResult {
  bool holds;
  double max_violation;  // worst signed violation; <= 0 when interlacing holds
};

// Checks lambda_i(V) <= lambda_i(V+UU') <= lambda_{i-1}(V) for i >= 2 and
// lambda_1(V) <= lambda_1(V+UU'), all within 1e-8*(1+max|lambda|). Both
// inputs must be sorted descending.
inline InterlacingResult check_interlacing(const Vector& eigs_base,
                                           const Vector& eigs_spiked) {
  if (eigs_base.size() != eigs_spiked.size())
    throw contract_error("check_interlacing: length mismatch");
  if (eigs_base.size() == 0)
    throw contract_error("check_interlacing: empty input");
  const double amax = std::max(eigs_base.cwiseAbs().maxCoeff(),
                               eigs_spiked.cwiseAbs().maxCoeff());
  const double tol = 1e-8 * (1.0 + amax);
  double worst = -std::numeric_limits<double>::infinity();
  worst = std::max(worst, eigs_base(0) - eigs_spiked(0));  // l1(V) <= l1(V+UU')
  for (Index i = 1; i < eigs_base.size(); ++i) {
    worst = std::max(worst, eigs_base(i) - eigs_spiked(i));
    worst = std::max(worst, eigs_spiked(i) - eigs_base(i - 1));
  }
  return {worst <= tol, worst};
}

// Three-term expansion for the largest eigenvalue of A, where
// A_ij = U_i U_j + V_ij off-diagonal with zero diagonal. The caller supplies
// the V matrix carrying the theoretical diagonal E(U_1)^2 - U_i^2 and the
// population value of E(U_1)^2. Simulation-only oracle.
inline double spike_expansion_oracle(const Vector& u, const Matrix& v_matrix,
                                     double e_u1_squared) {
  detail::check_square_symmetric(v_matrix, "spike_expansion_oracle");
  if (u.size() != v_matrix.rows())
    throw contract_error("spike_expansion_oracle: dimension mismatch");
  const double uu = u.squaredNorm();
  if (uu == 0.0) throw contract_error("spike_expansion_oracle: U'U is zero");
  const Vector vu = v_matrix * u;
  return uu + u.dot(vu) / uu + vu.squaredNorm() / (uu * uu) - e_u1_squared;
}

// Writes one eigenvalue per line (17 significant digits) under a
// header line "eigenvalue".
inline void export_spectrum(const Vector& eigenvalues, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error("export_spectrum: cannot open " + path);
  std::fputs("eigenvalue\n", f);
  for (Index i = 0; i < eigenvalues.size(); ++i)
    std::fprintf(f, "%.17g\n", eigenvalues(i));
  if (std::fclose(f) != 0) throw io_error("export_spectrum: write failed for " + path);
}

}  // namespace dyad
