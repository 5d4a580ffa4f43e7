#pragma once

// Point estimators: dyadic OLS with the intercept adjustment, the iteration
// map f_N of the eigenvalue-corrected objective, fixed-point iteration, the
// subsample estimator K-hat, and the five-step two-iteration estimator.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyad/core.hpp"
#include "dyad/errors.hpp"
#include "dyad/moments.hpp"
#include "dyad/spectral.hpp"

namespace dyad {

enum class Method { ols, ols_adjusted, single_iteration, fixed_point, two_step };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::ols: return "ols";
    case Method::ols_adjusted: return "ols_adjusted";
    case Method::single_iteration: return "single_iteration";
    case Method::fixed_point: return "fixed_point";
    default: return "two_step";
  }
}

struct EstimateReport {
  ParamVector mu_hat;
  Method method = Method::ols;
  int iterations = 0;
  std::vector<ParamVector> trajectory;
  bool converged = true;
  double final_step_norm = 0.0;
  double lambda_lead = 0.0;  // leading eigenvalue of M(mu_hat)
};

struct KEstimate {
  Matrix k;
  double spectral_radius = 0.0;
  Matrix g;  // (I - K)^{-1}
  bool radius_flagged = false;  // spectral_radius >= 1; recorded, not clipped
};

struct InterceptAdjustment {
  double a_hat = 0.0;
  double b_hat = 0.0;
  double sigma_u2_hat = 0.0;
  double gamma2_hat = 0.0;
  int delta_tilde = +1;
  double mu1_tilde = 0.0;
};

namespace detail {

// Least-squares solve with a reciprocal-condition gate at 1e-12. The systems
// here are L x L with L small, so SVD is cheap and gives the condition number.
inline Vector solve_checked(const Matrix& g, const Vector& rhs, const char* who) {
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smax > 0.0) || smin / smax < 1e-12)
    throw estimation_error(std::string(who) + ": singular system (rcond " +
                           std::to_string(smax > 0.0 ? smin / smax : 0.0) + ")");
  return svd.solve(rhs);
}

inline Matrix solve_checked(const Matrix& g, const Matrix& rhs, const char* who) {
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smax > 0.0) || smin / smax < 1e-12)
    throw estimation_error(std::string(who) + ": singular system (rcond " +
                           std::to_string(smax > 0.0 ? smin / smax : 0.0) + ")");
  return svd.solve(rhs);
}

inline double spectral_radius(const Matrix& k) {
  Eigen::EigenSolver<Matrix> es(k, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

// Ordinary least squares over all ordered dyads i != j.
inline EstimateReport ols_dyadic(const DyadicDesign& design, const OutcomeMatrix& y) {
  const Index l = design.l();
  Matrix gram(l, l);
  Vector rhs(l);
  for (Index a = 0; a < l; ++a) {
    rhs(a) = design.x(a).cwiseProduct(y.y()).sum();
    for (Index b = 0; b <= a; ++b) {
      gram(a, b) = design.x(a).cwiseProduct(design.x(b)).sum();
      gram(b, a) = gram(a, b);
    }
  }
  EstimateReport rep;
  rep.mu_hat = detail::solve_checked(gram, rhs, "ols_dyadic");
  rep.method = Method::ols;
  rep.trajectory = {rep.mu_hat};
  return rep;
}

// Unique real root of P(x; a, |b|) = x^3 + 3 a x - |b| for a >= 0, found by
// bisection; P is strictly increasing so the root is unique.
inline double solve_depressed_cubic(double a, double abs_b) {
  if (a < 0.0) throw contract_error("solve_depressed_cubic: a must be >= 0");
  if (abs_b < 0.0) throw contract_error("solve_depressed_cubic: |b| must be >= 0");
  double lo = 0.0;
  double hi = std::max(1.0, std::cbrt(abs_b) + std::sqrt(3.0 * a));
  auto p = [&](double x) { return x * x * x + 3.0 * a * x - abs_b; };
  if (p(lo) > 0.0) return 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (p(mid) <= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Intercept adjustment: recovers sigma_U^2, gamma^2 and the interaction sign
// from the triple-product moments of the OLS residuals, and shifts the
// intercept estimate by -delta * gamma^2.
inline InterceptAdjustment adjust_intercept(const DyadicDesign& design,
                                            const OutcomeMatrix& y,
                                            const ParamVector& beta_tilde) {
  if (!design.has_intercept_column())
    throw contract_error("adjust_intercept: design has no intercept column");
  if (beta_tilde.size() != design.l())
    throw contract_error("adjust_intercept: coefficient length mismatch");
  const Index n = design.n();
  const double n3 = static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(n);

  Matrix e = build_residual_matrix(design, y, beta_tilde).m;
  // sum over ordered distinct triples of e_ij e_ik, via row sums
  const Vector r = e.rowwise().sum();
  const Vector s = e.cwiseProduct(e).rowwise().sum();
  const double a_raw = (r.squaredNorm() - s.sum()) / n3;
  // sum over ordered distinct triples of e_ij e_ik e_jk == trace(E^3)
  const double b_hat = (e * e).cwiseProduct(e).sum() / n3;

  InterceptAdjustment adj;
  adj.a_hat = a_raw;
  adj.b_hat = b_hat;
  adj.delta_tilde = (b_hat < 0.0) ? -1 : +1;
  adj.sigma_u2_hat = solve_depressed_cubic(std::max(a_raw, 0.0), std::abs(b_hat));
  if (adj.sigma_u2_hat < 1e-10)
    throw estimation_error("adjust_intercept: degenerate individual effects (sigma_U^2 ~ 0)");
  adj.gamma2_hat = std::max(std::max(a_raw, 0.0) / adj.sigma_u2_hat, 0.0);
  adj.mu1_tilde = beta_tilde(design.intercept_column()) - adj.delta_tilde * adj.gamma2_hat;
  return adj;
}

// OLS slopes plus the adjusted intercept: the default sqrt(N)-consistent
// first stage for everything downstream.
inline EstimateReport first_stage(const DyadicDesign& design, const OutcomeMatrix& y) {
  EstimateReport rep = ols_dyadic(design, y);
  if (design.has_intercept_column()) {
    const InterceptAdjustment adj = adjust_intercept(design, y, rep.mu_hat);
    rep.mu_hat(design.intercept_column()) = adj.mu1_tilde;
    rep.method = Method::ols_adjusted;
    rep.trajectory = {rep.mu_hat};
  }
  return rep;
}

// One application of the iteration map f_N given the leading eigenvector nu
// of M(mu). The diagonal-exclusion ranges (i != j, k != i,j) are enforced
// exactly; assembly is O(N^2 L^2) through weighted row sums.
inline ParamVector f_n_apply(const DyadicDesign& design, const OutcomeMatrix& y,
                             const Vector& nu) {
  const Index n = design.n();
  const Index l = design.l();
  if (nu.size() != n) throw contract_error("f_n_apply: eigenvector length mismatch");

  std::vector<Vector> w(static_cast<std::size_t>(l));
  for (Index a = 0; a < l; ++a) w[static_cast<std::size_t>(a)] = design.x(a) * nu;
  const Vector uy = y.y() * nu;
  const Vector nu2 = nu.cwiseProduct(nu);

  Matrix gram(l, l);
  Vector rhs(l);
  for (Index a = 0; a < l; ++a) {
    const Matrix& xa = design.x(a);
    // i == j terms of sum_k w_a w_b enter with nu_i^2; remove them so the
    // triple sum runs over i != j only.
    rhs(a) = xa.cwiseProduct(y.y()).sum() -
             (w[static_cast<std::size_t>(a)].dot(uy) -
              nu2.dot(xa.cwiseProduct(y.y()).rowwise().sum()));
    for (Index b = 0; b <= a; ++b) {
      const Matrix& xb = design.x(b);
      const double full = xa.cwiseProduct(xb).sum();
      const double corr = w[static_cast<std::size_t>(a)].dot(w[static_cast<std::size_t>(b)]) -
                          nu2.dot(xa.cwiseProduct(xb).rowwise().sum());
      gram(a, b) = full - corr;
      gram(b, a) = gram(a, b);
    }
  }
  return detail::solve_checked(gram, rhs, "f_n_iterate");
}

// f_N(mu): leading-|lambda| eigenvector of M(mu), then the closed-form
// weighted least squares.
inline ParamVector f_n_iterate(const DyadicDesign& design, const OutcomeMatrix& y,
                               const ParamVector& mu) {
  const SpectralSummary spec = eig_sym(build_residual_matrix(design, y, mu).m);
  return f_n_apply(design, y, spec.nu);
}

struct FixedPointOptions {
  double tol = 1e-10;
  int max_iter = 500;
};

// Iterates mu <- f_N(mu) from a sqrt(N)-consistent start until the step
// norm falls below tol * (1 + |mu|_inf). Aborts with an estimation error if
// the iterates wander 10^3 * (1 + |mu_start|) away from the start.
inline EstimateReport fixed_point(const DyadicDesign& design, const OutcomeMatrix& y,
                                  const ParamVector& mu_start,
                                  const FixedPointOptions& opt = {}) {
  EstimateReport rep;
  rep.method = Method::fixed_point;
  rep.trajectory.push_back(mu_start);
  ParamVector mu = mu_start;
  const double escape = 1e3 * (1.0 + mu_start.norm());
  for (int it = 0; it < opt.max_iter; ++it) {
    const ParamVector next = f_n_iterate(design, y, mu);
    rep.trajectory.push_back(next);
    rep.iterations = it + 1;
    rep.final_step_norm = (next - mu).cwiseAbs().maxCoeff();
    if ((next - mu_start).norm() > escape)
      throw estimation_error("fixed_point: iteration diverged after " +
                             std::to_string(it + 1) + " steps");
    mu = next;
    if (rep.final_step_norm <= opt.tol * (1.0 + mu.cwiseAbs().maxCoeff())) {
      rep.converged = true;
      rep.mu_hat = mu;
      rep.lambda_lead =
          eig_sym(build_residual_matrix(design, y, mu).m).leading_eigenvalue();
      return rep;
    }
  }
  rep.converged = false;
  rep.mu_hat = mu;
  rep.lambda_lead = eig_sym(build_residual_matrix(design, y, mu).m).leading_eigenvalue();
  return rep;
}

namespace detail {

inline KEstimate assemble_k(double q, const Matrix& xx, const Matrix& x_path,
                            const Vector& x_mean) {
  const Index l = xx.rows();
  KEstimate out;
  const Matrix inner = xx - q * x_path;
  out.k = q * solve_checked(inner, Matrix(x_path - q * x_mean * x_mean.transpose()),
                            "k_hat inner matrix");
  out.spectral_radius = spectral_radius(out.k);
  out.radius_flagged = out.spectral_radius >= 1.0;
  out.g = solve_checked(Matrix(Matrix::Identity(l, l) - out.k),
                        Matrix(Matrix::Identity(l, l)), "k_hat (I-K)");
  return out;
}

}  // namespace detail

// Plug-in K estimator from disjoint subsamples: pair moments over
// (2k-1, 2k), path moments over the disjoint triples (3k-2, 3k-1, 3k), and
// q = (sum_i nu_i)^2 / N for E(U)^2 / E(U^2).
inline KEstimate k_hat(const DyadicDesign& design, const Vector& nu) {
  const Index n = design.n();
  const Index l = design.l();
  if (n < 6) throw contract_error("k_hat: needs n >= 6");
  if (nu.size() != n) throw contract_error("k_hat: eigenvector length mismatch");

  const double q = nu.sum() * nu.sum() / static_cast<double>(n);
  const Index np = n / 2;
  const Index nt = n / 3;
  Matrix pair_xx = Matrix::Zero(l, l);
  Matrix path_xx = Matrix::Zero(l, l);
  Vector pair_mean = Vector::Zero(l);
  Vector xe(l), xe2(l);
  for (Index k = 0; k < np; ++k) {
    const Index i = 2 * k, j = 2 * k + 1;
    for (Index a = 0; a < l; ++a) xe(a) = design.x(a)(i, j);
    pair_xx.noalias() += xe * xe.transpose();
    pair_mean += xe;
  }
  pair_xx /= static_cast<double>(np);
  pair_mean /= static_cast<double>(np);
  for (Index k = 0; k < nt; ++k) {
    const Index i = 3 * k, j = 3 * k + 1, m = 3 * k + 2;
    for (Index a = 0; a < l; ++a) {
      xe(a) = design.x(a)(i, j);
      xe2(a) = design.x(a)(j, m);
    }
    path_xx.noalias() += xe * xe2.transpose();
  }
  path_xx /= static_cast<double>(nt);
  return detail::assemble_k(q, pair_xx, path_xx, pair_mean);
}

// Same plug-in with full-sample U-statistic moments instead of the disjoint
// subsamples; same sqrt(N) consistency, much smaller moment noise. Default
// inside the two-step estimator.
inline KEstimate k_hat_full_moments(const DyadicDesign& design, const Vector& nu) {
  if (nu.size() != design.n()) throw contract_error("k_hat_full_moments: length mismatch");
  const double q = nu.sum() * nu.sum() / static_cast<double>(design.n());
  const CrossMoments cm = cross_moments(design);
  return detail::assemble_k(q, cm.xx, cm.x_path, cm.x_mean);
}

enum class KSource { full_moments, prop5_subsample };

struct TwoStepResult {
  EstimateReport report;
  KEstimate k;
  SpectralSummary first_stage_spectrum;  // of M(mu_tilde)
};

// Five-step two-iteration estimator:
//   (1) K-hat at mu_tilde, (2) mu1 = f_N(mu_tilde),
//   (3) mu_check1 = G mu1 + (I-G) mu_tilde, (4) mu2 = f_N(mu_check1),
//   (5) mu_check2 = G mu2 + (I-G) mu_check1, with G = (I - K-hat)^{-1}.
inline TwoStepResult two_step(const DyadicDesign& design, const OutcomeMatrix& y,
                              const ParamVector& mu_tilde,
                              KSource k_source = KSource::full_moments,
                              const std::optional<Matrix>& k_override = std::nullopt) {
  const Index l = design.l();
  TwoStepResult out;
  out.first_stage_spectrum = eig_sym(build_residual_matrix(design, y, mu_tilde).m);
  const Vector& nu = out.first_stage_spectrum.nu;

  if (k_override) {
    out.k.k = *k_override;
    out.k.spectral_radius = detail::spectral_radius(out.k.k);
    out.k.radius_flagged = out.k.spectral_radius >= 1.0;
    out.k.g = detail::solve_checked(Matrix(Matrix::Identity(l, l) - out.k.k),
                                    Matrix(Matrix::Identity(l, l)), "two_step (I-K)");
  } else {
    out.k = (k_source == KSource::prop5_subsample) ? k_hat(design, nu)
                                                   : k_hat_full_moments(design, nu);
  }
  const Matrix& g = out.k.g;
  const Matrix ig = Matrix::Identity(l, l) - g;

  const ParamVector mu1 = f_n_apply(design, y, nu);
  const ParamVector mu_check1 = g * mu1 + ig * mu_tilde;
  const ParamVector mu2 = f_n_iterate(design, y, mu_check1);
  const ParamVector mu_check2 = g * mu2 + ig * mu_check1;

  EstimateReport& rep = out.report;
  rep.method = Method::two_step;
  rep.mu_hat = mu_check2;
  rep.iterations = 2;
  rep.trajectory = {mu_tilde, mu1, mu_check1, mu2, mu_check2};
  rep.final_step_norm = (mu_check2 - mu_check1).cwiseAbs().maxCoeff();
  rep.lambda_lead =
      eig_sym(build_residual_matrix(design, y, mu_check2).m).leading_eigenvalue();
  return out;
}

}  // namespace dyad
