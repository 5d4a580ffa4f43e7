#pragma once

// Spectral recovery of the interaction sign and individual effects, bias
// correction, noise-variance estimation, and the asymptotic covariance of
// the eigenvalue-corrected estimator.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "dyad/core.hpp"
#include "dyad/errors.hpp"
#include "dyad/estimators.hpp"
#include "dyad/moments.hpp"
#include "dyad/spectral.hpp"

namespace dyad {

struct EffectRecovery {
  int delta_hat = +1;
  Vector u_hat;
  double m1 = 0.0;  // (1/N) sum U-hat
  double m2 = 0.0;  // (1/N) sum U-hat^2
  double m3 = 0.0;  // (1/N) sum U-hat^3
};

// delta-hat is the sign of the maximal-|lambda| eigenvalue and
// U-hat_i = delta-hat * sqrt(max|lambda|) * nu_i.
inline EffectRecovery recover_effects(const SpectralSummary& spec) {
  const double lead = spec.leading_eigenvalue();
  EffectRecovery out;
  out.delta_hat = (lead < 0.0) ? -1 : +1;
  out.u_hat = (out.delta_hat * std::sqrt(std::abs(lead))) * spec.nu;
  const double n = static_cast<double>(spec.nu.size());
  out.m1 = out.u_hat.sum() / n;
  out.m2 = out.u_hat.squaredNorm() / n;
  out.m3 = out.u_hat.array().cube().sum() / n;
  return out;
}

// Consistent estimator of the asymptotic bias of N(mu* - mu0):
//   2 delta (m1 m3 / m2) (I-K)^{-1} (xx - q x_path)^{-1} x_mean,
// with q = m1^2 / m2.
inline Vector bias_estimate(const EffectRecovery& effects, const KEstimate& k,
                            const CrossMoments& cm) {
  if (effects.m2 <= 1e-10)
    throw contract_error("bias_estimate: m2 is numerically zero");
  const double q = effects.m1 * effects.m1 / effects.m2;
  const Matrix b = cm.xx - q * cm.x_path;
  const Vector core = detail::solve_checked(b, cm.x_mean, "bias_estimate");
  return (2.0 * effects.delta_hat * effects.m1 * effects.m3 / effects.m2) *
         (k.g * core);
}

// Residual variance of the OLS fit on the disjoint i.i.d. subsample
// {(Y_{2k-1,2k}, X_{2k-1,2k})}, with the usual degrees-of-freedom divisor.
// An intercept is appended when the design lacks one.
inline double sigma_eps2(const DyadicDesign& design, const OutcomeMatrix& y) {
  const Index n = design.n();
  const Index np = n / 2;
  const bool add_intercept = !design.has_intercept_column();
  const Index l = design.l() + (add_intercept ? 1 : 0);
  if (n < 2 * (design.l() + 2)) throw contract_error("sigma_eps2: n too small");

  Matrix x(np, l);
  Vector yo(np);
  for (Index k = 0; k < np; ++k) {
    const Index i = 2 * k, j = 2 * k + 1;
    for (Index a = 0; a < design.l(); ++a) x(k, a) = design.x(a)(i, j);
    if (add_intercept) x(k, l - 1) = 1.0;
    yo(k) = y.y()(i, j);
  }
  const Matrix gram = x.transpose() * x;
  const Vector coef = detail::solve_checked(gram, Vector(x.transpose() * yo), "sigma_eps2");
  return (yo - x * coef).squaredNorm() / static_cast<double>(np - l);
}

// sigma_V^2 = sigma_eps^2 - m2^2 + m1^4. May be negative in finite samples;
// reported raw, flagged by the caller.
inline double sigma_v2(double sigma_eps2_value, const EffectRecovery& effects) {
  return sigma_eps2_value - effects.m2 * effects.m2 +
         effects.m1 * effects.m1 * effects.m1 * effects.m1;
}

// Covariance of N(mu* - mu0):
//   sigma_V^2 (I-K)^{-1} B^{-1} Sigma B^{-1}' (I-K)^{-1}',
//   Sigma = 2 xx + 10 q^2 x_mean x_mean' - 4 q x_path, B = xx - q x_path.
inline Matrix asymptotic_covariance(const EffectRecovery& effects, const KEstimate& k,
                                    const CrossMoments& cm, double sigma_v2_value) {
  if (effects.m2 <= 1e-10)
    throw contract_error("asymptotic_covariance: m2 is numerically zero");
  const double q = effects.m1 * effects.m1 / effects.m2;
  const Matrix b = cm.xx - q * cm.x_path;
  const Matrix sigma = 2.0 * cm.xx + (10.0 * q * q) * (cm.x_mean * cm.x_mean.transpose()) -
                       (4.0 * q) * cm.x_path;
  const Matrix binv_sigma = detail::solve_checked(b, sigma, "asymptotic_covariance");
  const Matrix core = detail::solve_checked(b, Matrix(binv_sigma.transpose()),
                                            "asymptotic_covariance");
  Matrix cov = std::max(sigma_v2_value, 1e-8) * (k.g * core * k.g.transpose());
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * (1.0 + cov.cwiseAbs().maxCoeff()))
    throw numerical_error("asymptotic_covariance: asymmetric result (" +
                          std::to_string(asym) + ")");
  cov = 0.5 * (cov + cov.transpose());
  return cov;
}

// Inverse standard normal CDF (Acklam's rational approximation, refined by
// one Halley step; absolute error well below 1e-8).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw contract_error("normal_quantile: p must be in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // one Halley refinement against erfc
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * 3.141592653589793238462643383279) *
                   std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

struct InferenceReport {
  Vector bias;
  double sigma_eps2 = 0.0;
  double sigma_v2 = 0.0;
  bool sigma_v2_degenerate = false;  // raw sigma_v2 was negative
  Matrix covariance;                 // covariance of N(mu-hat - mu0)
  Vector std_errors;                 // sqrt(diag(covariance)) / N
  Vector point;                      // debiased point estimate
  Vector ci_lower;
  Vector ci_upper;
  double level = 0.95;
  EffectRecovery effects;            // recovered at the first stage
  EffectRecovery effects_refreshed;  // recovered at the final estimate
};

// Assembles the full inference report around a final estimate.
inline InferenceReport debias_and_ci(const EstimateReport& mu, const EffectRecovery& effects,
                                     const KEstimate& k, const CrossMoments& cm,
                                     double sigma_eps2_value, double level,
                                     Index n_nodes) {
  if (!(level > 0.0 && level < 1.0))
    throw contract_error("debias_and_ci: level must be in (0,1)");
  InferenceReport out;
  out.level = level;
  out.effects = effects;
  out.bias = bias_estimate(effects, k, cm);
  out.sigma_eps2 = sigma_eps2_value;
  out.sigma_v2 = sigma_v2(sigma_eps2_value, effects);
  out.sigma_v2_degenerate = out.sigma_v2 < 0.0;
  out.covariance = asymptotic_covariance(effects, k, cm, out.sigma_v2);
  const double n = static_cast<double>(n_nodes);
  out.std_errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt() / n;
  out.point = mu.mu_hat - out.bias / n;
  const double z = normal_quantile(0.5 * (1.0 + level));
  out.ci_lower = out.point - z * out.std_errors;
  out.ci_upper = out.point + z * out.std_errors;
  return out;
}

struct PipelineResult {
  EstimateReport first_stage;
  EstimateReport estimate;
  InferenceReport inference;
};

// End-to-end pipeline: OLS-adjusted first stage, the requested final
// estimator, effects and K-hat at the first stage, full inference report.
inline PipelineResult estimate_with_inference(const DyadicDesign& design,
                                              const OutcomeMatrix& y,
                                              Method method = Method::two_step,
                                              double level = 0.95) {
  PipelineResult out;
  out.first_stage = first_stage(design, y);
  const ParamVector& mu_tilde = out.first_stage.mu_hat;

  SpectralSummary spec_tilde;
  KEstimate k;
  switch (method) {
    case Method::two_step: {
      TwoStepResult ts = two_step(design, y, mu_tilde);
      out.estimate = std::move(ts.report);
      spec_tilde = std::move(ts.first_stage_spectrum);
      k = std::move(ts.k);
      break;
    }
    case Method::fixed_point: {
      spec_tilde = eig_sym(build_residual_matrix(design, y, mu_tilde).m);
      k = k_hat_full_moments(design, spec_tilde.nu);
      out.estimate = fixed_point(design, y, mu_tilde);
      break;
    }
    case Method::single_iteration: {
      spec_tilde = eig_sym(build_residual_matrix(design, y, mu_tilde).m);
      k = k_hat_full_moments(design, spec_tilde.nu);
      EstimateReport rep;
      rep.method = Method::single_iteration;
      rep.mu_hat = f_n_apply(design, y, spec_tilde.nu);
      rep.iterations = 1;
      rep.trajectory = {mu_tilde, rep.mu_hat};
      rep.lambda_lead =
          eig_sym(build_residual_matrix(design, y, rep.mu_hat).m).leading_eigenvalue();
      out.estimate = std::move(rep);
      break;
    }
    case Method::ols:
    case Method::ols_adjusted: {
      spec_tilde = eig_sym(build_residual_matrix(design, y, mu_tilde).m);
      k = k_hat_full_moments(design, spec_tilde.nu);
      out.estimate = (method == Method::ols) ? ols_dyadic(design, y) : out.first_stage;
      break;
    }
  }

  const EffectRecovery effects = recover_effects(spec_tilde);
  const CrossMoments cm = cross_moments(design);
  const double se2 = sigma_eps2(design, y);
  out.inference =
      debias_and_ci(out.estimate, effects, k, cm, se2, level, design.n());
  out.inference.effects_refreshed = recover_effects(
      eig_sym(build_residual_matrix(design, y, out.estimate.mu_hat).m));
  return out;
}

}  // namespace dyad
