#pragma once

// Seeded simulation of the dyadic model
//   Y_ij = sum_l beta_l X_ij,l + gamma (A_i + A_j)
//          + delta * effect_scale * A_i A_j + V_ij
// returning data plus ground truth for oracle-based tests.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dyad/core.hpp"
#include "dyad/errors.hpp"
#include "dyad/rng.hpp"

namespace dyad {

struct DistSpec {
  std::string name;  // "normal" (mean, sd) or "uniform" (a, b)
  double p1 = 0.0;
  double p2 = 1.0;

  static DistSpec normal(double mean, double sd) { return {"normal", mean, sd}; }
  static DistSpec uniform(double a, double b) { return {"uniform", a, b}; }

  double draw(Rng& rng) const {
    if (name == "normal") return rng.normal(p1, p2);
    if (name == "uniform") return rng.uniform(p1, p2);
    throw config_error("unknown distribution name: " + name);
  }
};

enum class RegressorForm { intercept, additive, multiplicative };

inline RegressorForm regressor_form_from_string(const std::string& s) {
  if (s == "intercept") return RegressorForm::intercept;
  if (s == "additive") return RegressorForm::additive;
  if (s == "multiplicative") return RegressorForm::multiplicative;
  throw config_error("unknown regressor form: " + s);
}

inline std::string to_string(RegressorForm f) {
  switch (f) {
    case RegressorForm::intercept: return "intercept";
    case RegressorForm::additive: return "additive";
    default: return "multiplicative";
  }
}

struct DesignSpec {
  Index n = 100;
  Vector beta;                           // true coefficients, one per regressor
  std::vector<RegressorForm> regressors; // column layout of the design
  double gamma = 0.0;                    // additive-effect loading, >= 0
  int delta = +1;                        // interaction sign
  double effect_scale = 1.0;             // multiplier on A_i A_j
  DistSpec a_dist = DistSpec::normal(0.0, 1.0);
  DistSpec v_dist = DistSpec::normal(0.0, 1.0);
  DistSpec x_dist = DistSpec::uniform(0.0, 1.0);
  bool has_x_noise = false;              // optional W_ij added to each non-intercept regressor
  DistSpec x_noise_dist = DistSpec::normal(0.0, 1.0);
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 4) throw config_error("DesignSpec: n must be >= 4");
    if (!(gamma >= 0.0)) throw config_error("DesignSpec: gamma must be >= 0");
    if (delta != 1 && delta != -1) throw config_error("DesignSpec: delta must be +1 or -1");
    if (regressors.empty()) throw config_error("DesignSpec: no regressors");
    if (beta.size() != static_cast<Index>(regressors.size()))
      throw config_error("DesignSpec: beta length does not match regressor count");
  }

  int intercept_column() const {
    for (std::size_t l = 0; l < regressors.size(); ++l)
      if (regressors[l] == RegressorForm::intercept) return static_cast<int>(l);
    return -1;
  }
};

struct SimTruth {
  Vector a;           // realized individual effects A_i
  Vector u;           // U_i = gamma + A_i
  Matrix v;           // symmetric noise, zero diagonal
  Vector spike_diag;  // theoretical diagonal E(U_1)^2 - U_i^2 for the spike oracle
                      // (exact for effect_scale = 1)
  ParamVector mu0;    // slopes of the reduced model; intercept shifted by -delta*gamma^2
};

struct Simulation {
  DyadicDesign design;
  OutcomeMatrix y;
  SimTruth truth;
};

// Deterministic given the spec: identical spec and seed reproduce the
// matrices bit for bit. Draw order: A, node covariates X_i, V upper
// triangle, then W noise per regressor.
inline Simulation simulate(const DesignSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Index n = spec.n;

  Vector a(n);
  for (Index i = 0; i < n; ++i) a(i) = spec.a_dist.draw(rng);
  Vector xi(n);
  for (Index i = 0; i < n; ++i) xi(i) = spec.x_dist.draw(rng);
  Matrix v = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double z = spec.v_dist.draw(rng);
      v(i, j) = z;
      v(j, i) = z;
    }

  std::vector<Matrix> xs;
  xs.reserve(spec.regressors.size());
  for (RegressorForm form : spec.regressors) {
    Matrix x = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        double val = 1.0;
        if (form == RegressorForm::additive) val = xi(i) + xi(j);
        if (form == RegressorForm::multiplicative) val = xi(i) * xi(j);
        x(i, j) = val;
        x(j, i) = val;
      }
    if (spec.has_x_noise && form != RegressorForm::intercept) {
      for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
          const double w = spec.x_noise_dist.draw(rng);
          x(i, j) += w;
          x(j, i) = x(i, j);
        }
    }
    xs.push_back(std::move(x));
  }

  Matrix y = v;
  for (std::size_t l = 0; l < xs.size(); ++l) y.noalias() += spec.beta(static_cast<Index>(l)) * xs[l];
  const double d = static_cast<double>(spec.delta);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double eff = spec.gamma * (a(i) + a(j)) + d * spec.effect_scale * a(i) * a(j);
      y(i, j) += eff;
      y(j, i) = y(i, j);
    }
  y.diagonal().setZero();

  SimTruth truth;
  truth.a = a;
  truth.u = Vector::Constant(n, spec.gamma) + a;
  truth.v = std::move(v);
  truth.spike_diag = Vector::Constant(n, spec.gamma * spec.gamma) -
                     truth.u.cwiseProduct(truth.u);
  truth.mu0 = spec.beta;
  const int ic = spec.intercept_column();
  if (ic >= 0) truth.mu0(ic) -= d * spec.gamma * spec.gamma;

  return {DyadicDesign(std::move(xs), ic), OutcomeMatrix(std::move(y)), std::move(truth)};
}

// The four simulation designs: additive/multiplicative regressor crossed
// with gamma in {0, 1}; intercept plus one regressor, N = 100,
// beta = (1, 1), A and V standard normal, X_i ~ Unif(0, 1).
inline std::vector<DesignSpec> standard_designs() {
  std::vector<DesignSpec> out;
  const RegressorForm forms[2] = {RegressorForm::additive, RegressorForm::multiplicative};
  const double gammas[2] = {0.0, 1.0};
  for (double g : gammas)
    for (RegressorForm f : forms) {
      DesignSpec d;
      d.n = 100;
      d.beta = Vector::Constant(2, 1.0);
      d.regressors = {RegressorForm::intercept, f};
      d.gamma = g;
      out.push_back(std::move(d));
    }
  return out;
}

}  // namespace dyad
