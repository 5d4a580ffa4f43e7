#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "dyad/spectral.hpp"
#include "helpers.hpp"

using namespace dyad;

TEST_CASE("eig_sym on small matrices") {
  SUBCASE("identity") {
    SpectralSummary s = eig_sym(Matrix::Identity(3, 3));
    for (Index i = 0; i < 3; ++i) CHECK(s.eigenvalues(i) == doctest::Approx(1.0));
  }
  SUBCASE("2x2 exchange matrix: tie resolved to the positive eigenvalue") {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    SpectralSummary s = eig_sym(m);
    CHECK(s.eigenvalues(0) == doctest::Approx(1.0));
    CHECK(s.eigenvalues(1) == doctest::Approx(-1.0));
    CHECK(s.abs_tie);
    CHECK(s.leading_eigenvalue() == doctest::Approx(1.0));
    CHECK(s.nu(0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(s.nu(1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  }
  SUBCASE("non-symmetric input rejected") {
    Matrix m(2, 2);
    m << 0, 1, 2, 0;
    CHECK_THROWS_AS(eig_sym(m), contract_error);
  }
}

TEST_CASE("leading eigenpair reconstruction and sign convention") {
  for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u, 16u}) {
    Matrix m = test::random_symmetric(30, seed);
    SpectralSummary s = eig_sym(m);
    const double lambda = s.leading_eigenvalue();
    CHECK((m * s.nu - lambda * s.nu).norm() <= 1e-8 * (1.0 + std::abs(lambda)));
    CHECK(s.nu.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.nu.sum() >= 0.0);
    // sorted descending
    for (Index i = 1; i < s.eigenvalues.size(); ++i)
      CHECK(s.eigenvalues(i - 1) >= s.eigenvalues(i));
    // |lambda| is the maximal absolute eigenvalue
    CHECK(std::abs(lambda) ==
          doctest::Approx(s.eigenvalues.cwiseAbs().maxCoeff()).epsilon(1e-14));
  }
}

TEST_CASE("sign convention is idempotent") {
  Matrix m = test::random_symmetric(15, 77);
  SpectralSummary s = eig_sym(m);
  Vector nu = s.nu;
  detail::fix_sign(nu);
  CHECK((nu - s.nu).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("semicircle density") {
  SemicircleSpec spec(1.0);
  SUBCASE("value at the center") {
    CHECK(semicircle_pdf(0.0, spec) == doctest::Approx(1.0 / 3.14159265358979323846));
  }
  SUBCASE("vanishes at the support boundary") {
    CHECK(semicircle_pdf(2.0, spec) == 0.0);
    CHECK(semicircle_pdf(-2.0, spec) == 0.0);
    CHECK(semicircle_pdf(2.5, spec) == 0.0);
  }
  SUBCASE("integrates to one (Simpson oracle)") {
    const int k = 20000;
    const double h = 4.0 / k;
    double integral = semicircle_pdf(-2.0, spec) + semicircle_pdf(2.0, spec);
    for (int i = 1; i < k; ++i)
      integral += semicircle_pdf(-2.0 + i * h, spec) * (i % 2 == 1 ? 4.0 : 2.0);
    integral *= h / 3.0;
    CHECK(std::abs(integral - 1.0) < 1e-6);
  }
  SUBCASE("cdf is consistent with the density") {
    CHECK(semicircle_cdf(-2.0, spec) == 0.0);
    CHECK(semicircle_cdf(0.0, spec) == doctest::Approx(0.5));
    CHECK(semicircle_cdf(2.0, spec) == 1.0);
    // numeric derivative
    const double x = 0.7, h = 1e-6;
    const double deriv = (semicircle_cdf(x + h, spec) - semicircle_cdf(x - h, spec)) / (2 * h);
    CHECK(deriv == doctest::Approx(semicircle_pdf(x, spec)).epsilon(1e-6));
  }
  SUBCASE("invalid sigma") { CHECK_THROWS_AS(SemicircleSpec(0.0), contract_error); }
}

namespace {

double semicircle_quantile(double p, const SemicircleSpec& spec) {
  double lo = -2.0 * spec.sigma, hi = 2.0 * spec.sigma;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (semicircle_cdf(mid, spec) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("semicircle KS distance") {
  SemicircleSpec spec(1.0);
  SUBCASE("exact quantiles give distance at most 1/(2N)") {
    const int n = 200;
    std::vector<double> eigs;
    for (int k = 1; k <= n; ++k)
      eigs.push_back(semicircle_quantile((k - 0.5) / n, spec));
    CHECK(semicircle_distance(eigs, spec) <= 0.5 / n + 1e-9);
  }
  SUBCASE("point mass at zero gives 0.5") {
    std::vector<double> eigs(50, 0.0);
    CHECK(semicircle_distance(eigs, spec) == doctest::Approx(0.5));
  }
  SUBCASE("empty input rejected") {
    CHECK_THROWS_AS(semicircle_distance({}, spec), contract_error);
  }
}

TEST_CASE("interlacing check") {
  SUBCASE("zero base with a unit spike holds with equalities") {
    Vector base = Vector::Zero(5);
    Vector spiked = Vector::Zero(5);
    spiked(0) = 1.0;
    const InterlacingResult r = check_interlacing(base, spiked);
    CHECK(r.holds);
    CHECK(r.max_violation <= 1e-12);
  }
  SUBCASE("simulated rank-one update at n=60") {
    Matrix v = test::random_symmetric(60, 4);
    Rng rng(5);
    Vector u(60);
    for (Index i = 0; i < 60; ++i) u(i) = rng.normal();
    const Vector base = eigenvalues_sym(v);
    const Vector spiked = eigenvalues_sym(v + u * u.transpose());
    CHECK(check_interlacing(base, spiked).holds);
  }
  SUBCASE("constructed violation is reported") {
    Vector base(3), spiked(3);
    base << 3.0, 2.0, 1.0;
    spiked << 3.5, 0.5, 1.2;  // 0.5 below base(1)=2 violates the lower bound
    // note spiked must be sorted descending for the check's semantics
    spiked << 3.5, 1.2, 0.5;
    const InterlacingResult r = check_interlacing(base, spiked);
    CHECK_FALSE(r.holds);
    CHECK(r.max_violation > 0.0);
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(check_interlacing(Vector::Zero(3), Vector::Zero(4)), contract_error);
  }
}

TEST_CASE("spike expansion oracle") {
  SUBCASE("no noise collapses to U'U") {
    Vector u(4);
    u << 1, 2, -1, 0.5;
    CHECK(spike_expansion_oracle(u, Matrix::Zero(4, 4), 0.0) ==
          doctest::Approx(u.squaredNorm()));
  }
  SUBCASE("single coordinate") {
    Vector u = Vector::Zero(5);
    u(0) = 3.0;
    CHECK(spike_expansion_oracle(u, Matrix::Zero(5, 5), 0.25) ==
          doctest::Approx(9.0 - 0.25));
  }
  SUBCASE("zero vector rejected") {
    CHECK_THROWS_AS(spike_expansion_oracle(Vector::Zero(4), Matrix::Zero(4, 4), 0.0),
                    contract_error);
  }
}

TEST_CASE("regressor eigenvalue growth stays O(N)") {
  // max_i |lambda_i(X)| / N within a factor-3 band across N in {100,200,400}
  for (RegressorForm form : {RegressorForm::additive, RegressorForm::multiplicative}) {
    double lo = 1e300, hi = 0.0;
    for (Index n : {100, 200, 400}) {
      DesignSpec d;
      d.n = n;
      d.beta = Vector::Constant(1, 1.0);
      d.regressors = {form};
      d.seed = 21u + static_cast<std::uint64_t>(n);
      const Simulation sim = simulate(d);
      const Vector eigs = eigenvalues_sym(sim.design.x(0));
      const double r = eigs.cwiseAbs().maxCoeff() / static_cast<double>(n);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    CHECK(hi / lo < 3.0);
  }
}

TEST_CASE("export_spectrum round-trips at full precision") {
  Vector eigs(3);
  eigs << 1.0 / 3.0, -2.7182818284590452, 4.9e-15;
  const std::string path = "spectrum_test_tmp.csv";
  export_spectrum(eigs, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "eigenvalue");
  for (Index i = 0; i < eigs.size(); ++i) {
    std::getline(in, line);
    CHECK(std::strtod(line.c_str(), nullptr) == eigs(i));
  }
  in.close();
  std::remove(path.c_str());
}
