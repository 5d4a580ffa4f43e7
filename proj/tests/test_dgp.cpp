#include <doctest.h>

#include "dyad/dgp.hpp"
#include "helpers.hpp"

using namespace dyad;

TEST_CASE("standard designs match the simulation study") {
  const auto designs = standard_designs();
  REQUIRE(designs.size() == 4);
  for (const auto& d : designs) {
    CHECK(d.n == 100);
    CHECK(d.beta.size() == 2);
    CHECK(d.beta(0) == 1.0);
    CHECK(d.beta(1) == 1.0);
    CHECK(d.delta == 1);
    CHECK(d.regressors[0] == RegressorForm::intercept);
  }
  CHECK(designs[1].gamma == 0.0);
  CHECK(designs[1].regressors[1] == RegressorForm::multiplicative);
  CHECK(designs[2].gamma == 1.0);
  CHECK(designs[2].regressors[1] == RegressorForm::additive);
}

TEST_CASE("degenerate simulation is exact") {
  // gamma=0, A=0, V=0, intercept only, beta=1  ->  Y = 1 off-diagonal
  DesignSpec d = test::intercept_only_spec(6, 0.0, 3);
  d.a_dist = DistSpec::normal(0.0, 0.0);
  d.v_dist = DistSpec::normal(0.0, 0.0);
  const Simulation sim = simulate(d);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j)
      CHECK(sim.y.y()(i, j) == (i == j ? 0.0 : 1.0));
}

TEST_CASE("simulation is deterministic in the seed") {
  DesignSpec d = test::paper_design(4, 40, 99);
  const Simulation a = simulate(d);
  const Simulation b = simulate(d);
  CHECK((a.y.y() - b.y.y()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.design.x(1) - b.design.x(1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.truth.u - b.truth.u).cwiseAbs().maxCoeff() == 0.0);
  d.seed = 100;
  const Simulation c = simulate(d);
  CHECK((a.y.y() - c.y.y()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("simulated matrices are symmetric with zero diagonals") {
  const Simulation sim = simulate(test::paper_design(3, 50, 17));
  CHECK((sim.y.y() - sim.y.y().transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sim.y.y().diagonal().cwiseAbs().maxCoeff() == 0.0);
  for (Index l = 0; l < sim.design.l(); ++l) {
    CHECK((sim.design.x(l) - sim.design.x(l).transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(sim.design.x(l).diagonal().cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((sim.truth.u - (sim.truth.a.array() + 1.0).matrix()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("moment sanity at n=200") {
  const Index n = 200;
  const Simulation sim = simulate(test::paper_design(1, n, 5));
  // realized mean(A) within 5 sigma_A / sqrt(N)
  CHECK(std::abs(sim.truth.a.mean()) <= 5.0 / std::sqrt(static_cast<double>(n)));
  // realized var of V off-diagonal entries within 10%
  double ss = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) ss += sim.truth.v(i, j) * sim.truth.v(i, j);
  ss /= static_cast<double>(n) * (n - 1) / 2.0;
  CHECK(ss == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("design 1 outcome mean matches the moment calculation") {
  // E(Y) = beta1 + beta2 * 2 E(X) = 2; dominant sampling noise is from X-bar
  const Index n = 200;
  const Simulation sim = simulate(test::paper_design(1, n, 31));
  const double mean_y =
      sim.y.y().sum() / (static_cast<double>(n) * static_cast<double>(n - 1));
  const double se = std::sqrt(1.0 / (3.0 * n) + 3.0 / (static_cast<double>(n) * n));
  CHECK(std::abs(mean_y - 2.0) <= 5.0 * se);
}

TEST_CASE("design 4 residual variance matches the epsilon identity") {
  // Var(eps) = E(U^2)^2 - E(U)^4 + sigma_V^2 = 4 at gamma = 1
  const Index n = 400;
  const Simulation sim = simulate(test::paper_design(4, n, 8));
  std::vector<double> eps;
  for (Index k = 0; 2 * k + 1 < n; ++k) {
    const Index i = 2 * k, j = 2 * k + 1;
    double e = sim.y.y()(i, j);
    for (Index l = 0; l < sim.design.l(); ++l)
      e -= 1.0 * sim.design.x(l)(i, j);  // true beta = (1,1)
    eps.push_back(e);
  }
  const double m = test::mean(eps);
  double var = 0.0;
  for (double e : eps) var += (e - m) * (e - m);
  var /= static_cast<double>(eps.size());
  CHECK(var == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("spike diagonal recorded for the expansion oracle") {
  const Simulation sim = simulate(test::paper_design(3, 30, 12));
  // gamma = 1: diagonal is E(U_1)^2 - U_i^2 = 1 - u_i^2
  for (Index i = 0; i < 30; ++i)
    CHECK(sim.truth.spike_diag(i) ==
          doctest::Approx(1.0 - sim.truth.u(i) * sim.truth.u(i)).epsilon(1e-14));
}

TEST_CASE("config validation") {
  DesignSpec d = test::intercept_only_spec(10, 0.0, 1);
  d.gamma = -0.5;
  CHECK_THROWS_AS(simulate(d), config_error);
  d.gamma = 0.0;
  d.delta = 2;
  CHECK_THROWS_AS(simulate(d), config_error);
  d.delta = 1;
  d.a_dist.name = "cauchy";
  CHECK_THROWS_AS(simulate(d), config_error);
}

TEST_CASE("optional regressor noise is off by default and reproducible when on") {
  DesignSpec d = test::paper_design(1, 20, 44);
  const Simulation base = simulate(d);
  d.has_x_noise = true;
  d.x_noise_dist = DistSpec::normal(0.0, 0.5);
  const Simulation noisy = simulate(d);
  CHECK((base.design.x(1) - noisy.design.x(1)).cwiseAbs().maxCoeff() > 0.0);
  // intercept column untouched by noise
  CHECK((base.design.x(0) - noisy.design.x(0)).cwiseAbs().maxCoeff() == 0.0);
  const Simulation noisy2 = simulate(d);
  CHECK((noisy.design.x(1) - noisy2.design.x(1)).cwiseAbs().maxCoeff() == 0.0);
}
