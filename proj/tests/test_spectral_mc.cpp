#include <doctest.h>

#include "dyad/spectral.hpp"
#include "helpers.hpp"

using namespace dyad;

TEST_CASE("Wigner bulk at N=2000: edge location and semicircle fit") {
  // 20 seeds; each spectrum is used for both the edge check and the KS check
  const Index n = 2000;
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> distances;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Matrix v = test::random_symmetric_hollow(n, 14000 + seed);
    const Vector eigs = eigenvalues_sym(v);
    const double edge = eigs(0) / root_n;
    CHECK(edge > 1.8);
    CHECK(edge < 2.2);
    std::vector<double> rescaled(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) rescaled[static_cast<std::size_t>(i)] = eigs(i) / root_n;
    distances.push_back(semicircle_distance(rescaled, SemicircleSpec(1.0)));
  }
  std::sort(distances.begin(), distances.end());
  // 95th percentile of the KS distance stays below 0.05
  CHECK(distances[18] < 0.05);
}
