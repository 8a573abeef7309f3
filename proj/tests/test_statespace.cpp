#include <catch2/catch_amalgamated.hpp>

#include "felderhof/sampling.hpp"
#include "felderhof/statespace.hpp"

using namespace felderhof;

TEST_CASE("sector dimensions add up to the full space") {
  for (int m = 1; m <= 8; ++m) {
    std::uint64_t total = 0;
    for (int k = 0; k <= m; ++k) {
      auto basis = SectorBasis::make(m, k);
      CHECK(basis->dim() == binomial(m, k));
      total += basis->dim();
    }
    CHECK(total == (1ull << m));
  }
}

TEST_CASE("configuration validation") {
  CHECK_NOTHROW(Configuration(5, {1, 3, 5}));
  CHECK_THROWS_AS(Configuration(5, {3, 3}), std::invalid_argument);
  CHECK_THROWS_AS(Configuration(5, {3, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Configuration(5, {0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Configuration(5, {2, 6}), std::invalid_argument);
}

TEST_CASE("lexicographic ordering is the documented one") {
  auto basis = SectorBasis::make(4, 2);
  const std::vector<std::vector<int>> expected{{1, 2}, {1, 3}, {1, 4},
                                               {2, 3}, {2, 4}, {3, 4}};
  REQUIRE(basis->dim() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(basis->config(i).positions == expected[i]);
}

TEST_CASE("ordinal lookup inverts enumeration") {
  auto basis = SectorBasis::make(6, 3);
  for (std::size_t i = 0; i < basis->dim(); ++i)
    CHECK(basis->index_of(basis->config(i)) == i);
}

TEST_CASE("vacuum and configuration states pair orthonormally") {
  CHECK_THROWS_AS(vacuum(0), std::invalid_argument);
  const SectorVector vac = vacuum(3);
  CHECK(vac.sector() == 0);
  REQUIRE(vac.amplitudes.size() == 1);
  CHECK(vac.amplitudes[0] == cx(1.0));
  CHECK(inner(Configuration(3, {}), vac) == cx(1.0));

  const Configuration c(4, {2, 3});
  const SectorVector state = configuration_state(c);
  CHECK(inner(c, state) == cx(1.0));
  CHECK(inner(Configuration(4, {1, 3}), state) == cx(0.0));
  CHECK_THROWS_AS(inner(Configuration(4, {2}), state), std::invalid_argument);
  CHECK_THROWS_AS(inner(Configuration(3, {2, 3}), state), std::invalid_argument);
}

TEST_CASE("completeness resolves a random sector vector") {
  auto basis = SectorBasis::make(5, 2);
  Rng rng(23);
  std::vector<cx> amps;
  for (std::size_t i = 0; i < basis->dim(); ++i)
    amps.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  const SectorVector v(basis, amps);

  std::vector<cx> rebuilt(basis->dim(), cx(0.0));
  for (std::size_t i = 0; i < basis->dim(); ++i) {
    const Configuration& c = basis->config(i);
    const cx coeff = inner(c, v);
    const SectorVector unit = configuration_state(c);
    for (std::size_t j = 0; j < basis->dim(); ++j) rebuilt[j] += coeff * unit.amplitudes[j];
  }
  for (std::size_t j = 0; j < basis->dim(); ++j)
    CHECK(std::abs(rebuilt[j] - v.amplitudes[j]) < 1e-15);
}

TEST_CASE("mixed dual states") {
  CHECK(mixed_dual(5, 2, 2).positions.empty());            // n = N: dual vacuum
  CHECK(mixed_dual(3, 3, 0).positions == std::vector<int>{1, 2, 3});  // fully packed
  CHECK(mixed_dual(5, 2, 1).positions == std::vector<int>{5});
  CHECK_THROWS_AS(mixed_dual(3, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(mixed_dual(3, 2, 3), std::invalid_argument);
  CHECK_THROWS_AS(mixed_dual(3, 2, -1), std::invalid_argument);
}

TEST_CASE("sector vector amplitude count is enforced") {
  auto basis = SectorBasis::make(3, 1);
  CHECK_THROWS_AS(SectorVector(basis, std::vector<cx>(2, cx(0.0))), std::invalid_argument);
}
