#include <catch2/catch_amalgamated.hpp>

#include "marmor/banded.hpp"
#include "support/oracles.hpp"

using namespace marmor;

TEST_CASE("identity matvec returns its input") {
  const BandedMatrix a = BandedMatrix::identity(3);
  const DenseVector x{1.0, 2.0, 3.0};
  REQUIRE(banded_matvec(a, x) == x);
}

TEST_CASE("Laplacian stencil against a constant vector") {
  const BandedMatrix a =
      BandedMatrix::tridiagonal(DenseVector{1.0, 1.0}, DenseVector{-2.0, -2.0, -2.0},
                                DenseVector{1.0, 1.0});
  const DenseVector y = banded_matvec(a, DenseVector{1.0, 1.0, 1.0});
  REQUIRE(y == DenseVector{-1.0, 0.0, -1.0});
}

TEST_CASE("random tridiagonal matches the dense matvec oracle") {
  auto gen = oracles::rng(17);
  const BandedMatrix a = oracles::random_banded(8, {-1, 0, 1}, gen);
  const DenseVector x = oracles::random_vector(8, gen);
  const DenseVector got = banded_matvec(a, x);
  const DenseVector want = oracles::dense_matvec(to_dense(a), x);
  for (std::size_t i = 0; i < 8; ++i)
    REQUIRE(std::abs(got[i] - want[i]) <= 1e-14 * std::max(1.0, std::abs(want[i])));
}

TEST_CASE("property: banded matvec agrees with dense on random band patterns") {
  auto gen = oracles::rng(2024);
  std::uniform_int_distribution<std::size_t> order_dist(4, 64);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = order_dist(gen);
    std::uniform_int_distribution<long> off_dist(-static_cast<long>(n - 1),
                                                 static_cast<long>(n - 1));
    std::vector<long> offsets{0};
    for (int k = 0; k < 4; ++k) offsets.push_back(off_dist(gen));
    const BandedMatrix a = oracles::random_banded(n, offsets, gen);
    const DenseVector x = oracles::random_vector(n, gen);
    const DenseVector got = banded_matvec(a, x);
    const DenseVector want = oracles::dense_matvec(to_dense(a), x);
    for (std::size_t i = 0; i < n; ++i)
      REQUIRE(std::abs(got[i] - want[i]) <= 1e-14 * std::max(1.0, std::abs(want[i])));
  }
}

TEST_CASE("dimension mismatch is rejected") {
  const BandedMatrix a = BandedMatrix::identity(4);
  REQUIRE_THROWS_AS(banded_matvec(a, DenseVector{1.0, 2.0}), DimensionError);
}

TEST_CASE("symmetry check distinguishes symmetric and skewed bands") {
  BandedMatrix a(5, {-1, 0, 1});
  for (std::size_t i = 0; i < 5; ++i) a.set(i, i, 2.0);
  for (std::size_t i = 0; i + 1 < 5; ++i) {
    a.set(i, i + 1, -1.0);
    a.set(i + 1, i, -1.0);
  }
  REQUIRE(is_symmetric(a));
  a.set(0, 1, -1.5);
  REQUIRE_FALSE(is_symmetric(a));
  REQUIRE(is_symmetric(a, 0.6));
}

TEST_CASE("writes outside the stored bands are rejected") {
  BandedMatrix a(6, {-1, 0, 1});
  REQUIRE_THROWS_AS(a.set(0, 3, 1.0), DimensionError);
  a.add(2, 3, 0.5);
  REQUIRE(a.at(2, 3) == 0.5);
}

TEST_CASE("transpose mirrors the offsets") {
  auto gen = oracles::rng(5);
  const BandedMatrix a = oracles::random_banded(7, {-2, 0, 1}, gen);
  const BandedMatrix t = a.transposed();
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) REQUIRE(t.at(j, i) == a.at(i, j));
}
