#include <catch2/catch_amalgamated.hpp>

#include "fastmvn/rng.hpp"

using fastmvn::RngState;

TEST_CASE("identical seeds give identical streams") {
  RngState a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
  RngState c(42), d(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(c.normal() == d.normal());
}

TEST_CASE("derived seeds give distinct streams") {
  RngState a = RngState::derived(7, 0);
  RngState b = RngState::derived(7, 1);
  int equal = 0;
  for (int i = 0; i < 64; ++i) equal += a.next_u64() == b.next_u64();
  REQUIRE(equal == 0);
}

TEST_CASE("uniform stays inside the open unit interval") {
  RngState rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal moments") {
  RngState rng(3);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  REQUIRE(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("zero-noise hook propagates means") {
  RngState rng(5);
  rng.set_zero_noise(true);
  REQUIRE(rng.normal() == 0.0);
  REQUIRE(rng.uniform() == 0.5);
  rng.set_zero_noise(false);
  REQUIRE(rng.normal() != 0.0);
}

TEST_CASE("poisson and dirichlet sanity") {
  RngState rng(11);
  const int n = 20000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.poisson(50.0));
  const double mean = sum / n;
  REQUIRE(std::abs(mean - 50.0) < 4.0 * std::sqrt(50.0 / n));

  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(3);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 20000; ++i) acc += rng.dirichlet(alpha);
  acc /= 20000.0;
  for (int i = 0; i < 3; ++i)
    REQUIRE(std::abs(acc[i] - 1.0 / 3.0) < 0.01);
}
