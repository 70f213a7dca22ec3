#include <catch2/catch_amalgamated.hpp>

#include "fastmvn/mvn.hpp"
#include "fastmvn/validate.hpp"
#include "oracles.hpp"

using namespace fastmvn;

namespace {

Matrix random_matrix(Index rows, Index cols, RngState& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

BlockGaussianSpec random_block_spec(Index k1, Index k2, RngState& rng) {
  const Index k = k1 + k2;
  const Matrix b = random_matrix(k, k, rng);
  const Matrix joint = b.transpose() * b + static_cast<double>(k) * Matrix::Identity(k, k);
  return BlockGaussianSpec(random_matrix(k1, 1, rng), random_matrix(k2, 1, rng),
                           joint.topLeftCorner(k1, k1),
                           joint.topRightCorner(k1, k2),
                           joint.bottomRightCorner(k2, k2));
}

const Matrix kSigma2d = (Matrix(2, 2) << 1.0, 0.3, 0.3, 1.0).finished();

} // namespace

TEST_CASE("standard normal draws have the right per-coordinate means") {
  GaussianSpec spec(Vector::Zero(3), CovarianceModel::dense(Matrix::Identity(3, 3)));
  RngState rng(1);
  const int n = 100000;
  Vector mean = Vector::Zero(3);
  for (int i = 0; i < n; ++i) mean += sample_mvn(spec, rng);
  mean /= n;
  for (Index i = 0; i < 3; ++i)
    REQUIRE(std::abs(mean[i]) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("2D correlated draws reproduce the covariance") {
  GaussianSpec spec(Vector{{1.0, 1.2}}, CovarianceModel::dense(kSigma2d));
  RngState rng(2);
  const int n = 100000;
  Matrix draws(n, 2);
  for (int i = 0; i < n; ++i) draws.row(i) = sample_mvn(spec, rng).transpose();
  const MomentSummary s = summarize(draws);
  REQUIRE((s.cov - kSigma2d).norm() / kSigma2d.norm() < 0.05);
  REQUIRE(std::abs(s.mean[0] - 1.0) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("fixed seed yields identical draw streams") {
  GaussianSpec spec(Vector::Zero(4),
                    CovarianceModel::diagonal(Vector::Constant(4, 2.0).eval()));
  RngState a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    const Vector xa = sample_mvn(spec, a);
    const Vector xb = sample_mvn(spec, b);
    REQUIRE((xa - xb).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("diagonal covariance draws cost no dense temporaries") {
  GaussianSpec spec(Vector::Zero(1000),
                    CovarianceModel::diagonal(Vector::Constant(1000, 0.5).eval()));
  RngState rng(7);
  instrument::Probe probe;
  (void)sample_mvn(spec, rng);
  REQUIRE(probe.densify_count() == 0);
}

TEST_CASE("conditional with independent blocks is unchanged") {
  RngState rng(3);
  const Matrix s11 = (Matrix(2, 2) << 2.0, 0.5, 0.5, 1.5).finished();
  const Matrix s22 = Matrix::Identity(2, 2);
  BlockGaussianSpec block(Vector{{1.0, -1.0}}, Vector{{0.5, 0.5}}, s11,
                          Matrix::Zero(2, 2), s22);
  const GaussianSpec cond = conditional_spec_cov(block, Vector{{3.0, 3.0}});
  REQUIRE((cond.mean - Vector{{1.0, -1.0}}).cwiseAbs().maxCoeff() < 1e-14);
  REQUIRE((cond.cov.dense_matrix() - s11).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("2D conditional matches the hand value and the density-grid oracle") {
  BlockGaussianSpec block(Vector{{1.0}}, Vector{{1.2}},
                          kSigma2d.topLeftCorner(1, 1),
                          kSigma2d.topRightCorner(1, 1),
                          kSigma2d.bottomRightCorner(1, 1));
  const Vector r{{1.0}};
  const GaussianSpec cond = conditional_spec_cov(block, r);
  REQUIRE(cond.mean[0] == Catch::Approx(0.94).epsilon(1e-12));
  REQUIRE(cond.cov.dense_matrix()(0, 0) == Catch::Approx(0.91).epsilon(1e-12));

  double grid_mean = 0.0, grid_var = 0.0;
  oracle::conditional_2d_grid(1.0, 1.2, 1.0, 0.3, 1.0, 1.0, grid_mean, grid_var);
  REQUIRE(cond.mean[0] == Catch::Approx(grid_mean).margin(1e-6));
  REQUIRE(cond.cov.dense_matrix()(0, 0) == Catch::Approx(grid_var).margin(1e-6));

  const GaussianSpec prec = conditional_spec_prec(block, r);
  REQUIRE(prec.mean[0] == Catch::Approx(0.94).epsilon(1e-9));
  REQUIRE(prec.cov.dense_matrix()(0, 0) == Catch::Approx(0.91).epsilon(1e-9));
}

TEST_CASE("precision form with diagonal joint covariance is the marginal") {
  const Matrix s11 = (Matrix(2, 2) << 2.0, 0.0, 0.0, 3.0).finished();
  const Matrix s22 = (Matrix(1, 1) << 4.0).finished();
  BlockGaussianSpec block(Vector{{0.5, -0.5}}, Vector{{2.0}}, s11,
                          Matrix::Zero(2, 1), s22);
  const GaussianSpec cond = conditional_spec_prec(block, Vector{{9.0}});
  REQUIRE((cond.mean - Vector{{0.5, -0.5}}).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((cond.cov.dense_matrix() - s11).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("covariance and precision conditionals agree on random specs") {
  RngState rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Index k1 = 2 + static_cast<Index>(rng.next_u64() % 9);
    const Index k2 = 1 + static_cast<Index>(rng.next_u64() % 5);
    const BlockGaussianSpec block = random_block_spec(k1, k2, rng);
    const Vector r = random_matrix(k2, 1, rng);
    const GaussianSpec a = conditional_spec_cov(block, r);
    const GaussianSpec b = conditional_spec_prec(block, r);
    REQUIRE((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE((a.cov.dense_matrix() - b.cov.dense_matrix()).norm() /
                a.cov.dense_matrix().norm() <
            1e-9);
  }
}

TEST_CASE("projection sampler: independent blocks pass y1 through") {
  const Matrix s11 = Matrix::Identity(2, 2);
  const Matrix s22 = Matrix::Identity(1, 1);
  BlockGaussianSpec block(Vector{{1.0, 2.0}}, Vector{{0.0}}, s11,
                          Matrix::Zero(2, 1), s22);
  RngState a(9), b(9);
  const Vector x1 = sample_conditional_projection(block, Vector{{5.0}}, a);
  // with S12 = 0 the correction vanishes: x1 equals the y1 part of the
  // joint draw, reproduced here from the same stream
  const Vector y = block.joint_factor().mul(b.normal_vector(3));
  REQUIRE((x1 - (y.head(2) + Vector{{1.0, 2.0}})).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("projection sampler: zero noise at r = mu2 returns mu1") {
  RngState rng(11);
  const BlockGaussianSpec block = random_block_spec(3, 2, rng);
  RngState zero(1);
  zero.set_zero_noise(true);
  const Vector x1 = sample_conditional_projection(block, block.mu2(), zero);
  REQUIRE((x1 - block.mu1()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("projection sampler moments match the conditional analytics") {
  BlockGaussianSpec block(Vector{{1.0}}, Vector{{1.2}},
                          kSigma2d.topLeftCorner(1, 1),
                          kSigma2d.topRightCorner(1, 1),
                          kSigma2d.bottomRightCorner(1, 1));
  const Vector r{{1.0}};
  RngState rng(13);
  const int n = 100000;
  Matrix draws(n, 1);
  for (int i = 0; i < n; ++i)
    draws.row(i) = sample_conditional_projection(block, r, rng).transpose();
  const GaussianSpec cond = conditional_spec_cov(block, r);
  const auto rep =
      moment_match_report(draws, cond.mean, cond.cov.dense_matrix());
  INFO(rep.summary());
  REQUIRE(rep.pass);

  // and on a larger random spec
  RngState rng2(17);
  const BlockGaussianSpec wide = random_block_spec(6, 3, rng2);
  const Vector r2 = random_matrix(3, 1, rng2);
  Matrix draws2(n, 6);
  for (int i = 0; i < n; ++i)
    draws2.row(i) = sample_conditional_projection(wide, r2, rng2).transpose();
  const GaussianSpec cond2 = conditional_spec_cov(wide, r2);
  const auto rep2 =
      moment_match_report(draws2, cond2.mean, cond2.cov.dense_matrix());
  INFO(rep2.summary());
  REQUIRE(rep2.pass);
}
