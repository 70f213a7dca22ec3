// Baseline Gaussian machinery: unconstrained MVN draws, the classical
// conditional-distribution formulas in covariance and precision form, and
// conditioning by projection of a joint draw.
#pragma once

#include <utility>

#include "fastmvn/linalg.hpp"
#include "fastmvn/rng.hpp"

namespace fastmvn {

/// Mean vector plus covariance model.
struct GaussianSpec {
  GaussianSpec(Vector mean_in, CovarianceModel cov_in)
      : mean(std::move(mean_in)), cov(std::move(cov_in)) {
    if (mean.size() != cov.dim())
      throw DimensionMismatch("GaussianSpec: mean/covariance size mismatch");
    if (!mean.allFinite())
      throw InvalidArgument("GaussianSpec: mean must be finite");
  }
  Index dim() const { return mean.size(); }

  Vector mean;
  CovarianceModel cov;
};

/// mean + L xi with xi iid standard normal; O(k) when the covariance is
/// diagonal. A pure function of (spec, rng state).
inline Vector sample_mvn(const GaussianSpec& spec, RngState& rng) {
  return spec.mean + spec.cov.factor().mul(rng.normal_vector(spec.dim()));
}

/// Jointly Gaussian (x1, x2) given by its mean and covariance blocks.
/// The assembled covariance must be SPD (checked by Cholesky here).
class BlockGaussianSpec {
public:
  BlockGaussianSpec(Vector mu1, Vector mu2, const Matrix& s11,
                    const Matrix& s12, const Matrix& s22)
      : mu1_(std::move(mu1)), mu2_(std::move(mu2)),
        s11_(detail::symmetrize_checked(s11)), s12_(s12),
        s22_(detail::symmetrize_checked(s22)),
        s22_factor_(CholeskyFactor::from_dense_spd(s22_)),
        joint_factor_(CholeskyFactor::from_dense_spd(assemble())) {
    if (mu1_.size() != s11_.rows() || mu2_.size() != s22_.rows() ||
        s12_.rows() != s11_.rows() || s12_.cols() != s22_.rows())
      throw DimensionMismatch("BlockGaussianSpec: block sizes do not conform");
  }

  Index k1() const { return mu1_.size(); }
  Index k2() const { return mu2_.size(); }
  const Vector& mu1() const { return mu1_; }
  const Vector& mu2() const { return mu2_; }
  const Matrix& s11() const { return s11_; }
  const Matrix& s12() const { return s12_; }
  const Matrix& s22() const { return s22_; }
  const CholeskyFactor& s22_factor() const { return s22_factor_; }
  const CholeskyFactor& joint_factor() const { return joint_factor_; }

  Matrix assemble() const {
    Matrix joint(k1() + k2(), k1() + k2());
    joint.topLeftCorner(k1(), k1()) = s11_;
    joint.topRightCorner(k1(), k2()) = s12_;
    joint.bottomLeftCorner(k2(), k1()) = s12_.transpose();
    joint.bottomRightCorner(k2(), k2()) = s22_;
    return joint;
  }

private:
  Vector mu1_, mu2_;
  Matrix s11_, s12_, s22_;
  CholeskyFactor s22_factor_;
  CholeskyFactor joint_factor_;
};

/// Conditional of x1 given x2 = r in covariance form:
/// N(mu1 + S12 S22^{-1}(r - mu2), S11 - S12 S22^{-1} S21).
inline GaussianSpec conditional_spec_cov(const BlockGaussianSpec& block,
                                         const Vector& r) {
  if (r.size() != block.k2())
    throw DimensionMismatch("conditional_spec_cov: r has wrong size");
  const Matrix s21 = block.s12().transpose();
  Vector mean = block.mu1() + block.s12() * block.s22_factor().solve(r - block.mu2());
  Matrix cov = block.s11() - block.s12() * block.s22_factor().solve_matrix(s21);
  cov = 0.5 * (cov + cov.transpose());
  return GaussianSpec(std::move(mean), CovarianceModel::dense(cov));
}

/// Same conditional in precision form: N(mu1 - L11^{-1} L12 (r - mu2),
/// L11^{-1}) with L the inverse of the assembled covariance. Agrees with the
/// covariance form by the Woodbury identity.
inline GaussianSpec conditional_spec_prec(const BlockGaussianSpec& block,
                                          const Vector& r) {
  if (r.size() != block.k2())
    throw DimensionMismatch("conditional_spec_prec: r has wrong size");
  const Index k = block.k1() + block.k2();
  const Matrix lambda =
      block.joint_factor().solve_matrix(Matrix::Identity(k, k));
  const Matrix l11 = lambda.topLeftCorner(block.k1(), block.k1());
  const Matrix l12 = lambda.topRightCorner(block.k1(), block.k2());
  const CholeskyFactor l11_factor =
      CholeskyFactor::from_dense_spd(0.5 * (l11 + l11.transpose()));
  Vector mean = block.mu1() - l11_factor.solve(l12 * (r - block.mu2()));
  Matrix cov = l11_factor.solve_matrix(Matrix::Identity(block.k1(), block.k1()));
  cov = 0.5 * (cov + cov.transpose());
  return GaussianSpec(std::move(mean), CovarianceModel::dense(cov));
}

/// Draw from the conditional of x1 given x2 = r by projecting a joint draw:
/// y ~ N(mu, Sigma), x1 = y1 + S12 S22^{-1} (r - y2). Never forms the
/// conditional covariance or its factor.
inline Vector sample_conditional_projection(const BlockGaussianSpec& block,
                                            const Vector& r, RngState& rng) {
  if (r.size() != block.k2())
    throw DimensionMismatch("sample_conditional_projection: r has wrong size");
  const Index k = block.k1() + block.k2();
  Vector y = block.joint_factor().mul(rng.normal_vector(k));
  y.head(block.k1()) += block.mu1();
  y.tail(block.k2()) += block.mu2();
  return y.head(block.k1()) +
         block.s12() * block.s22_factor().solve(r - y.tail(block.k2()));
}

} // namespace fastmvn
