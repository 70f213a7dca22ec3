// Samplers for MVNs whose covariance is a positive-definite matrix minus a
// low-rank symmetric part, N(mu1, S11 - S12 S22^{-1} S21), and whose
// precision is a positive-definite matrix plus one, N(mu, (A + Phi^T Omega
// Phi)^{-1}). The fast routes lift the target to a higher-dimensional
// hyperplane-truncated MVN with block-diagonal covariance and project, so
// the k1 x k1 (resp. p x p) matrix and its Cholesky factor are never formed.
// Naive Cholesky-based baselines are included for comparison.
#pragma once

#include <utility>

#include "fastmvn/linalg.hpp"
#include "fastmvn/rng.hpp"

namespace fastmvn {

/// Target N(mu1, S11 - S12 S22^{-1} S21). The assembled joint
/// [[S11, S12], [S21, S22]] must be SPD; this is verified at construction by
/// a block Cholesky (factor S11, then factor the Schur complement
/// S22 - S21 S11^{-1} S12), which also guards the y2 draw against round-off
/// indefiniteness.
class StructuredCovSpec {
public:
  StructuredCovSpec(Vector mu1, CovarianceModel s11, Matrix s12,
                    CovarianceModel s22)
      : mu1_(std::move(mu1)), s11_(std::move(s11)), s12_(std::move(s12)),
        s22_(std::move(s22)) {
    if (mu1_.size() != s11_.dim() || s12_.rows() != s11_.dim() ||
        s12_.cols() != s22_.dim())
      throw DimensionMismatch("StructuredCovSpec: block sizes do not conform");
    if (!s12_.allFinite())
      throw InvalidArgument("StructuredCovSpec: S12 must be finite");
    CholeskyFactor::from_dense_spd(schur22());
  }

  Index k1() const { return mu1_.size(); }
  Index k2() const { return s22_.dim(); }
  const Vector& mu1() const { return mu1_; }
  const CovarianceModel& s11() const { return s11_; }
  const Matrix& s12() const { return s12_; }
  const CovarianceModel& s22() const { return s22_; }

  /// S11^{-1} S12; column scaling when S11 is diagonal, never a solve loop.
  Matrix s11_inv_s12() const {
    Matrix x = scratch_matrix(k1(), k2());
    if (s11_.is_diagonal())
      x.noalias() = s11_.diagonal_entries().cwiseInverse().asDiagonal() * s12_;
    else
      x = s11_.solve_matrix(s12_);
    return x;
  }

  /// S22 - S21 S11^{-1} S12, the covariance of the auxiliary block.
  Matrix schur22() const {
    Matrix schur = s22_.to_dense();
    schur.noalias() -= s12_.transpose() * s11_inv_s12();
    return 0.5 * (schur + schur.transpose());
  }

private:
  Vector mu1_;
  CovarianceModel s11_;
  Matrix s12_;
  CovarianceModel s22_;
};

namespace detail {

struct StructuredCovDrawState {
  Matrix s11_inv_s12;
  CholeskyFactor schur_factor;
};

inline StructuredCovDrawState make_cov_draw_state(const StructuredCovSpec& spec) {
  Matrix x = spec.s11_inv_s12();
  CholeskyFactor f = CholeskyFactor::from_dense_spd(spec.schur22());
  return {std::move(x), std::move(f)};
}

inline Vector draw_structured_cov(const StructuredCovSpec& spec,
                                  const StructuredCovDrawState& st,
                                  RngState& rng) {
  const Vector y1 = spec.s11().factor().mul(rng.normal_vector(spec.k1()));
  const Vector y2 = st.schur_factor.mul(rng.normal_vector(spec.k2()));
  const Vector alpha =
      spec.s22().solve(st.s11_inv_s12.transpose() * y1 + y2);
  return spec.mu1() + y1 - spec.s12() * alpha;
}

} // namespace detail

/// Fast draw from N(mu1, S11 - S12 S22^{-1} S21): sample the two independent
/// blocks, solve a k2 x k2 system, correct. The target covariance and its
/// factor are never formed; with diagonal S11 the cost is
/// O(max(k1 k2^2, k2^3)) per draw.
inline Vector sample_structured_cov(const StructuredCovSpec& spec, RngState& rng) {
  return detail::draw_structured_cov(spec, detail::make_cov_draw_state(spec), rng);
}

/// Baseline: explicitly form the k1 x k1 target covariance, factor it
/// (O(k1^3)), and draw.
inline Vector sample_structured_cov_naive(const StructuredCovSpec& spec,
                                          RngState& rng) {
  Matrix target = spec.s11().to_dense();
  target.noalias() -=
      spec.s12() * spec.s22().solve_matrix(spec.s12().transpose());
  target = 0.5 * (target + target.transpose());
  const CholeskyFactor f = CholeskyFactor::from_dense_spd(target);
  return spec.mu1() + f.mul(rng.normal_vector(spec.k1()));
}

/// n fast draws with the Schur factor hoisted; bit-identical to n
/// sample_structured_cov calls on the same stream.
inline Matrix sample_structured_cov_many(const StructuredCovSpec& spec, Index n,
                                         RngState& rng) {
  const auto st = detail::make_cov_draw_state(spec);
  Matrix out(n, spec.k1());
  for (Index i = 0; i < n; ++i)
    out.row(i) = detail::draw_structured_cov(spec, st, rng).transpose();
  return out;
}

inline Matrix sample_structured_cov_naive_many(const StructuredCovSpec& spec,
                                               Index n, RngState& rng) {
  Matrix target = spec.s11().to_dense();
  target.noalias() -=
      spec.s12() * spec.s22().solve_matrix(spec.s12().transpose());
  target = 0.5 * (target + target.transpose());
  const CholeskyFactor f = CholeskyFactor::from_dense_spd(target);
  Matrix out(n, spec.k1());
  for (Index i = 0; i < n; ++i)
    out.row(i) = (spec.mu1() + f.mul(rng.normal_vector(spec.k1()))).transpose();
  return out;
}

namespace detail {

inline void check_example3_params(const Vector& mu1, double a, const Vector& phi1) {
  if (mu1.size() != phi1.size())
    throw DimensionMismatch("example3: mu1/phi1 size mismatch");
  if (!(a > 0.0)) throw InvalidSimplex("example3: a must be > 0");
  for (Index i = 0; i < phi1.size(); ++i)
    if (!(phi1[i] > 0.0)) throw InvalidSimplex("example3: phi1 must be positive");
  if (!(phi1.sum() < 1.0))
    throw InvalidSimplex("example3: phi1 must sum to strictly less than 1");
}

} // namespace detail

/// O(k) draw from N(mu1, a diag(phi1) - a phi1 phi1^T): extend to k
/// dimensions with phi_k = 1 - sum(phi1), mu_k = 1 - sum(mu1), draw
/// y ~ N(mu, a diag(phi)), keep x1 = y1 + (1 - 1^T y) phi1.
inline Vector sample_example3(const Vector& mu1, double a, const Vector& phi1,
                              RngState& rng) {
  detail::check_example3_params(mu1, a, phi1);
  const Index k1 = phi1.size();
  const double phi_k = 1.0 - phi1.sum();
  const double mu_k = 1.0 - mu1.sum();
  Vector y(k1 + 1);
  for (Index i = 0; i < k1; ++i)
    y[i] = mu1[i] + std::sqrt(a * phi1[i]) * rng.normal();
  y[k1] = mu_k + std::sqrt(a * phi_k) * rng.normal();
  return y.head(k1) + (1.0 - y.sum()) * phi1;
}

/// The split form of the same draw: y1 ~ N(0, a diag(phi1)),
/// y2 ~ N(0, phi_k / a), x1 = mu1 + y1 - (1^T y1 + a y2) phi1.
inline Vector sample_example3_split(const Vector& mu1, double a,
                                    const Vector& phi1, RngState& rng) {
  detail::check_example3_params(mu1, a, phi1);
  const Index k1 = phi1.size();
  const double phi_k = 1.0 - phi1.sum();
  Vector y1(k1);
  for (Index i = 0; i < k1; ++i) y1[i] = std::sqrt(a * phi1[i]) * rng.normal();
  const double y2 = std::sqrt(phi_k / a) * rng.normal();
  return mu1 + y1 - (y1.sum() + a * y2) * phi1;
}

/// Target N(mu_beta, (A + Phi^T Omega Phi)^{-1}) with A (p x p) and
/// Omega (n x n) SPD.
class StructuredPrecSpec {
public:
  StructuredPrecSpec(Vector mu_beta, CovarianceModel a, Matrix phi,
                     CovarianceModel omega)
      : mu_beta_(std::move(mu_beta)), a_(std::move(a)), phi_(std::move(phi)),
        omega_(std::move(omega)) {
    if (mu_beta_.size() != a_.dim() || phi_.cols() != a_.dim() ||
        phi_.rows() != omega_.dim())
      throw DimensionMismatch("StructuredPrecSpec: block sizes do not conform");
    if (!phi_.allFinite())
      throw InvalidArgument("StructuredPrecSpec: Phi must be finite");
  }

  Index p() const { return a_.dim(); }
  Index n() const { return omega_.dim(); }
  const Vector& mu_beta() const { return mu_beta_; }
  const CovarianceModel& a() const { return a_; }
  const Matrix& phi() const { return phi_; }
  const CovarianceModel& omega() const { return omega_; }

private:
  Vector mu_beta_;
  CovarianceModel a_;
  Matrix phi_;
  CovarianceModel omega_;
};

namespace detail {

struct StructuredPrecDrawState {
  Matrix a_inv_phi_t;          // A^{-1} Phi^T, p x n
  CholeskyFactor inner_factor; // factor of Omega^{-1} + Phi A^{-1} Phi^T
};

inline StructuredPrecDrawState make_prec_draw_state(const StructuredPrecSpec& spec) {
  const Index p = spec.p(), n = spec.n();
  Matrix w = scratch_matrix(p, n);
  if (spec.a().is_diagonal())
    w.noalias() = spec.a().diagonal_entries().cwiseInverse().asDiagonal() *
                  spec.phi().transpose();
  else
    w = spec.a().solve_matrix(spec.phi().transpose());
  Matrix inner = scratch_matrix(n, n);
  if (spec.omega().is_diagonal())
    inner = Matrix(spec.omega().diagonal_entries().cwiseInverse().asDiagonal());
  else
    inner = spec.omega().solve_matrix(Matrix::Identity(n, n));
  inner.noalias() += spec.phi() * w;
  inner = 0.5 * (inner + inner.transpose());
  return {std::move(w), CholeskyFactor::from_dense_spd(inner)};
}

// y1 ~ N(0, A^{-1}) and y2 ~ N(0, Omega^{-1}) from the precision factors.
inline Vector precision_noise(const CovarianceModel& m, RngState& rng) {
  return m.factor().solve_upper(rng.normal_vector(m.dim()));
}

inline Vector draw_structured_prec(const StructuredPrecSpec& spec,
                                   const StructuredPrecDrawState& st,
                                   RngState& rng) {
  const Vector y1 = precision_noise(spec.a(), rng);
  const Vector y2 = precision_noise(spec.omega(), rng);
  const Vector alpha = st.inner_factor.solve(spec.phi() * y1 + y2);
  return spec.mu_beta() + y1 - st.a_inv_phi_t * alpha;
}

} // namespace detail

/// Fast draw from N(mu_beta, (A + Phi^T Omega Phi)^{-1}): the Woodbury
/// identity turns the p x p factorization into an n x n solve. The p x p
/// matrix A + Phi^T Omega Phi is never formed; with diagonal A and Omega
/// the cost is O(max(n^2 p, n^3)) per draw.
inline Vector sample_structured_prec(const StructuredPrecSpec& spec,
                                     RngState& rng) {
  return detail::draw_structured_prec(spec, detail::make_prec_draw_state(spec),
                                      rng);
}

/// Baseline: form A + Phi^T Omega Phi, factor it (O(p^3)), draw.
inline Vector sample_structured_prec_naive(const StructuredPrecSpec& spec,
                                           RngState& rng) {
  Matrix prec = spec.a().to_dense();
  if (spec.omega().is_diagonal())
    prec.noalias() += spec.phi().transpose() *
                      (spec.omega().diagonal_entries().asDiagonal() * spec.phi());
  else
    prec.noalias() +=
        spec.phi().transpose() * (spec.omega().dense_matrix() * spec.phi());
  prec = 0.5 * (prec + prec.transpose());
  const CholeskyFactor f = CholeskyFactor::from_dense_spd(prec);
  return spec.mu_beta() + f.solve_upper(rng.normal_vector(spec.p()));
}

inline Matrix sample_structured_prec_many(const StructuredPrecSpec& spec,
                                          Index n_draws, RngState& rng) {
  const auto st = detail::make_prec_draw_state(spec);
  Matrix out(n_draws, spec.p());
  for (Index i = 0; i < n_draws; ++i)
    out.row(i) = detail::draw_structured_prec(spec, st, rng).transpose();
  return out;
}

inline Matrix sample_structured_prec_naive_many(const StructuredPrecSpec& spec,
                                                Index n_draws, RngState& rng) {
  Matrix prec = spec.a().to_dense();
  if (spec.omega().is_diagonal())
    prec.noalias() += spec.phi().transpose() *
                      (spec.omega().diagonal_entries().asDiagonal() * spec.phi());
  else
    prec.noalias() +=
        spec.phi().transpose() * (spec.omega().dense_matrix() * spec.phi());
  prec = 0.5 * (prec + prec.transpose());
  const CholeskyFactor f = CholeskyFactor::from_dense_spd(prec);
  Matrix out(n_draws, spec.p());
  for (Index i = 0; i < n_draws; ++i)
    out.row(i) =
        (spec.mu_beta() + f.solve_upper(rng.normal_vector(spec.p()))).transpose();
  return out;
}

/// Draw from the regression posterior
/// N((A + Phi^T Omega Phi)^{-1} Phi^T Omega t, (A + Phi^T Omega Phi)^{-1})
/// for the model t ~ N(Phi beta, Omega^{-1}), beta ~ N(0, A^{-1}):
/// beta = y1 + A^{-1} Phi^T alpha with
/// (Omega^{-1} + Phi A^{-1} Phi^T) alpha = t - Phi y1 - y2.
inline Vector sample_regression_posterior(const StructuredPrecSpec& spec,
                                          const Vector& t, RngState& rng) {
  if (t.size() != spec.n())
    throw DimensionMismatch("sample_regression_posterior: t has wrong size");
  const auto st = detail::make_prec_draw_state(spec);
  const Vector y1 = detail::precision_noise(spec.a(), rng);
  const Vector y2 = detail::precision_noise(spec.omega(), rng);
  const Vector alpha = st.inner_factor.solve(t - spec.phi() * y1 - y2);
  return y1 + st.a_inv_phi_t * alpha;
}

inline Matrix sample_regression_posterior_many(const StructuredPrecSpec& spec,
                                               const Vector& t, Index n_draws,
                                               RngState& rng) {
  if (t.size() != spec.n())
    throw DimensionMismatch("sample_regression_posterior: t has wrong size");
  const auto st = detail::make_prec_draw_state(spec);
  Matrix out(n_draws, spec.p());
  for (Index i = 0; i < n_draws; ++i) {
    const Vector y1 = detail::precision_noise(spec.a(), rng);
    const Vector y2 = detail::precision_noise(spec.omega(), rng);
    const Vector alpha = st.inner_factor.solve(t - spec.phi() * y1 - y2);
    out.row(i) = (y1 + st.a_inv_phi_t * alpha).transpose();
  }
  return out;
}

} // namespace fastmvn
