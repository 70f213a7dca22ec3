// Sampling a MVN restricted to the affine set {x : G x = r}.
//
// Two routes:
//  - sample_naive: change of basis through H = (H1, H2) with G H1 = 0, then
//    a conditional draw in z-coordinates mapped back by x = H z. Requires a
//    null-space basis and several factorizations, which a TransformCache can
//    amortize across draws.
//  - sample_fast: draw y ~ N(mu, Sigma) unconstrained and project,
//    x = y + Sigma G^T (G Sigma G^T)^{-1} (r - G y). No H, no Sigma inverse;
//    with diagonal Sigma the per-draw cost is O(k2^2 k).
#pragma once

#include <optional>
#include <utility>

#include "fastmvn/linalg.hpp"
#include "fastmvn/mvn.hpp"
#include "fastmvn/rng.hpp"

namespace fastmvn {

namespace detail {

inline void check_full_row_rank(const Matrix& g) {
  Eigen::ColPivHouseholderQR<Matrix> qr(g.transpose());
  const Matrix& r = qr.matrixQR();
  const double rmax = std::abs(r(0, 0));
  if (!(rmax > 0.0)) throw RankDeficient("constraint matrix is zero");
  for (Index i = 0; i < g.rows(); ++i)
    if (std::abs(r(i, i)) <= 1e-10 * rmax)
      throw RankDeficient("constraint matrix is rank deficient");
}

} // namespace detail

/// The constraint set S = {x : G x = r} with G full row rank (verified once
/// at construction, mirroring a one-time SVD check).
class HyperplaneConstraint {
public:
  HyperplaneConstraint(Matrix g, Vector r)
      : g_(std::move(g)), r_(std::move(r)) {
    if (g_.rows() >= g_.cols())
      throw InvalidArgument("HyperplaneConstraint: need k2 < k");
    if (r_.size() != g_.rows())
      throw DimensionMismatch("HyperplaneConstraint: r has wrong size");
    if (!g_.allFinite() || !r_.allFinite())
      throw InvalidArgument("HyperplaneConstraint: entries must be finite");
    detail::check_full_row_rank(g_);
  }

  Index k() const { return g_.cols(); }
  Index k2() const { return g_.rows(); }
  const Matrix& g() const { return g_; }
  const Vector& r() const { return r_; }

private:
  Matrix g_;
  Vector r_;
};

/// Precomputed transform state for sample_naive: the basis H = (H1, H2),
/// the z-space precision blocks Lambda11 (factored) and Lambda12, and the
/// conditioned mean mu_z1. Immutable; shareable across threads.
class TransformCache {
public:
  /// H1 from the null space of G; H2 completed with k2 standard basis
  /// vectors chosen by greedy pivoting on the columns of |G|.
  TransformCache(const GaussianSpec& spec, const HyperplaneConstraint& c)
      : TransformCache(spec, c, null_space_basis(c.g()), pivot_completion(c.g())) {}

  /// Explicit basis blocks; G H1 must vanish and G H2 must be invertible.
  TransformCache(const GaussianSpec& spec, const HyperplaneConstraint& c,
                 Matrix h1, Matrix h2)
      : h1_(std::move(h1)), h2_(std::move(h2)),
        lambda11_factor_(build(spec, c)) {}

  const Matrix& h1() const { return h1_; }
  const Matrix& h2() const { return h2_; }
  const Matrix& lambda11() const { return lambda11_; }
  const Matrix& lambda12() const { return lambda12_; }
  const Vector& z2() const { return z2_; }
  const Vector& mu_z1() const { return mu_z1_; }

  /// One draw: z1 ~ N(mu_z1, Lambda11^{-1}), x = H1 z1 + H2 z2.
  Vector draw(RngState& rng) const {
    const Vector z1 =
        mu_z1_ + lambda11_factor_.solve_upper(rng.normal_vector(mu_z1_.size()));
    return h1_ * z1 + offset_;
  }

private:
  static Matrix pivot_completion(const Matrix& g) {
    Eigen::ColPivHouseholderQR<Matrix> qr(g);
    const auto& perm = qr.colsPermutation().indices();
    Matrix h2 = Matrix::Zero(g.cols(), g.rows());
    for (Index j = 0; j < g.rows(); ++j) h2(perm[j], j) = 1.0;
    return h2;
  }

  CholeskyFactor build(const GaussianSpec& spec, const HyperplaneConstraint& c) {
    const Index k = c.k(), k2 = c.k2(), k1 = k - k2;
    if (spec.dim() != k)
      throw DimensionMismatch("TransformCache: spec/constraint size mismatch");
    if (h1_.rows() != k || h1_.cols() != k1 || h2_.rows() != k || h2_.cols() != k2)
      throw DimensionMismatch("TransformCache: basis block sizes do not conform");
    const double gscale = std::max(1.0, c.g().cwiseAbs().maxCoeff());
    if ((c.g() * h1_).cwiseAbs().maxCoeff() > 1e-10 * gscale)
      throw InvalidArgument("TransformCache: G H1 does not vanish");

    const Matrix gh2 = c.g() * h2_;
    Eigen::PartialPivLU<Matrix> gh2_lu(gh2);
    z2_ = gh2_lu.solve(c.r());
    if (!z2_.allFinite()) throw RankDeficient("TransformCache: G H2 singular");
    offset_ = h2_ * z2_;

    // Sigma^{-1} H without forming Sigma^{-1}.
    Matrix h(k, k1 + k2);
    h.leftCols(k1) = h1_;
    h.rightCols(k2) = h2_;
    Matrix s;
    if (spec.cov.is_diagonal())
      s = spec.cov.diagonal_entries().cwiseInverse().asDiagonal() * h;
    else
      s = spec.cov.solve_matrix(h);

    lambda11_ = h1_.transpose() * s.leftCols(k1);
    lambda11_ = 0.5 * (lambda11_ + lambda11_.transpose());
    lambda12_ = h1_.transpose() * s.rightCols(k2);

    const Vector mu_z = Eigen::PartialPivLU<Matrix>(h).solve(spec.mean);
    CholeskyFactor factor = CholeskyFactor::from_dense_spd(lambda11_);
    mu_z1_ = mu_z.head(k1) - factor.solve(lambda12_ * (z2_ - mu_z.tail(k2)));
    return factor;
  }

  Matrix h1_, h2_;
  Matrix lambda11_, lambda12_;
  Vector z2_, mu_z1_, offset_;
  CholeskyFactor lambda11_factor_;
};

inline TransformCache make_transform_cache(const GaussianSpec& spec,
                                           const HyperplaneConstraint& c) {
  return TransformCache(spec, c);
}

/// Transform-based draw (the baseline). Without a cache every call rebuilds
/// the basis and factorizations; pass a cache to amortize them.
inline Vector sample_naive(const GaussianSpec& spec, const HyperplaneConstraint& c,
                           RngState& rng, const TransformCache* cache = nullptr) {
  if (cache) return cache->draw(rng);
  return TransformCache(spec, c).draw(rng);
}

namespace detail {

// W = Sigma G^T and a factor of G Sigma G^T; everything sample_fast reuses
// across draws when batching.
struct Projection {
  Matrix w;
  CholeskyFactor b_factor;
};

inline Projection make_projection(const CovarianceModel& cov,
                                  const HyperplaneConstraint& c) {
  if (cov.dim() != c.k())
    throw DimensionMismatch("projection: spec/constraint size mismatch");
  Matrix w = scratch_matrix(c.k(), c.k2());
  if (cov.is_diagonal())
    w.noalias() = cov.diagonal_entries().asDiagonal() * c.g().transpose();
  else
    w.noalias() = cov.dense_matrix() * c.g().transpose();
  Matrix b = scratch_matrix(c.k2(), c.k2());
  b.noalias() = c.g() * w;
  b = 0.5 * (b + b.transpose());
  return Projection{std::move(w), CholeskyFactor::from_dense_spd(b)};
}

inline Vector apply_projection(const Projection& p, const HyperplaneConstraint& c,
                               const Vector& y) {
  return y + p.w * p.b_factor.solve(c.r() - c.g() * y);
}

} // namespace detail

/// The affine map of the projection sampler:
/// y -> y + Sigma G^T (G Sigma G^T)^{-1} (r - G y). Idempotent; fixes any y
/// already satisfying G y = r.
inline Vector project_onto_constraint(const GaussianSpec& spec,
                                      const HyperplaneConstraint& c,
                                      const Vector& y) {
  return detail::apply_projection(detail::make_projection(spec.cov, c), c, y);
}

/// Projection draw: y ~ N(mu, Sigma), then the affine map above. Never
/// builds H and never inverts Sigma.
inline Vector sample_fast(const GaussianSpec& spec, const HyperplaneConstraint& c,
                          RngState& rng) {
  const auto p = detail::make_projection(spec.cov, c);
  return detail::apply_projection(p, c, sample_mvn(spec, rng));
}

/// n projection draws with W and the factor of G Sigma G^T hoisted out of
/// the loop; row i is the i-th draw. Bit-identical to n sample_fast calls
/// on the same stream.
inline Matrix sample_fast_many(const GaussianSpec& spec,
                               const HyperplaneConstraint& c, Index n,
                               RngState& rng) {
  const auto p = detail::make_projection(spec.cov, c);
  Matrix out(n, c.k());
  for (Index i = 0; i < n; ++i)
    out.row(i) = detail::apply_projection(p, c, sample_mvn(spec, rng)).transpose();
  return out;
}

/// n transform draws sharing one cache.
inline Matrix sample_naive_many(const GaussianSpec& spec,
                                const HyperplaneConstraint& c, Index n,
                                RngState& rng,
                                const TransformCache* cache = nullptr) {
  std::optional<TransformCache> local;
  if (!cache) local.emplace(spec, c);
  const TransformCache& use = cache ? *cache : *local;
  Matrix out(n, c.k());
  for (Index i = 0; i < n; ++i) out.row(i) = use.draw(rng).transpose();
  return out;
}

/// Simplex-plane specialization: x ~ N(mu, a diag(phi)) restricted to
/// 1^T x = 1, drawn in O(k) as x = y + (1 - 1^T y) phi. Requires phi > 0
/// summing to 1 (within 1e-10) and a > 0.
inline Vector sample_simplex_diag(const Vector& mu, double a, const Vector& phi,
                                  RngState& rng) {
  if (mu.size() != phi.size())
    throw DimensionMismatch("sample_simplex_diag: mu/phi size mismatch");
  if (!(a > 0.0)) throw InvalidSimplex("sample_simplex_diag: a must be > 0");
  for (Index i = 0; i < phi.size(); ++i)
    if (!(phi[i] > 0.0))
      throw InvalidSimplex("sample_simplex_diag: phi must be positive");
  if (std::abs(phi.sum() - 1.0) > 1e-10)
    throw InvalidSimplex("sample_simplex_diag: phi must sum to 1");
  Vector y = mu + (a * phi.array()).sqrt().matrix().cwiseProduct(
                      rng.normal_vector(mu.size()));
  return y + (1.0 - y.sum()) * phi;
}

} // namespace fastmvn
