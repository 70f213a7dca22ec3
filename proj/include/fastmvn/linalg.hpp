// Dense and diagonal covariance kernels shared by every sampler:
// Cholesky factors, SPD solves, and null-space bases.
//
// Diagonal covariance is a first-class representation, not a dense matrix
// with zeros: every operation dispatches on the representation so the
// diagonal paths stay O(dim) and never materialize a dense matrix.
#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <utility>

#include <Eigen/Dense>

#include "fastmvn/errors.hpp"

namespace fastmvn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace instrument {

/// Scoped allocation probe. While a probe is live on a thread, sampler
/// scratch-matrix allocations and dense conversions of diagonal models are
/// recorded on it; tests use this to assert the fast paths never build a
/// k1 x k1 (resp. p x p) dense temporary.
class Probe {
public:
  Probe() : prev_(active()) { active() = this; }
  ~Probe() { active() = prev_; }
  Probe(const Probe&) = delete;
  Probe& operator=(const Probe&) = delete;

  std::size_t max_matrix_elems() const { return max_matrix_elems_; }
  long densify_count() const { return densify_count_; }

  static Probe*& active() {
    thread_local Probe* p = nullptr;
    return p;
  }

  void note_alloc(std::size_t elems) {
    max_matrix_elems_ = std::max(max_matrix_elems_, elems);
  }
  void note_densify() { ++densify_count_; }

private:
  Probe* prev_;
  std::size_t max_matrix_elems_ = 0;
  long densify_count_ = 0;
};

inline void note_matrix_alloc(Index rows, Index cols) {
  if (Probe* p = Probe::active())
    p->note_alloc(static_cast<std::size_t>(rows) *
                  static_cast<std::size_t>(cols));
}

inline void note_densify() {
  if (Probe* p = Probe::active()) p->note_densify();
}

} // namespace instrument

/// Allocate a sampler scratch matrix, recording its size on the active probe.
inline Matrix scratch_matrix(Index rows, Index cols) {
  instrument::note_matrix_alloc(rows, cols);
  return Matrix(rows, cols);
}

/// Positive diagonal matrix, stored as its diagonal.
class DiagMatrix {
public:
  explicit DiagMatrix(Vector diagonal) : d_(std::move(diagonal)) {
    if (!d_.allFinite()) throw InvalidArgument("diagonal entries must be finite");
    for (Index i = 0; i < d_.size(); ++i)
      if (!(d_[i] > 0.0)) throw NotPositiveDefinite(i);
  }
  Index dim() const { return d_.size(); }
  const Vector& diagonal() const { return d_; }

private:
  Vector d_;
};

namespace detail {

// Unblocked lower Cholesky, used only to locate the failing pivot after the
// fast Eigen path reports a numerical issue.
inline Index find_failing_pivot(Matrix a) {
  const Index n = a.rows();
  for (Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Index l = 0; l < j; ++l) d -= a(j, l) * a(j, l);
    if (!(d > 0.0)) return j;
    a(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Index l = 0; l < j; ++l) s -= a(i, l) * a(j, l);
      a(i, j) = s / a(j, j);
    }
  }
  return n - 1; // should not happen: caller saw a failure
}

inline Matrix symmetrize_checked(const Matrix& m) {
  if (m.rows() != m.cols())
    throw DimensionMismatch("covariance matrix must be square");
  if (!m.allFinite()) throw InvalidArgument("matrix entries must be finite");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    throw InvalidArgument("matrix is not symmetric within 1e-12 relative tolerance");
  return 0.5 * (m + m.transpose());
}

} // namespace detail

/// Lower-triangular Cholesky factor; diagonal inputs keep only the square
/// roots of the diagonal.
class CholeskyFactor {
public:
  static CholeskyFactor from_dense_spd(const Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success)
      throw NotPositiveDefinite(detail::find_failing_pivot(m));
    return CholeskyFactor(Matrix(llt.matrixL()));
  }

  static CholeskyFactor from_diagonal(const Vector& d) {
    for (Index i = 0; i < d.size(); ++i)
      if (!(d[i] > 0.0)) throw NotPositiveDefinite(i);
    return CholeskyFactor(Vector(d.array().sqrt()));
  }

  bool is_diagonal() const { return dense_.size() == 0; }
  Index dim() const { return is_diagonal() ? sqrt_d_.size() : dense_.rows(); }

  const Matrix& dense_lower() const { return dense_; }
  const Vector& diag_sqrt() const { return sqrt_d_; }

  /// L * xi — maps standard normals to covariance-L L^T normals.
  Vector mul(const Vector& xi) const {
    check_dim(xi.size());
    if (is_diagonal()) return sqrt_d_.cwiseProduct(xi);
    return dense_.triangularView<Eigen::Lower>() * xi;
  }

  /// Solve L x = b.
  Vector solve_lower(const Vector& b) const {
    check_dim(b.size());
    if (is_diagonal()) return b.cwiseQuotient(sqrt_d_);
    return dense_.triangularView<Eigen::Lower>().solve(b);
  }

  /// Solve L^T x = b — also samples N(0, (L L^T)^{-1}) from standard normals.
  Vector solve_upper(const Vector& b) const {
    check_dim(b.size());
    if (is_diagonal()) return b.cwiseQuotient(sqrt_d_);
    return dense_.transpose().triangularView<Eigen::Upper>().solve(b);
  }

  /// Solve (L L^T) x = b by two triangular solves.
  Vector solve(const Vector& b) const { return solve_upper(solve_lower(b)); }

  Matrix solve_matrix(const Matrix& b) const {
    check_dim(b.rows());
    if (is_diagonal()) return sqrt_d_.cwiseProduct(sqrt_d_).cwiseInverse().asDiagonal() * b;
    Matrix x = dense_.triangularView<Eigen::Lower>().solve(b);
    dense_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  /// L L^T, for reconstruction checks.
  Matrix reconstruct() const {
    if (is_diagonal())
      return Matrix(sqrt_d_.cwiseProduct(sqrt_d_).asDiagonal());
    return dense_.triangularView<Eigen::Lower>() * dense_.transpose();
  }

private:
  explicit CholeskyFactor(Matrix lower) : dense_(std::move(lower)) {}
  explicit CholeskyFactor(Vector sqrt_d) : sqrt_d_(std::move(sqrt_d)) {}

  void check_dim(Index n) const {
    if (n != dim()) throw DimensionMismatch("CholeskyFactor: size mismatch");
  }

  Matrix dense_; // empty when diagonal
  Vector sqrt_d_;
};

/// Symmetric positive-definite matrix in dense or diagonal representation.
/// Dense inputs are symmetrized ((m + m^T)/2) when the asymmetry is within
/// 1e-12 relative tolerance and rejected otherwise; positive definiteness is
/// established at construction by factoring, and the factor is kept.
class CovarianceModel {
public:
  static CovarianceModel dense(const Matrix& m) {
    Matrix sym = detail::symmetrize_checked(m);
    auto factor = std::make_shared<const CholeskyFactor>(
        CholeskyFactor::from_dense_spd(sym));
    return CovarianceModel(std::make_shared<const Matrix>(std::move(sym)),
                           nullptr, std::move(factor));
  }

  static CovarianceModel diagonal(const Vector& d) {
    if (!d.allFinite()) throw InvalidArgument("diagonal entries must be finite");
    auto factor = std::make_shared<const CholeskyFactor>(
        CholeskyFactor::from_diagonal(d));
    return CovarianceModel(nullptr, std::make_shared<const Vector>(d),
                           std::move(factor));
  }

  static CovarianceModel diagonal(const DiagMatrix& d) {
    return diagonal(d.diagonal());
  }

  bool is_diagonal() const { return diag_ != nullptr; }
  Index dim() const { return factor_->dim(); }

  const Matrix& dense_matrix() const {
    if (is_diagonal())
      throw InvalidArgument("dense_matrix() on a diagonal model");
    return *dense_;
  }

  const Vector& diagonal_entries() const {
    if (!is_diagonal())
      throw InvalidArgument("diagonal_entries() on a dense model");
    return *diag_;
  }

  /// Materialize as dense; counted by the instrumentation probe.
  Matrix to_dense() const {
    if (!is_diagonal()) return *dense_;
    instrument::note_densify();
    instrument::note_matrix_alloc(dim(), dim());
    return Matrix(diag_->asDiagonal());
  }

  const CholeskyFactor& factor() const { return *factor_; }

  /// Sigma * v.
  Vector apply(const Vector& v) const {
    check_dim(v.size());
    if (is_diagonal()) return diag_->cwiseProduct(v);
    return *dense_ * v;
  }

  /// Sigma^{-1} b via the cached factor.
  Vector solve(const Vector& b) const {
    check_dim(b.size());
    return factor_->solve(b);
  }

  Matrix solve_matrix(const Matrix& b) const {
    check_dim(b.rows());
    return factor_->solve_matrix(b);
  }

private:
  CovarianceModel(std::shared_ptr<const Matrix> dense,
                  std::shared_ptr<const Vector> diag,
                  std::shared_ptr<const CholeskyFactor> factor)
      : dense_(std::move(dense)), diag_(std::move(diag)),
        factor_(std::move(factor)) {}

  void check_dim(Index n) const {
    if (n != dim()) throw DimensionMismatch("CovarianceModel: size mismatch");
  }

  std::shared_ptr<const Matrix> dense_;
  std::shared_ptr<const Vector> diag_;
  std::shared_ptr<const CholeskyFactor> factor_;
};

/// Lower-triangular factor L with L L^T = m; O(dim) for diagonal models.
inline const CholeskyFactor& cholesky(const CovarianceModel& m) {
  return m.factor();
}

/// Solve m x = b for SPD m via Cholesky and two triangular solves.
inline Vector spd_solve(const CovarianceModel& m, const Vector& b) {
  if (b.size() != m.dim())
    throw DimensionMismatch("spd_solve: right-hand side size mismatch");
  return m.solve(b);
}

/// Orthonormal basis of the null space of g (k2 x k, full row rank, k2 < k),
/// computed from a column-pivoted Householder QR of g^T. Deterministic for a
/// fixed input. Throws RankDeficient when the numerical rank of g is below
/// k2 (pivots under 1e-10 relative to the largest).
inline Matrix null_space_basis(const Matrix& g) {
  const Index k2 = g.rows(), k = g.cols();
  if (k2 >= k)
    throw InvalidArgument("null_space_basis: need fewer rows than columns");
  Eigen::ColPivHouseholderQR<Matrix> qr(g.transpose());
  const Matrix& r = qr.matrixQR();
  const double rmax = std::abs(r(0, 0));
  if (!(rmax > 0.0)) throw RankDeficient("constraint matrix is zero");
  for (Index i = 0; i < k2; ++i)
    if (std::abs(r(i, i)) <= 1e-10 * rmax)
      throw RankDeficient("constraint matrix is rank deficient");
  Matrix tail = Matrix::Zero(k, k - k2);
  tail.bottomRows(k - k2).setIdentity();
  return qr.householderQ() * tail;
}

} // namespace fastmvn
