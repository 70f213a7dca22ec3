// Statistical verification toolkit: empirical moments, two-sample
// Kolmogorov-Smirnov tests, constraint residuals, and the moment-matching
// report the acceptance battery is built on. Everything here is a
// deterministic function of its inputs.
#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "fastmvn/hyperplane.hpp"
#include "fastmvn/linalg.hpp"
#include "fastmvn/stats.hpp"

namespace fastmvn {

/// Sample count, mean, and unbiased covariance of a draw matrix.
struct MomentSummary {
  long n = 0;
  Vector mean;
  Matrix cov;
};

/// Exact two-pass mean and unbiased covariance; rows are draws.
inline MomentSummary summarize(const Matrix& samples) {
  const Index n = samples.rows();
  if (n < 2) throw InvalidArgument("summarize: need at least two draws");
  MomentSummary s;
  s.n = n;
  s.mean = samples.colwise().mean();
  const Matrix centered = samples.rowwise() - s.mean.transpose();
  s.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  s.cov = 0.5 * (s.cov + s.cov.transpose());
  return s;
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Classical two-sample Kolmogorov-Smirnov statistic with the asymptotic
/// p-value.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw InvalidArgument("ks_two_sample: samples must be nonempty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

/// ||G x - r||_inf / max(1, ||r||_inf).
inline double constraint_residual(const HyperplaneConstraint& c, const Vector& x) {
  if (x.size() != c.k())
    throw DimensionMismatch("constraint_residual: x has wrong size");
  const double num = (c.g() * x - c.r()).cwiseAbs().maxCoeff();
  return num / std::max(1.0, c.r().cwiseAbs().maxCoeff());
}

/// Moment-matching verdict for a draw matrix against an analytic law:
/// per-coordinate mean errors within 4 standard errors and covariance within
/// 5% relative Frobenius distance.
struct MomentMatchReport {
  bool pass = false;
  double max_mean_z = 0.0; // worst |mean error| / standard error
  int worst_coordinate = -1;
  double cov_rel_frobenius = 0.0;
  long n = 0;

  std::string summary() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%s: max mean z=%.2f (coord %d), cov rel frob=%.4f, n=%ld",
                  pass ? "pass" : "FAIL", max_mean_z, worst_coordinate,
                  cov_rel_frobenius, n);
    return buf;
  }
};

inline MomentMatchReport moment_match_report(const Matrix& samples,
                                             const Vector& analytic_mean,
                                             const Matrix& analytic_cov) {
  if (samples.cols() != analytic_mean.size() ||
      analytic_cov.rows() != analytic_mean.size() ||
      analytic_cov.cols() != analytic_mean.size())
    throw DimensionMismatch("moment_match_report: dimension mismatch");
  const MomentSummary s = summarize(samples);
  MomentMatchReport rep;
  rep.n = s.n;
  for (Index i = 0; i < analytic_mean.size(); ++i) {
    const double se =
        std::sqrt(std::max(analytic_cov(i, i), 0.0) / static_cast<double>(s.n));
    const double z = se > 0.0 ? std::abs(s.mean[i] - analytic_mean[i]) / se
                              : (s.mean[i] == analytic_mean[i] ? 0.0 : 1e300);
    if (z > rep.max_mean_z) {
      rep.max_mean_z = z;
      rep.worst_coordinate = static_cast<int>(i);
    }
  }
  rep.cov_rel_frobenius =
      (s.cov - analytic_cov).norm() / std::max(analytic_cov.norm(), 1e-300);
  rep.pass = rep.max_mean_z <= 4.0 && rep.cov_rel_frobenius <= 0.05;
  return rep;
}

/// Two-sample moment comparison (both sides empirical): mean gaps within
/// 4 combined standard errors, covariance gap within 5% relative Frobenius.
inline MomentMatchReport moment_match_two_sample(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw DimensionMismatch("moment_match_two_sample: dimension mismatch");
  const MomentSummary sa = summarize(a);
  const MomentSummary sb = summarize(b);
  MomentMatchReport rep;
  rep.n = sa.n;
  for (Index i = 0; i < a.cols(); ++i) {
    const double se = std::sqrt(sa.cov(i, i) / static_cast<double>(sa.n) +
                                sb.cov(i, i) / static_cast<double>(sb.n));
    const double z = se > 0.0 ? std::abs(sa.mean[i] - sb.mean[i]) / se : 0.0;
    if (z > rep.max_mean_z) {
      rep.max_mean_z = z;
      rep.worst_coordinate = static_cast<int>(i);
    }
  }
  rep.cov_rel_frobenius =
      (sa.cov - sb.cov).norm() / std::max(sb.cov.norm(), 1e-300);
  rep.pass = rep.max_mean_z <= 4.0 && rep.cov_rel_frobenius <= 0.05;
  return rep;
}

struct KsBatteryResult {
  bool pass = false;
  double min_p = 1.0;
  int worst_dim = -1;
  double alpha = 0.0;
  double bonferroni_threshold = 0.0;
};

/// Per-dimension two-sample KS tests with a Bonferroni-corrected family
/// level alpha: reject when any dimension's p-value drops below alpha / k.
inline KsBatteryResult ks_battery(const Matrix& a, const Matrix& b, double alpha) {
  if (a.cols() != b.cols())
    throw DimensionMismatch("ks_battery: dimension mismatch");
  KsBatteryResult res;
  res.alpha = alpha;
  res.bonferroni_threshold = alpha / static_cast<double>(a.cols());
  for (Index dim = 0; dim < a.cols(); ++dim) {
    std::vector<double> xa(a.col(dim).data(), a.col(dim).data() + a.rows());
    std::vector<double> xb(b.col(dim).data(), b.col(dim).data() + b.rows());
    const KsResult r = ks_two_sample(std::move(xa), std::move(xb));
    if (r.p_value < res.min_p) {
      res.min_p = r.p_value;
      res.worst_dim = static_cast<int>(dim);
    }
  }
  res.pass = res.min_p >= res.bonferroni_threshold;
  return res;
}

} // namespace fastmvn
