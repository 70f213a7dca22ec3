// Mini-batch SG-MCMC for a simplex-constrained global parameter under a
// multinomial likelihood with a Dirichlet prior.
//
// Each mini-batch step targets a Gaussian centered at a preconditioned
// stochastic-gradient update of the current point, with covariance
// (2 eps_t / M) times the multinomial Fisher-information inverse. Two
// simulators are provided:
//  - sgmcmc_step_fast: the O(V) route: draw the V-dimensional diagonal
//    Gaussian, project onto the sum-one plane, clip-renormalize if any
//    coordinate went negative.
//  - sgmcmc_step_gibbs: exact single-site Gibbs on the (V-1)-dimensional
//    reduced-mean form, each coordinate drawn from its univariate normal
//    full conditional truncated to the feasible interval.
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fastmvn/errors.hpp"
#include "fastmvn/rng.hpp"
#include "fastmvn/stats.hpp"

namespace fastmvn {

/// Position of the chain: a strictly positive point on the V-simplex, the
/// running estimate of the total-count scale M, and the step counter.
struct SimplexState {
  Eigen::VectorXd phi;
  double m_estimate = 1.0;
  long step_index = 1;

  void validate() const {
    if (!(m_estimate > 0.0) || step_index < 1)
      throw InvalidArgument("SimplexState: M and step index must be positive");
    for (Eigen::Index i = 0; i < phi.size(); ++i)
      if (!(phi[i] > 0.0))
        throw InvalidSimplex("SimplexState: phi must be strictly positive");
    if (std::abs(phi.sum() - 1.0) > 1e-10)
      throw InvalidSimplex("SimplexState: phi must sum to 1");
  }
};

inline SimplexState initial_simplex_state(Eigen::Index v) {
  if (v < 2) throw InvalidArgument("initial_simplex_state: need V >= 2");
  return {Eigen::VectorXd::Constant(v, 1.0 / static_cast<double>(v)), 1.0, 1};
}

/// Counts of one mini-batch: per-dimension totals, their sum, and the
/// dataset-to-batch size ratio rho.
struct MinibatchCounts {
  Eigen::VectorXd n_colon;
  double n_total = 0.0;
  double rho = 1.0;

  MinibatchCounts(Eigen::VectorXd counts, double rho_in)
      : n_colon(std::move(counts)), n_total(n_colon.sum()), rho(rho_in) {
    if (!(rho > 0.0)) throw InvalidArgument("MinibatchCounts: rho must be > 0");
    if ((n_colon.array() < 0.0).any())
      throw InvalidArgument("MinibatchCounts: counts must be nonnegative");
  }
};

struct SgmcmcConfig {
  double eta = 1.0;            // Dirichlet concentration
  double step_exponent = 0.99; // eps_t = t^{-step_exponent}
  double epsilon_floor = 1e-10;
  int minibatch_size = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(eta > 0.0)) throw InvalidArgument("SgmcmcConfig: eta must be > 0");
    if (!(step_exponent > 0.5 && step_exponent <= 1.0))
      throw InvalidArgument("SgmcmcConfig: step_exponent must be in (0.5, 1]");
    if (epsilon_floor < 0.0)
      throw InvalidArgument("SgmcmcConfig: epsilon_floor must be >= 0");
    if (minibatch_size < 1)
      throw InvalidArgument("SgmcmcConfig: minibatch_size must be >= 1");
  }
};

struct SyntheticCorpus {
  Eigen::VectorXd true_phi;
  std::vector<Eigen::VectorXi> docs;
};

/// Sparse-ish ground truth: f ~ U(0,1)^v with n_spike random coordinates
/// reset to spike_value, normalized; each document's counts are multinomial
/// with a Poisson-distributed number of trials.
inline SyntheticCorpus generate_synthetic_corpus(int v, int n_docs, int n_spike,
                                                 double spike_value,
                                                 double poisson_mean,
                                                 RngState& rng) {
  if (v < 2 || n_docs < 0 || n_spike < 0 || n_spike >= v)
    throw InvalidArgument("generate_synthetic_corpus: need 0 <= n_spike < v, v >= 2");
  if (n_spike > 0 && !(spike_value > 0.0))
    throw InvalidArgument("generate_synthetic_corpus: spike_value must be > 0");
  if (!(poisson_mean > 0.0))
    throw InvalidArgument("generate_synthetic_corpus: poisson_mean must be > 0");

  Eigen::VectorXd f(v);
  for (int i = 0; i < v; ++i) f[i] = rng.uniform();
  // partial Fisher-Yates to pick n_spike distinct coordinates
  std::vector<int> idx(v);
  for (int i = 0; i < v; ++i) idx[i] = i;
  for (int i = 0; i < n_spike; ++i) {
    const int j = i + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(v - i));
    std::swap(idx[i], idx[j]);
    f[idx[i]] = spike_value;
  }
  Eigen::VectorXd phi = f / f.sum();

  Eigen::VectorXd cdf(v);
  double acc = 0.0;
  for (int i = 0; i < v; ++i) {
    acc += phi[i];
    cdf[i] = acc;
  }
  cdf[v - 1] = 1.0;

  SyntheticCorpus corpus;
  corpus.true_phi = std::move(phi);
  corpus.docs.reserve(static_cast<std::size_t>(n_docs));
  for (int j = 0; j < n_docs; ++j) {
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(v);
    const long trials = rng.poisson(poisson_mean);
    for (long s = 0; s < trials; ++s) {
      const double u = rng.uniform();
      const int cell = static_cast<int>(
          std::lower_bound(cdf.data(), cdf.data() + v, u) - cdf.data());
      counts[std::min(cell, v - 1)] += 1;
    }
    corpus.docs.push_back(std::move(counts));
  }
  return corpus;
}

/// Exact posterior mean under the full corpus:
/// (sum_j n_j + eta) / (sum_j n_{.j} + eta V).
inline Eigen::VectorXd batch_posterior_mean(const std::vector<Eigen::VectorXi>& docs,
                                            double eta) {
  if (docs.empty())
    throw InvalidArgument("batch_posterior_mean: need at least one document");
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(docs.front().size());
  for (const auto& d : docs) sums += d.cast<double>();
  return (sums.array() + eta) / (sums.sum() + eta * static_cast<double>(sums.size()));
}

/// Sum a contiguous block of documents into one mini-batch.
inline MinibatchCounts make_minibatch(const std::vector<Eigen::VectorXi>& docs,
                                      std::size_t first, std::size_t count,
                                      double rho) {
  if (count == 0 || first + count > docs.size())
    throw InvalidArgument("make_minibatch: document range out of bounds");
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(docs[first].size());
  for (std::size_t j = first; j < first + count; ++j) sums += docs[j].cast<double>();
  return MinibatchCounts(std::move(sums), rho);
}

/// ||a - b||_2.
inline double residual_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw DimensionMismatch("residual_error: size mismatch");
  return (a - b).norm();
}

/// Truncated normal on [lo, hi] by inverse CDF: u uniform on the CDF window,
/// x = mean + sd * quantile(u). The computation is reflected so the window
/// is evaluated in the tail with representable mass, and falls back to the
/// interval midpoint when the window still underflows (width < 1e-300).
inline double truncated_normal_sample(double mean, double sd, double lo,
                                      double hi, RngState& rng) {
  if (!(lo < hi)) throw InvalidArgument("truncated_normal_sample: need lo < hi");
  if (!(sd > 0.0)) throw InvalidArgument("truncated_normal_sample: need sd > 0");
  if (mean > 0.5 * (lo + hi))
    return -truncated_normal_sample(-mean, sd, -hi, -lo, rng);
  // Upper-tail probabilities decrease in z, so qa >= qb.
  const double qa = normal_upper_tail((lo - mean) / sd);
  const double qb = normal_upper_tail((hi - mean) / sd);
  const double width = qa - qb;
  if (width < 1e-300) return 0.5 * (lo + hi);
  const double q = qb + rng.uniform() * width;
  const double x = mean - sd * inverse_normal_cdf(q);
  return std::clamp(x, lo, hi);
}

namespace detail {

struct StepScales {
  double eps;
  double m_new;
};

inline StepScales step_scales(const SimplexState& state,
                              const MinibatchCounts& batch,
                              const SgmcmcConfig& cfg) {
  const double eps = std::pow(static_cast<double>(state.step_index),
                              -cfg.step_exponent);
  // running estimate of E[sum_j n_{.j}], with the observed batch total as
  // the unbiased plug-in for the expectation
  const double m_new =
      (1.0 - eps) * state.m_estimate + eps * batch.rho * batch.n_total;
  return {eps, m_new};
}

inline Eigen::VectorXd drift_mean(const Eigen::VectorXd& phi,
                                  const Eigen::VectorXd& counts,
                                  double n_total_scaled, double eps_over_m,
                                  const SgmcmcConfig& cfg, double rho,
                                  double v_total) {
  return phi.array() +
         eps_over_m * ((rho * counts.array() + cfg.eta) -
                       (n_total_scaled + cfg.eta * v_total) * phi.array());
}

} // namespace detail

/// One fast step: y ~ N(phi_t + (eps/M) grad, (2 eps/M) diag(phi_t)),
/// projected by z = y + (1 - 1^T y) phi_t; when any coordinate of z is
/// negative, d = max(eps_floor, z) is renormalized. O(V).
inline SimplexState sgmcmc_step_fast(const SimplexState& state,
                                     const MinibatchCounts& batch,
                                     const SgmcmcConfig& cfg, RngState& rng) {
  state.validate();
  cfg.validate();
  const Eigen::Index v = state.phi.size();
  if (batch.n_colon.size() != v)
    throw DimensionMismatch("sgmcmc_step_fast: batch dimension mismatch");
  const auto [eps, m_new] = detail::step_scales(state, batch, cfg);

  const Eigen::VectorXd mean = detail::drift_mean(
      state.phi, batch.n_colon, batch.rho * batch.n_total, eps / m_new, cfg,
      batch.rho, static_cast<double>(v));
  const double noise_scale = 2.0 * eps / m_new;
  Eigen::VectorXd y(v);
  for (Eigen::Index i = 0; i < v; ++i)
    y[i] = mean[i] + std::sqrt(noise_scale * state.phi[i]) * rng.normal();

  Eigen::VectorXd z = y.array() + (1.0 - y.sum()) * state.phi.array();
  if ((z.array() > 0.0).all())
    return {std::move(z), m_new, state.step_index + 1};
  Eigen::VectorXd d = z.cwiseMax(cfg.epsilon_floor);
  return {d / d.sum(), m_new, state.step_index + 1};
}

/// One exact step: single-site Gibbs on the reduced-mean (V-1)-dimensional
/// Gaussian truncated to phi >= 0, 1^T phi <= 1. Coordinates are scanned in
/// ascending order; each full conditional is a univariate truncated normal
/// drawn by inverse CDF. The constant off-diagonal of the precision
/// (the Fisher-information form) makes each coordinate update O(1) given a
/// running residual sum, so one sweep is O(V).
///
/// noise_scale is a test hook: it scales the conditional standard
/// deviations, and 0 degenerates each update to the clipped conditional mean.
inline SimplexState sgmcmc_step_gibbs(const SimplexState& state,
                                      const MinibatchCounts& batch,
                                      const SgmcmcConfig& cfg, int n_gibbs_iters,
                                      RngState& rng, double noise_scale = 1.0) {
  state.validate();
  cfg.validate();
  if (n_gibbs_iters < 1)
    throw InvalidArgument("sgmcmc_step_gibbs: need at least one sweep");
  const Eigen::Index v = state.phi.size();
  if (batch.n_colon.size() != v)
    throw DimensionMismatch("sgmcmc_step_gibbs: batch dimension mismatch");
  const auto [eps, m_new] = detail::step_scales(state, batch, cfg);
  const Eigen::Index vr = v - 1;

  const Eigen::VectorXd mean_full = detail::drift_mean(
      state.phi, batch.n_colon, batch.rho * batch.n_total, eps / m_new, cfg,
      batch.rho, static_cast<double>(v));
  const auto m = mean_full.head(vr);

  // Precision of the reduced-mean Gaussian: (M / 2 eps) [diag(1/phi) +
  // 1 1^T / phi_V]; its constant off-diagonal drives the O(1) conditionals.
  const double lam_scale = m_new / (2.0 * eps);
  const double phi_last = state.phi[vr];
  const double off = lam_scale / phi_last;
  Eigen::VectorXd lam_diag(vr);
  for (Eigen::Index i = 0; i < vr; ++i)
    lam_diag[i] = lam_scale * (1.0 / state.phi[i] + 1.0 / phi_last);

  Eigen::VectorXd x = state.phi.head(vr);
  double resid_sum = (x - m).sum(); // sum of (x_w - m_w)
  double total = x.sum();

  for (int sweep = 0; sweep < n_gibbs_iters; ++sweep) {
    for (Eigen::Index i = 0; i < vr; ++i) {
      const double resid_others = resid_sum - (x[i] - m[i]);
      const double total_others = total - x[i];
      const double cond_mean = m[i] - off * resid_others / lam_diag[i];
      const double ub = 1.0 - total_others;
      double x_new;
      if (!(ub > 0.0)) {
        x_new = 0.0;
      } else if (noise_scale == 0.0) {
        x_new = std::clamp(cond_mean, 0.0, ub);
      } else {
        const double sd = noise_scale / std::sqrt(lam_diag[i]);
        x_new = truncated_normal_sample(cond_mean, sd, 0.0, ub, rng);
      }
      resid_sum = resid_others + (x_new - m[i]);
      total = total_others + x_new;
      x[i] = x_new;
    }
    // refresh the running sums once per sweep to stop drift
    resid_sum = (x - m).sum();
    total = x.sum();
  }

  Eigen::VectorXd assembled(v);
  assembled.head(vr) = x;
  assembled[vr] = 1.0 - total;
  if (!(assembled.array() > 0.0).all()) {
    Eigen::VectorXd d = assembled.cwiseMax(cfg.epsilon_floor);
    assembled = d / d.sum();
  }
  return {std::move(assembled), m_new, state.step_index + 1};
}

} // namespace fastmvn
