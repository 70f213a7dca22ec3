#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <vector>

#include "fastmvn/hyperplane.hpp"
#include "fastmvn/sgmcmc.hpp"
#include "fastmvn/validate.hpp"
#include "oracles.hpp"

using namespace fastmvn;
using Eigen::VectorXd;
using Eigen::VectorXi;

namespace {

// Posterior-draw noise floor: mean residual of exact Dirichlet posterior
// draws around the batch posterior mean.
double residual_floor(const std::vector<VectorXi>& docs, double eta,
                      const VectorXd& reference, RngState& rng) {
  VectorXd alpha = VectorXd::Constant(reference.size(), eta);
  for (const auto& d : docs) alpha += d.cast<double>();
  double acc = 0.0;
  const int reps = 200;
  for (int i = 0; i < reps; ++i)
    acc += residual_error(reference, rng.dirichlet(alpha));
  return acc / reps;
}

} // namespace

TEST_CASE("synthetic corpus reproduces the generative setting") {
  RngState rng(3);
  const auto corpus = generate_synthetic_corpus(2000, 10000, 40, 100.0, 50.0, rng);
  REQUIRE(corpus.true_phi.size() == 2000);
  REQUIRE(corpus.docs.size() == 10000);
  REQUIRE(corpus.true_phi.sum() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE((corpus.true_phi.array() > 0.0).all());
  // 40 spiked coordinates dominate the mass
  int heavy = 0;
  for (Eigen::Index i = 0; i < 2000; ++i)
    if (corpus.true_phi[i] > 10.0 / 4200.0) ++heavy;
  REQUIRE(heavy == 40);
}

TEST_CASE("corpus without spikes is near-uniform in expectation") {
  RngState rng(5);
  const auto corpus = generate_synthetic_corpus(500, 10, 0, 100.0, 50.0, rng);
  REQUIRE(corpus.true_phi.maxCoeff() < 3.0 / 500.0);
  REQUIRE_THROWS_AS(generate_synthetic_corpus(10, 5, 10, 100.0, 50.0, rng),
                    InvalidArgument);
}

TEST_CASE("corpus counts obey the law of large numbers") {
  RngState rng(7);
  const int v = 200;
  const auto corpus = generate_synthetic_corpus(v, 5000, 10, 100.0, 50.0, rng);
  VectorXd totals = VectorXd::Zero(v);
  for (const auto& d : corpus.docs) totals += d.cast<double>();
  const double grand = totals.sum();
  for (Eigen::Index i = 0; i < v; ++i) {
    const double p = corpus.true_phi[i];
    const double se = std::sqrt(p * (1.0 - p) / grand);
    REQUIRE(std::abs(totals[i] / grand - p) <= 6.0 * se + 1e-12);
  }
}

TEST_CASE("batch posterior mean closed form") {
  std::vector<VectorXi> docs{VectorXi{{1, 0}}};
  const VectorXd post = batch_posterior_mean(docs, 1.0);
  REQUIRE(post[0] == Catch::Approx(2.0 / 3.0).epsilon(1e-14));
  REQUIRE(post[1] == Catch::Approx(1.0 / 3.0).epsilon(1e-14));

  std::vector<VectorXi> zeros{VectorXi::Zero(4), VectorXi::Zero(4)};
  const VectorXd uniform = batch_posterior_mean(zeros, 1.0);
  for (int i = 0; i < 4; ++i)
    REQUIRE(uniform[i] == Catch::Approx(0.25).epsilon(1e-14));

  REQUIRE_THROWS_AS(batch_posterior_mean({}, 1.0), InvalidArgument);
}

TEST_CASE("fast step: zero gradient and zero noise is a fixed point") {
  const int v = 8;
  SimplexState state = initial_simplex_state(v);
  // uniform counts make the drift vanish at the uniform state
  MinibatchCounts batch(VectorXd::Constant(v, 5.0), 2.0);
  SgmcmcConfig cfg;
  cfg.eta = 1.0;
  RngState zero(1);
  zero.set_zero_noise(true);
  const SimplexState next = sgmcmc_step_fast(state, batch, cfg, zero);
  REQUIRE((next.phi - state.phi).cwiseAbs().maxCoeff() < 1e-14);
  REQUIRE(next.step_index == 2);
}

TEST_CASE("fast step: all-positive z is returned without clipping") {
  const int v = 6;
  SimplexState state = initial_simplex_state(v);
  state.m_estimate = 1000.0;
  state.step_index = 50; // small step size keeps z strictly positive
  RngState setup(11);
  VectorXd counts(v);
  for (int i = 0; i < v; ++i) counts[i] = static_cast<double>(setup.poisson(20.0));
  MinibatchCounts batch(counts, 3.0);
  SgmcmcConfig cfg;

  RngState a(13), b(13);
  const SimplexState next = sgmcmc_step_fast(state, batch, cfg, a);

  // replay the internal draw on the same stream
  const double eps = std::pow(50.0, -cfg.step_exponent);
  const double m_new = (1.0 - eps) * state.m_estimate + eps * batch.rho * batch.n_total;
  VectorXd mean =
      state.phi.array() +
      (eps / m_new) * ((batch.rho * counts.array() + cfg.eta) -
                       (batch.rho * batch.n_total + cfg.eta * v) * state.phi.array());
  VectorXd y(v);
  for (int i = 0; i < v; ++i)
    y[i] = mean[i] + std::sqrt(2.0 * eps / m_new * state.phi[i]) * b.normal();
  const VectorXd z = y.array() + (1.0 - y.sum()) * state.phi.array();
  REQUIRE((z.array() > 0.0).all());
  REQUIRE((next.phi - z).cwiseAbs().maxCoeff() == 0.0);
  // the pre-clip draw already sits on the hyperplane
  REQUIRE(std::abs(z.sum() - 1.0) <= 1e-10);
  REQUIRE(next.m_estimate == Catch::Approx(m_new));
}

TEST_CASE("M update is a convex combination along a run") {
  const int v = 20;
  SimplexState state = initial_simplex_state(v);
  SgmcmcConfig cfg;
  RngState rng(17);
  for (int t = 0; t < 50; ++t) {
    VectorXd counts(v);
    for (int i = 0; i < v; ++i)
      counts[i] = static_cast<double>(rng.poisson(3.0));
    counts[0] += 1.0; // keep the batch nonempty
    MinibatchCounts batch(counts, 7.0);
    const double lo = std::min(state.m_estimate, batch.rho * batch.n_total);
    const double hi = std::max(state.m_estimate, batch.rho * batch.n_total);
    state = sgmcmc_step_fast(state, batch, cfg, rng);
    REQUIRE(state.m_estimate >= lo - 1e-9);
    REQUIRE(state.m_estimate <= hi + 1e-9);
    REQUIRE(std::abs(state.phi.sum() - 1.0) <= 1e-10);
    REQUIRE((state.phi.array() > 0.0).all());
  }
}

TEST_CASE("truncated normal: support, half-normal moment, degenerate window") {
  RngState rng(19);
  for (int i = 0; i < 1000; ++i) {
    const double x = truncated_normal_sample(5.0, 2.0, 4.0, 6.0, rng);
    REQUIRE(x >= 4.0);
    REQUIRE(x <= 6.0);
  }

  const int n = 100000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    acc += truncated_normal_sample(0.0, 1.0, 0.0, 1e10, rng);
  const double mean = acc / n;
  const double sd = std::sqrt(1.0 - 2.0 / M_PI);
  REQUIRE(std::abs(mean - std::sqrt(2.0 / M_PI)) <= 4.0 * sd / std::sqrt(1.0 * n));

  // effectively untruncated: agrees with plain normal draws
  std::vector<double> a(20000), b(20000);
  for (auto& x : a) x = truncated_normal_sample(0.0, 1.0, -1e10, 1e10, rng);
  for (auto& x : b) x = rng.normal();
  REQUIRE(ks_two_sample(a, b).p_value >= 0.01);

  // window far in the tail underflows to the midpoint fallback
  REQUIRE(truncated_normal_sample(0.0, 1.0, 100.0, 100.5, rng) ==
          Catch::Approx(100.25));

  REQUIRE_THROWS_AS(truncated_normal_sample(0.0, 1.0, 2.0, 1.0, rng),
                    InvalidArgument);
  REQUIRE_THROWS_AS(truncated_normal_sample(0.0, 0.0, 0.0, 1.0, rng),
                    InvalidArgument);
}

TEST_CASE("gibbs step at V = 2 matches a rejection-sampling oracle") {
  SimplexState state{VectorXd{{0.6, 0.4}}, 1.0, 1};
  MinibatchCounts batch(VectorXd{{12.0, 8.0}}, 1.0);
  SgmcmcConfig cfg;
  cfg.eta = 1.0;

  // the target of the single free coordinate
  const double eps = 1.0;
  const double m_new = batch.rho * batch.n_total; // eps = 1 replaces M
  const double mean =
      0.6 + (eps / m_new) *
                ((batch.rho * 12.0 + cfg.eta) -
                 (batch.rho * batch.n_total + cfg.eta * 2.0) * 0.6);
  const double sd = std::sqrt(2.0 * eps / m_new * 0.6 * 0.4);

  const int n = 100000;
  RngState rng(23);
  std::vector<double> gibbs(n);
  for (int i = 0; i < n; ++i)
    gibbs[i] = sgmcmc_step_gibbs(state, batch, cfg, 1, rng).phi[0];
  RngState orng(29);
  const std::vector<double> rej =
      oracle::truncated_normal_rejection(mean, sd, 0.0, 1.0, n, orng);
  const auto ks = ks_two_sample(gibbs, rej);
  INFO("ks stat " << ks.statistic << " p " << ks.p_value);
  REQUIRE(ks.p_value >= 0.01);
}

TEST_CASE("gibbs step with zero noise returns the clipped conditional mean") {
  SimplexState state{VectorXd{{0.6, 0.4}}, 1.0, 1};
  MinibatchCounts batch(VectorXd{{40.0, 0.0}}, 1.0);
  SgmcmcConfig cfg;
  RngState rng(31);
  const double m_new = batch.rho * batch.n_total;
  const double mean =
      0.6 + (1.0 / m_new) * ((batch.rho * 40.0 + cfg.eta) -
                             (batch.rho * 40.0 + cfg.eta * 2.0) * 0.6);
  const SimplexState next = sgmcmc_step_gibbs(state, batch, cfg, 3, rng, 0.0);
  REQUIRE(next.phi[0] == Catch::Approx(std::clamp(mean, 0.0, 1.0)));
  REQUIRE(next.phi.sum() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("hyperplane-form draw matches the reduced-mean law (V = 5)") {
  RngState setup(37);
  VectorXd phi(5);
  phi << 0.3, 0.25, 0.2, 0.15, 0.1;
  const double eps = 0.2, m = 50.0;
  VectorXd mean_full(5);
  for (int i = 0; i < 5; ++i) mean_full[i] = phi[i] + 0.01 * setup.normal();
  mean_full /= mean_full.sum(); // any mean on the plane

  const int n = 100000;
  RngState rng(41);
  Matrix reduced(n, 4);
  for (int i = 0; i < n; ++i) {
    const Vector z = sample_simplex_diag(mean_full, 2.0 * eps / m, phi, rng);
    reduced.row(i) = z.head(4).transpose();
  }
  const VectorXd mr = mean_full.head(4);
  const Matrix cov =
      (2.0 * eps / m) *
      (Matrix(phi.head(4).asDiagonal()) - phi.head(4) * phi.head(4).transpose());
  const auto rep = moment_match_report(reduced, mr, cov);
  INFO(rep.summary());
  REQUIRE(rep.pass);
}

TEST_CASE("desk-scale fast run approaches the batch posterior mean") {
  RngState data_rng(43);
  const int v = 500, n_docs = 5000, batch_size = 10, n_batches = 300;
  const auto corpus =
      generate_synthetic_corpus(v, n_docs, 40, 100.0, 50.0, data_rng);
  const VectorXd reference = batch_posterior_mean(corpus.docs, 1.0);
  RngState floor_rng(47);
  const double floor = residual_floor(corpus.docs, 1.0, reference, floor_rng);

  SgmcmcConfig cfg;
  cfg.eta = 1.0;
  cfg.minibatch_size = batch_size;
  const double rho = static_cast<double>(n_docs) / batch_size;

  // fixed shuffled document order derived from the seed
  std::vector<int> order(n_docs);
  std::iota(order.begin(), order.end(), 0);
  RngState shuffle_rng(51);
  for (int i = n_docs - 1; i > 0; --i) {
    const int j = static_cast<int>(shuffle_rng.next_u64() %
                                   static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }

  SimplexState state = initial_simplex_state(v);
  RngState chain_rng(53);
  const double initial = residual_error(reference, state.phi);
  double best = initial;
  for (int b = 0; b < n_batches; ++b) {
    VectorXd counts = VectorXd::Zero(v);
    for (int s = 0; s < batch_size; ++s)
      counts += corpus.docs[order[(b * batch_size + s) % n_docs]].cast<double>();
    state = sgmcmc_step_fast(state, MinibatchCounts(counts, rho), cfg, chain_rng);
    REQUIRE(std::abs(state.phi.sum() - 1.0) <= 1e-10);
    REQUIRE((state.phi.array() > 0.0).all());
    best = std::min(best, residual_error(reference, state.phi));
  }
  INFO("initial " << initial << " best " << best << " floor " << floor);
  REQUIRE(best <= 1.5 * floor);
}
