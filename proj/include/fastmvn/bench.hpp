// Benchmark harness: random instance recipes, per-sample timing, and the
// sweep drivers behind the CLI subcommands. Timings use a monotonic clock
// and report the median of three repetitions; expensive per-draw algorithms
// are timed on fewer draws and scaled to the nominal sample count, so a
// record's wall_time_ms is always "time to produce n_samples draws at the
// measured per-sample rate".
#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fastmvn/hyperplane.hpp"
#include "fastmvn/mvn.hpp"
#include "fastmvn/rng.hpp"
#include "fastmvn/sgmcmc.hpp"
#include "fastmvn/structured.hpp"
#include "fastmvn/validate.hpp"

namespace fastmvn {

/// One timing measurement row. Dimension fields that do not apply to the
/// experiment stay unset and serialize as empty CSV fields.
struct BenchRecord {
  std::string experiment;
  std::string algorithm;
  std::optional<long> k, k1, k2, n, p;
  int trial = 0;
  std::uint64_t seed = 0;
  long n_samples = 0;
  double wall_time_ms = 0.0;
  std::string cov_kind; // dense | diag
};

inline const char* kBenchCsvHeader =
    "experiment,algorithm,k,k1,k2,n,p,trial,seed,n_samples,wall_time_ms,cov_kind";

namespace detail {

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

inline std::string opt_field(const std::optional<long>& v) {
  return v ? std::to_string(*v) : std::string();
}

} // namespace detail

inline std::string bench_records_to_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream out;
  out << kBenchCsvHeader << "\n";
  for (const auto& r : records) {
    out << r.experiment << ',' << r.algorithm << ',' << detail::opt_field(r.k)
        << ',' << detail::opt_field(r.k1) << ',' << detail::opt_field(r.k2)
        << ',' << detail::opt_field(r.n) << ',' << detail::opt_field(r.p) << ','
        << r.trial << ',' << r.seed << ',' << r.n_samples << ','
        << detail::format_double(r.wall_time_ms) << ',' << r.cov_kind << "\n";
  }
  return out.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << text;
  if (!f) throw IoError("write failed: " + path);
}

/// Shared knobs for every subcommand; JSON config fills it first, explicit
/// CLI flags override.
struct ExperimentConfig {
  std::vector<long> grid;
  int trials = 5;
  long samples = 10000;
  std::uint64_t seed = 1;
  std::string cov_kind = "diag";
  std::string out;
  bool paper_scale = false;
  bool include_amortized = false;
  long k2 = 20;      // hyperplane: constraint count
  long k1 = 1000;    // structured-cov sweep: fixed k1
  long n_fixed = 500; // structured-prec sweep: fixed n
  std::string sweep = "example3"; // structured-cov: example3 | k2

  // sgmcmc experiment
  int sg_v = 500;
  int sg_docs = 5000;
  int sg_batch_size = 10;
  int sg_batches = 300;
  int sg_spikes = 40;
  double sg_spike_value = 100.0;
  double sg_poisson_mean = 50.0;
  double sg_eta = 1.0;

  // test hook for the validate subcommand: perturb one sampler so the
  // battery must fail
  bool corrupt = false;
};

namespace bench_detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point t0, Clock::time_point t1) {
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

// Median wall time of `reps` measured blocks, scaled to nominal_n draws.
// The block size adapts so one block costs at most ~block_cap_ms.
template <class DrawFn>
double measure_ms_per_nominal(DrawFn&& draw, long nominal_n,
                              double block_cap_ms = 300.0, int reps = 3) {
  long n_timed = 1;
  double block = 0.0;
  for (;;) {
    const auto t0 = Clock::now();
    for (long i = 0; i < n_timed; ++i) draw();
    block = elapsed_ms(t0, Clock::now());
    if (block >= 1.0 || n_timed >= nominal_n) break;
    n_timed = std::min(nominal_n, n_timed * 8);
  }
  const double per_draw = std::max(block / static_cast<double>(n_timed), 1e-9);
  n_timed = std::clamp(static_cast<long>(block_cap_ms / per_draw), 1L, nominal_n);
  std::vector<double> per_sample(static_cast<std::size_t>(reps));
  for (auto& rep : per_sample) {
    const auto t0 = Clock::now();
    for (long i = 0; i < n_timed; ++i) draw();
    rep = elapsed_ms(t0, Clock::now()) / static_cast<double>(n_timed);
  }
  std::sort(per_sample.begin(), per_sample.end());
  const double median = per_sample[per_sample.size() / 2];
  return std::max(median, 1e-9) * static_cast<double>(nominal_n);
}

inline std::uint64_t instance_seed(const ExperimentConfig& cfg, int salt,
                                   long point, int trial) {
  return derive_seed(derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(salt)),
                                 static_cast<std::uint64_t>(point)),
                     static_cast<std::uint64_t>(trial));
}

inline Matrix randn(Index rows, Index cols, RngState& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

inline Vector unit_shifted_uniform(Index n, RngState& rng) {
  Vector d(n);
  for (Index i = 0; i < n; ++i) d[i] = 0.05 + rng.uniform();
  return d;
}

// Random orthogonal matrix: QR of a standard-normal matrix with the sign
// convention fixed by the diagonal of R, deterministic per stream.
inline Matrix random_orthogonal(Index n, RngState& rng) {
  const Matrix g = randn(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

} // namespace bench_detail

/// Random hyperplane-truncated instance: mu, r, G standard normal entries
/// (rank checked); Sigma either diag(0.05 + u) or U^T diag(0.05 + u) U with
/// U random orthogonal. A pure function of the stream.
inline std::pair<GaussianSpec, HyperplaneConstraint>
hyperplane_instance(long k, long k2, bool diagonal, RngState& rng) {
  using namespace bench_detail;
  const Vector mu = randn(k, 1, rng);
  CovarianceModel cov = [&] {
    const Vector d = unit_shifted_uniform(k, rng);
    if (diagonal) return CovarianceModel::diagonal(d);
    const Matrix u = random_orthogonal(k, rng);
    return CovarianceModel::dense(
        Matrix(u.transpose() * d.asDiagonal() * u));
  }();
  Matrix g = randn(k2, k, rng);
  Vector r = randn(k2, 1, rng);
  return {GaussianSpec(mu, std::move(cov)),
          HyperplaneConstraint(std::move(g), std::move(r))};
}

/// Random structured-covariance instance with diagonal S11 and S22 and a
/// dense S12 rescaled to keep the assembled joint SPD with margin.
inline StructuredCovSpec structured_cov_instance(long k1, long k2, RngState& rng) {
  using namespace bench_detail;
  const Vector d11 = unit_shifted_uniform(k1, rng);
  const Vector d22 = unit_shifted_uniform(k2, rng);
  Matrix s12 = randn(k1, k2, rng);
  const Matrix m = s12.transpose() * (d11.cwiseInverse().asDiagonal() * s12);
  const double cross_bound = m.norm(); // Frobenius bounds the spectral norm
  if (cross_bound > 0.0)
    s12 *= std::sqrt(0.5 * d22.minCoeff() / cross_bound);
  return StructuredCovSpec(randn(k1, 1, rng), CovarianceModel::diagonal(d11),
                           std::move(s12), CovarianceModel::diagonal(d22));
}

/// Random structured-precision instance with diagonal A and Omega.
inline StructuredPrecSpec structured_prec_instance(long p, long n, RngState& rng) {
  using namespace bench_detail;
  return StructuredPrecSpec(randn(p, 1, rng),
                            CovarianceModel::diagonal(unit_shifted_uniform(p, rng)),
                            randn(n, p, rng),
                            CovarianceModel::diagonal(unit_shifted_uniform(n, rng)));
}

/// Example-3 instance: phi ~ Dirichlet(1, ..., 1) over k cells, uniform mean,
/// a = 0.5. Returns (mu1, a, phi1) plus the equivalent structured spec for
/// the naive baseline.
struct Example3Instance {
  Vector mu1;
  double a = 0.5;
  Vector phi1;
  StructuredCovSpec naive_spec;
};

inline Example3Instance example3_instance(long k, RngState& rng) {
  const Vector phi = rng.dirichlet(Vector::Ones(k));
  const Vector phi1 = phi.head(k - 1);
  const Vector mu1 = Vector::Constant(k - 1, 1.0 / static_cast<double>(k));
  const double a = 0.5;
  StructuredCovSpec spec(mu1, CovarianceModel::diagonal(Vector(a * phi1)),
                         Matrix(a * phi1),
                         CovarianceModel::diagonal(Vector{{a}}));
  return {mu1, a, phi1, std::move(spec)};
}

inline std::vector<long> default_grid(const std::string& experiment,
                                      bool paper_scale) {
  if (experiment == "bench-hyperplane")
    return paper_scale ? std::vector<long>{50, 200, 1000, 2000, 5000}
                       : std::vector<long>{50, 200, 1000};
  if (experiment == "bench-structured-cov")
    return paper_scale ? std::vector<long>{100, 1000, 4000, 10000}
                       : std::vector<long>{250, 500, 1000, 2000, 4000};
  if (experiment == "bench-structured-prec")
    return paper_scale ? std::vector<long>{500, 1000, 2000, 4000, 8000}
                       : std::vector<long>{500, 1000, 2000, 4000};
  return {};
}

/// Timing sweep over (k, trial) comparing the transform sampler against the
/// projection sampler; under paper scale the constraint count also sweeps
/// fractions of k.
inline std::vector<BenchRecord> run_bench_hyperplane(const ExperimentConfig& cfg) {
  using namespace bench_detail;
  if (cfg.grid.empty()) throw InvalidArgument("bench-hyperplane: empty grid");
  if (cfg.trials < 1) throw InvalidArgument("bench-hyperplane: trials must be >= 1");
  const bool diagonal = cfg.cov_kind != "dense";

  std::vector<std::pair<long, long>> points; // (k, k2)
  for (const long k : cfg.grid) {
    if (k <= cfg.k2)
      throw InvalidArgument("bench-hyperplane: grid point must exceed k2");
    points.emplace_back(k, cfg.k2);
    if (cfg.paper_scale)
      for (const double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const long kk2 = std::max<long>(1, static_cast<long>(frac * k));
        if (kk2 < k) points.emplace_back(k, kk2);
      }
  }

  std::vector<BenchRecord> records;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const auto [k, k2] = points[pi];
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const std::uint64_t iseed = instance_seed(cfg, 1, static_cast<long>(pi), trial);
      RngState inst_rng(iseed);
      const auto [spec, constraint] = hyperplane_instance(k, k2, diagonal, inst_rng);
      RngState draw_rng = RngState::derived(iseed, 99);

      auto record = [&](const std::string& algorithm, double ms) {
        BenchRecord r;
        r.experiment = "hyperplane";
        r.algorithm = algorithm;
        r.k = k;
        r.k2 = k2;
        r.trial = trial;
        r.seed = iseed;
        r.n_samples = cfg.samples;
        r.wall_time_ms = ms;
        r.cov_kind = diagonal ? "diag" : "dense";
        records.push_back(std::move(r));
      };

      record("transform", measure_ms_per_nominal(
                              [&] { (void)sample_naive(spec, constraint, draw_rng); },
                              cfg.samples));
      record("project", measure_ms_per_nominal(
                            [&] { (void)sample_fast(spec, constraint, draw_rng); },
                            cfg.samples));
      if (cfg.include_amortized) {
        const TransformCache cache(spec, constraint);
        record("transform-amortized",
               measure_ms_per_nominal([&] { (void)cache.draw(draw_rng); },
                                      cfg.samples));
        const auto proj = detail::make_projection(spec.cov, constraint);
        record("project-amortized",
               measure_ms_per_nominal(
                   [&] {
                     (void)detail::apply_projection(proj, constraint,
                                                    sample_mvn(spec, draw_rng));
                   },
                   cfg.samples));
      }
    }
  }
  return records;
}

/// Structured-covariance sweeps. sweep == "example3": vary k at the
/// simplex-derived instance; sweep == "k2": fix k1 and vary the low-rank
/// block size.
inline std::vector<BenchRecord> run_bench_structured_cov(const ExperimentConfig& cfg) {
  using namespace bench_detail;
  if (cfg.grid.empty()) throw InvalidArgument("bench-structured-cov: empty grid");
  if (cfg.trials < 1)
    throw InvalidArgument("bench-structured-cov: trials must be >= 1");
  std::vector<BenchRecord> records;

  for (std::size_t pi = 0; pi < cfg.grid.size(); ++pi) {
    const long x = cfg.grid[pi];
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const std::uint64_t iseed = instance_seed(cfg, 2, static_cast<long>(pi), trial);
      RngState inst_rng(iseed);
      RngState draw_rng = RngState::derived(iseed, 99);

      auto push = [&](const std::string& algorithm, long k, long k1v, long k2v,
                      double ms, const char* experiment) {
        BenchRecord r;
        r.experiment = experiment;
        r.algorithm = algorithm;
        if (k > 0) r.k = k;
        if (k1v > 0) r.k1 = k1v;
        if (k2v > 0) r.k2 = k2v;
        r.trial = trial;
        r.seed = iseed;
        r.n_samples = cfg.samples;
        r.wall_time_ms = ms;
        r.cov_kind = "diag";
        records.push_back(std::move(r));
      };

      if (cfg.sweep == "example3") {
        if (x < 3) throw InvalidArgument("example3 sweep: need k >= 3");
        const Example3Instance inst = example3_instance(x, inst_rng);
        push("fast", x, 0, 0,
             measure_ms_per_nominal(
                 [&] { (void)sample_example3(inst.mu1, inst.a, inst.phi1, draw_rng); },
                 cfg.samples),
             "example3");
        push("naive", x, 0, 0,
             measure_ms_per_nominal(
                 [&] { (void)sample_structured_cov_naive(inst.naive_spec, draw_rng); },
                 cfg.samples),
             "example3");
      } else if (cfg.sweep == "k2") {
        if (x < 1) throw InvalidArgument("k2 sweep: need k2 >= 1");
        const StructuredCovSpec spec = structured_cov_instance(cfg.k1, x, inst_rng);
        push("fast", 0, cfg.k1, x,
             measure_ms_per_nominal(
                 [&] { (void)sample_structured_cov(spec, draw_rng); }, cfg.samples),
             "structured-cov");
        push("naive", 0, cfg.k1, x,
             measure_ms_per_nominal(
                 [&] { (void)sample_structured_cov_naive(spec, draw_rng); },
                 cfg.samples),
             "structured-cov");
      } else {
        throw InvalidArgument("bench-structured-cov: unknown sweep " + cfg.sweep);
      }
    }
  }
  return records;
}

/// Structured-precision sweep: fix n, vary p, diagonal A and Omega.
inline std::vector<BenchRecord> run_bench_structured_prec(const ExperimentConfig& cfg) {
  using namespace bench_detail;
  if (cfg.grid.empty()) throw InvalidArgument("bench-structured-prec: empty grid");
  if (cfg.trials < 1)
    throw InvalidArgument("bench-structured-prec: trials must be >= 1");
  std::vector<BenchRecord> records;
  for (std::size_t pi = 0; pi < cfg.grid.size(); ++pi) {
    const long p = cfg.grid[pi];
    if (p < 1) throw InvalidArgument("bench-structured-prec: need p >= 1");
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const std::uint64_t iseed = instance_seed(cfg, 4, static_cast<long>(pi), trial);
      RngState inst_rng(iseed);
      RngState draw_rng = RngState::derived(iseed, 99);
      const StructuredPrecSpec spec =
          structured_prec_instance(p, cfg.n_fixed, inst_rng);

      auto push = [&](const std::string& algorithm, double ms) {
        BenchRecord r;
        r.experiment = "structured-prec";
        r.algorithm = algorithm;
        r.n = cfg.n_fixed;
        r.p = p;
        r.trial = trial;
        r.seed = iseed;
        r.n_samples = cfg.samples;
        r.wall_time_ms = ms;
        r.cov_kind = "diag";
        records.push_back(std::move(r));
      };
      push("fast", measure_ms_per_nominal(
                       [&] { (void)sample_structured_prec(spec, draw_rng); },
                       cfg.samples));
      push("naive", measure_ms_per_nominal(
                        [&] { (void)sample_structured_prec_naive(spec, draw_rng); },
                        cfg.samples));
    }
  }
  return records;
}

/// Least-squares slope of log10(y) against log10(x) over the top decade of
/// the grid (x >= max/10), with y the median across trials at each x.
inline double loglog_slope_top_decade(const std::vector<BenchRecord>& records,
                                      const std::string& algorithm,
                                      std::function<long(const BenchRecord&)> x_of) {
  std::vector<std::pair<long, std::vector<double>>> groups;
  long xmax = 0;
  for (const auto& r : records) {
    if (r.algorithm != algorithm) continue;
    const long x = x_of(r);
    xmax = std::max(xmax, x);
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == x; });
    if (it == groups.end()) {
      groups.push_back({x, {r.wall_time_ms}});
    } else {
      it->second.push_back(r.wall_time_ms);
    }
  }
  std::vector<double> xs, ys;
  for (auto& [x, times] : groups) {
    if (x * 10 < xmax) continue; // top decade only
    std::sort(times.begin(), times.end());
    xs.push_back(std::log10(static_cast<double>(x)));
    ys.push_back(std::log10(times[times.size() / 2]));
  }
  if (xs.size() < 2)
    throw InvalidArgument("loglog_slope_top_decade: need two grid points");
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

inline double median_wall_time(const std::vector<BenchRecord>& records,
                               const std::string& algorithm,
                               std::function<bool(const BenchRecord&)> pred) {
  std::vector<double> times;
  for (const auto& r : records)
    if (r.algorithm == algorithm && pred(r)) times.push_back(r.wall_time_ms);
  if (times.empty()) throw InvalidArgument("median_wall_time: no records");
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

// ---------------------------------------------------------------------------
// SG-MCMC experiment
// ---------------------------------------------------------------------------

/// One point of a residual trace. step_wall_time_ms covers only the sampler
/// step, not data handling.
struct SgmcmcSeriesRow {
  std::string algorithm;
  int minibatch = 0;
  double cum_wall_time_ms = 0.0;
  double step_wall_time_ms = 0.0;
  double residual = 0.0;
};

struct SgmcmcResult {
  std::vector<SgmcmcSeriesRow> rows;
  double floor = 0.0; // mean residual of exact posterior draws
  std::uint64_t seed = 0;
};

inline const char* kSgmcmcCsvHeader =
    "experiment,algorithm,minibatch,cum_wall_time_ms,step_wall_time_ms,residual,seed";

inline std::string sgmcmc_rows_to_csv(const SgmcmcResult& result) {
  std::ostringstream out;
  out << kSgmcmcCsvHeader << "\n";
  for (const auto& r : result.rows) {
    out << "sgmcmc," << r.algorithm << ',' << r.minibatch << ','
        << detail::format_double(r.cum_wall_time_ms) << ','
        << detail::format_double(r.step_wall_time_ms) << ','
        << detail::format_double(r.residual) << ',' << result.seed << "\n";
  }
  return out.str();
}

/// Residual traces for the fast step and Gibbs baselines with 1, 5, and 10
/// sweeps per mini-batch, against the batch posterior mean of one synthetic
/// corpus; also emits the posterior-draw noise floor as a flat series. All
/// methods consume the same shuffled document order.
inline SgmcmcResult run_sgmcmc(const ExperimentConfig& cfg) {
  using namespace bench_detail;
  if (cfg.sg_batches < 0) throw InvalidArgument("sgmcmc: negative batch count");

  RngState data_rng = RngState::derived(cfg.seed, 5);
  const SyntheticCorpus corpus =
      generate_synthetic_corpus(cfg.sg_v, cfg.sg_docs, cfg.sg_spikes,
                                cfg.sg_spike_value, cfg.sg_poisson_mean, data_rng);
  const Eigen::VectorXd reference = batch_posterior_mean(corpus.docs, cfg.sg_eta);

  RngState floor_rng = RngState::derived(cfg.seed, 6);
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(cfg.sg_v, cfg.sg_eta);
  for (const auto& d : corpus.docs) alpha += d.cast<double>();
  double floor_acc = 0.0;
  for (int i = 0; i < 200; ++i)
    floor_acc += residual_error(reference, floor_rng.dirichlet(alpha));

  SgmcmcResult result;
  result.floor = floor_acc / 200.0;
  result.seed = cfg.seed;

  // document order: reshuffled at every epoch boundary, derived from the seed
  const int n_docs = cfg.sg_docs;
  std::vector<int> order(static_cast<std::size_t>(n_docs));
  auto reshuffle = [&](int epoch) {
    std::iota(order.begin(), order.end(), 0);
    RngState shuffle_rng = RngState::derived(cfg.seed, 7 + static_cast<std::uint64_t>(epoch));
    for (int i = n_docs - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.next_u64() %
                                     static_cast<std::uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }
  };

  SgmcmcConfig step_cfg;
  step_cfg.eta = cfg.sg_eta;
  step_cfg.minibatch_size = cfg.sg_batch_size;
  step_cfg.seed = cfg.seed;
  const double rho = static_cast<double>(n_docs) / cfg.sg_batch_size;

  const std::vector<std::pair<std::string, int>> methods = {
      {"fast", 0}, {"gibbs-1", 1}, {"gibbs-5", 5}, {"gibbs-10", 10}};
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const auto& [name, sweeps] = methods[mi];
    SimplexState state = initial_simplex_state(cfg.sg_v);
    RngState chain_rng = RngState::derived(cfg.seed, 100 + mi);
    double cum_ms = 0.0;
    int epoch = -1;
    for (int b = 0; b < cfg.sg_batches; ++b) {
      const long start = static_cast<long>(b) * cfg.sg_batch_size;
      if (start / n_docs != epoch) {
        epoch = static_cast<int>(start / n_docs);
        reshuffle(epoch);
      }
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(cfg.sg_v);
      for (int s = 0; s < cfg.sg_batch_size; ++s)
        counts += corpus.docs[order[static_cast<std::size_t>((start + s) % n_docs)]]
                      .cast<double>();
      const MinibatchCounts batch(std::move(counts), rho);
      const auto t0 = Clock::now();
      state = sweeps == 0
                  ? sgmcmc_step_fast(state, batch, step_cfg, chain_rng)
                  : sgmcmc_step_gibbs(state, batch, step_cfg, sweeps, chain_rng);
      const double step_ms = elapsed_ms(t0, Clock::now());
      cum_ms += step_ms;
      result.rows.push_back({name, b + 1, cum_ms, step_ms,
                             residual_error(reference, state.phi)});
    }
  }
  for (int b = 0; b < cfg.sg_batches; ++b)
    result.rows.push_back({"batch-floor", b + 1, 0.0, 0.0, result.floor});
  return result;
}

// ---------------------------------------------------------------------------
// Validation battery
// ---------------------------------------------------------------------------

struct ValidateCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidateReport {
  std::vector<ValidateCheck> checks;
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const ValidateCheck& c) { return c.pass; });
  }
};

/// Moment/KS battery over random trials per sampler pair. cfg.corrupt is the
/// test hook that perturbs one side so the battery must fail.
inline ValidateReport run_validate(const ExperimentConfig& cfg) {
  using namespace bench_detail;
  if (cfg.trials < 1) throw InvalidArgument("validate: trials must be >= 1");
  const long n = std::max<long>(cfg.samples, 2000);
  const double corrupt_scale = cfg.corrupt ? 1.05 : 1.0;
  ValidateReport report;

  auto add_pair_check = [&](const std::string& name, int trial, const Matrix& a,
                            const Matrix& b) {
    const Matrix scaled_a = corrupt_scale * a;
    const auto moments = moment_match_two_sample(scaled_a, b);
    const auto ks = ks_battery(scaled_a, b, 0.01);
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "trial %d: %s; ks min p=%.4g (dim %d, threshold %.2g)", trial,
                  moments.summary().c_str(), ks.min_p, ks.worst_dim,
                  ks.bonferroni_threshold);
    report.checks.push_back(
        {name + "/trial" + std::to_string(trial), moments.pass && ks.pass, detail});
  };

  for (int trial = 0; trial < cfg.trials; ++trial) {
    // hyperplane: transform vs projection
    {
      RngState rng(instance_seed(cfg, 11, 0, trial));
      const auto [spec, constraint] =
          hyperplane_instance(30, 5, trial % 2 == 0, rng);
      RngState r1 = RngState::derived(rng.next_u64(), 1);
      RngState r2 = RngState::derived(r1.next_u64(), 2);
      add_pair_check("hyperplane", trial,
                     sample_naive_many(spec, constraint, n, r1),
                     sample_fast_many(spec, constraint, n, r2));
    }
    // structured covariance: fast vs naive
    {
      RngState rng(instance_seed(cfg, 12, 0, trial));
      const StructuredCovSpec spec = structured_cov_instance(40, 8, rng);
      RngState r1 = RngState::derived(rng.next_u64(), 1);
      RngState r2 = RngState::derived(r1.next_u64(), 2);
      add_pair_check("structured-cov", trial,
                     sample_structured_cov_many(spec, n, r1),
                     sample_structured_cov_naive_many(spec, n, r2));
    }
    // structured precision: fast vs naive
    {
      RngState rng(instance_seed(cfg, 13, 0, trial));
      const StructuredPrecSpec spec = structured_prec_instance(40, 15, rng);
      RngState r1 = RngState::derived(rng.next_u64(), 1);
      RngState r2 = RngState::derived(r1.next_u64(), 2);
      add_pair_check("structured-prec", trial,
                     sample_structured_prec_many(spec, n, r1),
                     sample_structured_prec_naive_many(spec, n, r2));
    }
  }
  return report;
}

} // namespace fastmvn
