#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "fastmvn/bench.hpp"
#include "fastmvn/plot.hpp"

using namespace fastmvn;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ExperimentConfig tiny_hyperplane_cfg() {
  ExperimentConfig cfg;
  cfg.grid = {40, 80};
  cfg.k2 = 10;
  cfg.trials = 2;
  cfg.samples = 100;
  cfg.seed = 11;
  return cfg;
}

} // namespace

TEST_CASE("hyperplane sweep row count and schema") {
  const auto records = run_bench_hyperplane(tiny_hyperplane_cfg());
  // 2 algorithms x 2 grid points x 2 trials
  REQUIRE(records.size() == 8);
  for (const auto& r : records) {
    REQUIRE(r.wall_time_ms > 0.0);
    REQUIRE(r.n_samples == 100);
    REQUIRE(r.k.has_value());
    REQUIRE(r.k2.has_value());
    REQUIRE_FALSE(r.p.has_value());
  }
  const std::string csv = bench_records_to_csv(records);
  REQUIRE(csv.rfind("experiment,algorithm,k,k1,k2,n,p,trial,seed,n_samples,"
                    "wall_time_ms,cov_kind\n", 0) == 0);
  // inapplicable dimensions (k1, n, p here) stay empty
  REQUIRE(csv.find(",,10,,,") != std::string::npos);

  const CsvTable table = parse_csv(csv);
  REQUIRE(table.rows.size() == 8);
  REQUIRE(table.header.size() == 12);
}

TEST_CASE("instance generation is a pure function of the seed") {
  const ExperimentConfig cfg = tiny_hyperplane_cfg();
  const auto a = run_bench_hyperplane(cfg);
  const auto b = run_bench_hyperplane(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].seed == b[i].seed);
    REQUIRE(a[i].algorithm == b[i].algorithm);
  }
  // the instances themselves are bit-identical across runs
  RngState r1(a.front().seed), r2(a.front().seed);
  const auto inst1 = hyperplane_instance(40, 10, true, r1);
  const auto inst2 = hyperplane_instance(40, 10, true, r2);
  REQUIRE((inst1.second.g() - inst2.second.g()).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((inst1.first.mean - inst2.first.mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("empty grid is a usage error") {
  ExperimentConfig cfg;
  cfg.grid = {};
  REQUIRE_THROWS_AS(run_bench_structured_prec(cfg), InvalidArgument);
  REQUIRE_THROWS_AS(run_bench_hyperplane(cfg), InvalidArgument);
}

TEST_CASE("single-point config yields one row per algorithm and trial") {
  ExperimentConfig cfg;
  cfg.sweep = "k2";
  cfg.k1 = 60;
  cfg.grid = {12};
  cfg.trials = 2;
  cfg.samples = 100;
  cfg.seed = 13;
  const auto records = run_bench_structured_cov(cfg);
  REQUIRE(records.size() == 4); // 2 algorithms x 1 point x 2 trials
  for (const auto& r : records) {
    REQUIRE(*r.k1 == 60);
    REQUIRE(*r.k2 == 12);
  }
}

TEST_CASE("amortized variants appear on request") {
  ExperimentConfig cfg = tiny_hyperplane_cfg();
  cfg.grid = {40};
  cfg.include_amortized = true;
  const auto records = run_bench_hyperplane(cfg);
  int amortized = 0;
  for (const auto& r : records)
    amortized += r.algorithm.find("amortized") != std::string::npos;
  REQUIRE(amortized == 2 * cfg.trials);
}

TEST_CASE("random orthogonal factor is orthogonal") {
  RngState rng(3);
  const Matrix q = bench_detail::random_orthogonal(30, rng);
  REQUIRE((q.transpose() * q - Matrix::Identity(30, 30)).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("structured instances are valid and correlated") {
  for (int seed = 0; seed < 5; ++seed) {
    RngState rng(seed);
    const StructuredCovSpec spec = structured_cov_instance(30, 6, rng);
    REQUIRE(spec.s12().cwiseAbs().maxCoeff() > 0.0);
    const Example3Instance inst = example3_instance(50, rng);
    REQUIRE(inst.phi1.sum() < 1.0);
    REQUIRE((inst.phi1.array() > 0.0).all());
  }
}

TEST_CASE("log-log slope fit recovers known exponents") {
  std::vector<BenchRecord> records;
  for (const long k : {250L, 500L, 1000L, 2000L, 4000L}) {
    for (int trial = 0; trial < 3; ++trial) {
      BenchRecord fast;
      fast.algorithm = "fast";
      fast.k = k;
      fast.trial = trial;
      fast.wall_time_ms = 0.01 * static_cast<double>(k); // slope 1
      records.push_back(fast);
      BenchRecord naive;
      naive.algorithm = "naive";
      naive.k = k;
      naive.trial = trial;
      naive.wall_time_ms =
          1e-6 * std::pow(static_cast<double>(k), 3.0); // slope 3
      records.push_back(naive);
    }
  }
  auto x_of = [](const BenchRecord& r) { return *r.k; };
  REQUIRE(loglog_slope_top_decade(records, "fast", x_of) ==
          Catch::Approx(1.0).margin(1e-9));
  REQUIRE(loglog_slope_top_decade(records, "naive", x_of) ==
          Catch::Approx(3.0).margin(1e-9));
}

TEST_CASE("sgmcmc runner: series shape and the zero-batch edge") {
  ExperimentConfig cfg;
  cfg.seed = 5;
  cfg.sg_v = 40;
  cfg.sg_docs = 100;
  cfg.sg_batch_size = 10;
  cfg.sg_batches = 15;
  cfg.sg_spikes = 5;
  const SgmcmcResult result = run_sgmcmc(cfg);
  // 4 methods plus the flat floor series
  REQUIRE(result.rows.size() == 5u * 15u);
  REQUIRE(result.floor > 0.0);
  double prev_cum = 0.0;
  for (const auto& row : result.rows) {
    if (row.algorithm != "fast") continue;
    REQUIRE(row.cum_wall_time_ms >= prev_cum);
    prev_cum = row.cum_wall_time_ms;
    REQUIRE(row.residual >= 0.0);
  }

  cfg.sg_batches = 0;
  const SgmcmcResult empty = run_sgmcmc(cfg);
  REQUIRE(empty.rows.empty());
  REQUIRE(sgmcmc_rows_to_csv(empty) == std::string(kSgmcmcCsvHeader) + "\n");
}

TEST_CASE("validate battery passes clean and fails when corrupted") {
  ExperimentConfig cfg;
  cfg.trials = 1;
  cfg.samples = 30000;
  cfg.seed = 9;
  const ValidateReport clean = run_validate(cfg);
  REQUIRE(clean.checks.size() == 3);
  for (const auto& c : clean.checks) {
    INFO(c.name << ": " << c.detail);
    REQUIRE(c.pass);
  }
  cfg.corrupt = true;
  REQUIRE_FALSE(run_validate(cfg).all_pass());
}

TEST_CASE("validate report is identical for a pinned seed") {
  ExperimentConfig cfg;
  cfg.trials = 1;
  cfg.samples = 5000; // the content only needs to match itself
  cfg.seed = 21;
  const ValidateReport a = run_validate(cfg);
  const ValidateReport b = run_validate(cfg);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    REQUIRE(a.checks[i].detail == b.checks[i].detail);
    REQUIRE(a.checks[i].pass == b.checks[i].pass);
  }
}

TEST_CASE("csv parser flags malformed rows with their line number") {
  const std::string bad = std::string(kBenchCsvHeader) +
                          "\nhyperplane,project,50,,20,,,0,1,100,1.5,diag\n"
                          "hyperplane,project,50,20\n";
  try {
    parse_csv(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.line() == 3);
  }

  const std::string bad_number =
      std::string(kBenchCsvHeader) +
      "\nhyperplane,project,oops,,20,,,0,1,100,1.5,diag\n";
  try {
    (void)render_csv_plot(bad_number);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.line() == 2);
  }
}

TEST_CASE("two-point series renders a straight two-point polyline") {
  const std::string csv = std::string(kBenchCsvHeader) +
                          "\nexample3,fast,100,,,,,0,1,100,1,diag\n"
                          "example3,fast,1000,,,,,0,1,100,10,diag\n";
  const std::string svg = render_csv_plot(csv);
  REQUIRE(svg.find("<polyline") != std::string::npos);
  REQUIRE(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\"") !=
          std::string::npos);
}

TEST_CASE("golden SVG for a pinned timing CSV") {
  const std::string dir = FASTMVN_TEST_DATA_DIR;
  const std::string csv = read_file(dir + "/pinned_timing.csv");
  const std::string svg = render_csv_plot(csv);
  const std::string golden = read_file(dir + "/golden_timing.svg");
  REQUIRE(svg == golden);
}
