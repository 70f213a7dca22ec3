// Benchmark and validation CLI.
//
// Subcommands: bench-hyperplane, bench-structured-cov, bench-structured-prec,
// validate, sgmcmc, plot. A JSON config can seed any subcommand's options;
// explicitly passed flags override the file.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fastmvn/bench.hpp"
#include "fastmvn/plot.hpp"

using fastmvn::ExperimentConfig;

namespace {

struct CommonFlags {
  std::string config_path;
};

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fastmvn::IoError("cannot open config: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw fastmvn::ParseError(std::string("config: ") + e.what(), 1);
  }
}

// Fill cfg from the JSON file for every option the user did not pass
// explicitly on the command line.
void apply_config_file(ExperimentConfig& cfg, CLI::App* sub,
                       const std::string& path) {
  const nlohmann::json j = load_json(path);
  auto overridden = [&](const char* flag) {
    return sub->count(flag) > 0;
  };
  auto set_if = [&](const char* key, const char* flag, auto& field) {
    if (j.contains(key) && !overridden(flag))
      field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  set_if("seed", "--seed", cfg.seed);
  set_if("trials", "--trials", cfg.trials);
  set_if("samples", "--samples", cfg.samples);
  set_if("grid", "--grid", cfg.grid);
  set_if("cov", "--cov", cfg.cov_kind);
  set_if("out", "--out", cfg.out);
  set_if("paper_scale", "--paper-scale", cfg.paper_scale);
  set_if("include_amortized", "--include-amortized", cfg.include_amortized);
  set_if("k2", "--k2", cfg.k2);
  set_if("k1", "--k1", cfg.k1);
  set_if("n", "--n", cfg.n_fixed);
  set_if("sweep", "--sweep", cfg.sweep);
  if (j.contains("sgmcmc")) {
    const auto& s = j.at("sgmcmc");
    auto sset = [&](const char* key, const char* flag, auto& field) {
      if (s.contains(key) && !overridden(flag))
        field = s.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    sset("v", "--v", cfg.sg_v);
    sset("docs", "--docs", cfg.sg_docs);
    sset("batch_size", "--batch-size", cfg.sg_batch_size);
    sset("batches", "--batches", cfg.sg_batches);
    sset("spikes", "--spikes", cfg.sg_spikes);
    sset("spike_value", "--spike-value", cfg.sg_spike_value);
    sset("poisson_mean", "--poisson-mean", cfg.sg_poisson_mean);
    sset("eta", "--eta", cfg.sg_eta);
  }
}

void add_common_options(CLI::App* sub, ExperimentConfig& cfg, CommonFlags& flags) {
  sub->add_option("--seed", cfg.seed, "base seed for instances and draws");
  sub->add_option("--trials", cfg.trials, "random trials per grid point");
  sub->add_option("--samples", cfg.samples,
                  "nominal sample count a measurement refers to");
  sub->add_option("--grid", cfg.grid, "dimension grid (comma separated)")
      ->delimiter(',');
  sub->add_option("--cov", cfg.cov_kind, "covariance kind")
      ->check(CLI::IsMember({"dense", "diag"}));
  sub->add_option("--out", cfg.out, "output CSV path");
  sub->add_flag("--paper-scale", cfg.paper_scale,
                "use the full-size grids instead of desk scale");
  sub->add_option("--config", flags.config_path,
                  "JSON config file; explicit flags override");
}

void finalize_config(ExperimentConfig& cfg, CLI::App* sub,
                     const CommonFlags& flags, const std::string& experiment) {
  if (!flags.config_path.empty()) apply_config_file(cfg, sub, flags.config_path);
  if (cfg.grid.empty()) cfg.grid = fastmvn::default_grid(experiment, cfg.paper_scale);
}

void write_records(const std::vector<fastmvn::BenchRecord>& records,
                   const std::string& out) {
  const std::string csv = fastmvn::bench_records_to_csv(records);
  if (out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    fastmvn::write_text_file(out, csv);
    std::fprintf(stderr, "wrote %zu records to %s\n", records.size(), out.c_str());
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"fast samplers for hyperplane-truncated and structured MVNs"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  CommonFlags flags;

  auto* hyper = app.add_subcommand(
      "bench-hyperplane", "time the transform vs projection samplers");
  add_common_options(hyper, cfg, flags);
  hyper->add_option("--k2", cfg.k2, "number of hyperplane constraints");
  hyper->add_flag("--include-amortized", cfg.include_amortized,
                  "also time draws with per-instance setup hoisted");

  auto* scov = app.add_subcommand(
      "bench-structured-cov", "time the structured-covariance samplers");
  add_common_options(scov, cfg, flags);
  scov->add_option("--sweep", cfg.sweep, "example3 (vary k) or k2 (fix k1)")
      ->check(CLI::IsMember({"example3", "k2"}));
  scov->add_option("--k1", cfg.k1, "fixed k1 for the k2 sweep");

  auto* sprec = app.add_subcommand(
      "bench-structured-prec", "time the structured-precision samplers");
  add_common_options(sprec, cfg, flags);
  sprec->add_option("--n", cfg.n_fixed, "fixed sample size n");

  auto* val = app.add_subcommand(
      "validate", "statistical battery comparing fast and baseline samplers");
  add_common_options(val, cfg, flags);
  val->add_flag("--corrupt-fast", cfg.corrupt,
                "test hook: perturb one sampler so the battery fails");

  auto* sg = app.add_subcommand(
      "sgmcmc", "simplex SG-MCMC residual traces vs the batch posterior mean");
  add_common_options(sg, cfg, flags);
  sg->add_option("--v", cfg.sg_v, "vocabulary dimension");
  sg->add_option("--docs", cfg.sg_docs, "number of documents");
  sg->add_option("--batch-size", cfg.sg_batch_size, "documents per mini-batch");
  sg->add_option("--batches", cfg.sg_batches, "mini-batches to process");
  sg->add_option("--spikes", cfg.sg_spikes, "spiked coordinates");
  sg->add_option("--spike-value", cfg.sg_spike_value, "spike magnitude");
  sg->add_option("--poisson-mean", cfg.sg_poisson_mean, "trials per document");
  sg->add_option("--eta", cfg.sg_eta, "Dirichlet concentration");

  auto* plot = app.add_subcommand("plot", "render a result CSV as an SVG chart");
  std::string plot_csv, plot_svg;
  plot->add_option("csv", plot_csv, "input CSV")->required();
  plot->add_option("svg", plot_svg, "output SVG")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (hyper->parsed()) {
      finalize_config(cfg, hyper, flags, "bench-hyperplane");
      write_records(fastmvn::run_bench_hyperplane(cfg), cfg.out);
    } else if (scov->parsed()) {
      finalize_config(cfg, scov, flags, "bench-structured-cov");
      if (cfg.sweep == "k2" && !scov->count("--grid") && !cfg.paper_scale &&
          flags.config_path.empty())
        cfg.grid = {10, 50, 250, 1000};
      write_records(fastmvn::run_bench_structured_cov(cfg), cfg.out);
    } else if (sprec->parsed()) {
      finalize_config(cfg, sprec, flags, "bench-structured-prec");
      write_records(fastmvn::run_bench_structured_prec(cfg), cfg.out);
    } else if (val->parsed()) {
      if (!val->count("--samples")) cfg.samples = 50000;
      if (!flags.config_path.empty()) apply_config_file(cfg, val, flags.config_path);
      const auto report = fastmvn::run_validate(cfg);
      for (const auto& check : report.checks)
        std::printf("%-28s %s  %s\n", check.name.c_str(),
                    check.pass ? "pass" : "FAIL", check.detail.c_str());
      if (!report.all_pass()) {
        std::fprintf(stderr, "validation failed\n");
        return 1;
      }
      std::printf("all sampler pairs match\n");
    } else if (sg->parsed()) {
      if (!flags.config_path.empty()) apply_config_file(cfg, sg, flags.config_path);
      const auto result = fastmvn::run_sgmcmc(cfg);
      const std::string csv = fastmvn::sgmcmc_rows_to_csv(result);
      if (cfg.out.empty()) {
        std::fputs(csv.c_str(), stdout);
      } else {
        fastmvn::write_text_file(cfg.out, csv);
        std::fprintf(stderr, "wrote %zu rows to %s (floor %.4g)\n",
                     result.rows.size(), cfg.out.c_str(), result.floor);
      }
    } else if (plot->parsed()) {
      fastmvn::plot_csv_file(plot_csv, plot_svg);
      std::fprintf(stderr, "wrote %s\n", plot_svg.c_str());
    }
  } catch (const fastmvn::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
