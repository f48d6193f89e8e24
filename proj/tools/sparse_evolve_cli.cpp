// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

// sparse-evolve: train, sweep, report, flops and eval subcommands.
// Exit codes: 0 ok, 2 config error, 3 diverged run, 4 io error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparse_evolve/config.hpp"
#include "sparse_evolve/error.hpp"
#include "sparse_evolve/report.hpp"
#include "sparse_evolve/run_io.hpp"
#include "sparse_evolve/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sparse_evolve;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

json read_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::uint64_t parse_seed(const std::string& s, const std::string& source) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(source + " '" + s + "' is not a non-negative integer");
  }
}

// Config file, then --set overrides, then SPARSE_EVOLVE_SEED, then --seed.
RunConfig build_config(const std::string& path, const std::vector<std::string>& sets,
                       const std::string& seed_flag) {
  json j = path.empty() ? json::object() : read_json_file(path);
  for (const std::string& s : sets) apply_override(j, s);
  if (const char* env = std::getenv("SPARSE_EVOLVE_SEED"); env && *env) {
    j["seed"] = parse_seed(env, "SPARSE_EVOLVE_SEED");
  }
  if (!seed_flag.empty()) j["seed"] = parse_seed(seed_flag, "--seed");
  return run_config_from_json(j);
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string part = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": '" + part + "' is not a number");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int cmd_train(const std::string& config, const std::vector<std::string>& sets, const std::string& seed,
              std::string out, std::uint64_t stop_after, bool resume) {
  const RunConfig c = build_config(config, sets, seed);
  if (out.empty()) out = (fs::path("runs") / config_hash(c)).string();
  RunOptions opts;
  opts.stop_after = stop_after;
  opts.resume = resume;
  const RunOutcome o = run_in_dir(c, out, opts);
  json summary = result_summary(c, o.result);
  summary["run_dir"] = out;
  summary["complete"] = o.complete;
  summary["steps_done"] = o.result.steps_done;
  std::cout << summary.dump(2) << "\n";
  if (o.result.diverged) {
    std::cerr << "run diverged: " << o.result.failure << "\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_sweep(const std::string& spec_path, const std::string& out, unsigned jobs) {
  const SweepSpec spec = load_sweep(spec_path);
  SweepOptions opts;
  opts.jobs = jobs;
  const std::vector<SweepRow> rows = run_sweep(spec, out, opts);
  std::size_t failed = 0, reused = 0, diverged = 0;
  for (const SweepRow& r : rows) {
    if (!r.error.empty()) {
      ++failed;
      std::cerr << "row " << r.config_hash << " failed: " << r.error << "\n";
    } else if (r.summary.value("diverged", false)) {
      ++diverged;
    }
    if (r.reused) ++reused;
  }
  std::cout << rows.size() << " rows (" << reused << " reused, " << failed << " failed, " << diverged
            << " diverged) -> " << (fs::path(out) / "results.csv").string() << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& run, std::size_t samples, const std::string& seed_flag) {
  RunConfig c;
  const RunResult r = load_run(run, &c);
  json j;
  j["run_dir"] = run;
  j["config_hash"] = config_hash(c);
  j["steps_done"] = r.steps_done;
  j["diverged"] = r.diverged;
  j["itop_rate"] = r.itop_final;
  j["train_flops_ratio"] = r.ledger.training_ratio();
  j["test_flops_ratio"] = r.ledger.testing_ratio();
  if (samples == 0) {
    j["coverage"] = r.final_metrics.mode_coverage;
    j["hq_ratio"] = r.final_metrics.hq_ratio;
    j["w1"] = r.final_metrics.w1;
  } else {
    const std::uint64_t seed = seed_flag.empty() ? c.train.seed : parse_seed(seed_flag, "--seed");
    const DataSampler sampler = c.sampler();
    const Tensor gen = sample(r.sampling_generator(), c.gan.z_dim, samples, seed);
    Rng ref_rng = Rng::stream(seed, 0x5e7);
    const Tensor ref = sampler.sample(samples, ref_rng);
    const MetricsReport m = evaluate_samples(gen, ref, sampler, c.train.radius_mult, c.train.w1_projections, seed);
    j["samples"] = samples;
    j["coverage"] = m.mode_coverage;
    j["hq_ratio"] = m.hq_ratio;
    j["w1"] = m.w1;
  }
  std::cout << j.dump(2) << "\n";
  return r.diverged ? kExitDiverged : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic sparse GAN training at desk scale"};
  app.require_subcommand(1);

  std::string config, seed, out, spec, results, run, s_g = "0.5,0.8,0.9,0.95", s_d = "0,0.5";
  std::vector<std::string> sets;
  std::uint64_t stop_after = 0;
  bool resume = false, as_json = false;
  unsigned jobs = 1;
  std::size_t samples = 0;

  CLI::App* train = app.add_subcommand("train", "Run one configuration into a run directory");
  train->add_option("--config", config, "JSON config file");
  train->add_option("--set", sets, "Override, e.g. --set s_G=0.9 or --set data.kind=grid25");
  train->add_option("--seed", seed, "Seed (overrides config and SPARSE_EVOLVE_SEED)");
  train->add_option("--out", out, "Run directory (default runs/<config hash>)");
  train->add_option("--stop-after", stop_after, "Stop once this many steps are done");
  train->add_flag("--resume", resume, "Continue from the run directory's checkpoint");

  CLI::App* sweep = app.add_subcommand("sweep", "Run a grid of configurations");
  sweep->add_option("spec", spec, "Sweep JSON file")->required();
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Parallel runs")->check(CLI::Range(1u, 256u));

  CLI::App* report = app.add_subcommand("report", "Summaries and SVG plots from results.csv");
  report->add_option("results", results, "results.csv")->required();
  report->add_option("--out", out, "Output directory")->required();

  CLI::App* flops = app.add_subcommand("flops", "Analytical FLOPs ratio table");
  flops->add_option("--config", config, "JSON config file");
  flops->add_option("--set", sets, "Config override");
  flops->add_option("--s-G", s_g, "Comma-separated generator sparsities");
  flops->add_option("--s-D", s_d, "Comma-separated discriminator sparsities");
  flops->add_flag("--json", as_json, "Print JSON instead of a table");

  CLI::App* eval = app.add_subcommand("eval", "Metrics of a run directory's generator");
  eval->add_option("run", run, "Run directory")->required();
  eval->add_option("--samples", samples, "Fresh sample count (0: report the run's final metrics)");
  eval->add_option("--seed", seed, "Seed for fresh samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return cmd_train(config, sets, seed, out, stop_after, resume);
    if (*sweep) return cmd_sweep(spec, out, jobs);
    if (*report) {
      write_report(results, out);
      std::cout << "report written to " << out << "\n";
      return kExitOk;
    }
    if (*flops) {
      const RunConfig c = build_config(config, sets, "");
      const FlopsTable t = flops_table(c, parse_list(s_g, "--s-G"), parse_list(s_d, "--s-D"));
      std::cout << (as_json ? to_json(t).dump(2) + "\n" : format_flops_table(t));
      return kExitOk;
    }
    if (*eval) return cmd_eval(run, samples, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
