// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/run_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sparse_evolve/error.hpp"
#include "sparse_evolve/mask_io.hpp"

namespace sparse_evolve {

namespace fs = std::filesystem;

namespace {

bool is_pf(Method m) { return m == Method::pf_global || m == Method::pf_uniform; }

// The trainer starts dense for the pf methods; pruning happens mid-run.
TrainConfig trainer_config(const RunConfig& c) {
  TrainConfig t = c.effective_train();
  if (is_pf(c.method)) {
    t.s_G = 0.0;
    t.s_D = 0.0;
  }
  return t;
}

bool prune_pending(const RunConfig& c, const Trainer& tr) {
  return is_pf(c.method) && !tr.diverged() && tr.horizon() == c.train.steps && tr.t() >= tr.horizon();
}

RunResult finish_result(const RunConfig& c, const Trainer& tr) {
  RunResult r = tr.result();
  if (is_pf(c.method)) r.config = c.effective_train();
  return r;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string step_name(std::uint64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%08" PRIu64, step);
  return buf;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into '" + path.string() + "': " + ec.message());
}

std::string metrics_csv(const RunResult& r) {
  std::string out = "step,d_loss,g_loss,coverage,hq_ratio,w1,itop_rate,flops_cum\n";
  for (const MetricsRow& m : r.metrics) {
    out += std::to_string(m.step);
    for (double v : {m.d_loss, m.g_loss, m.coverage, m.hq_ratio, m.w1, m.itop_rate, m.flops_cum}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string events_log(const RunResult& r) {
  std::string out;
  for (const ExplorationEvent& e : r.events) {
    out += "step=" + std::to_string(e.step) + " net=" + e.net + " layer=" + std::to_string(e.layer) +
           " k=" + std::to_string(e.k) + " active=" + std::to_string(e.active_before) + "->" +
           std::to_string(e.active_after) + " mask=" + hex64(e.hash_before) + "->" + hex64(e.hash_after) + "\n";
  }
  if (r.diverged) out += "diverged: " + r.failure + "\n";
  return out;
}

nlohmann::json result_summary(const RunConfig& c, const RunResult& r) {
  nlohmann::json j;
  j["config_hash"] = config_hash(c);
  j["method"] = to_string(c.method);
  j["s_G"] = c.train.s_G;
  j["s_D"] = c.train.s_D;
  j["explore_target"] = to_string(c.train.explore_target);
  j["seed"] = c.train.seed;
  j["steps"] = c.train.steps;
  j["coverage"] = r.final_metrics.mode_coverage;
  j["hq_ratio"] = r.final_metrics.hq_ratio;
  j["w1"] = finite_or_null(r.final_metrics.w1);
  j["itop_rate"] = r.itop_final;
  j["train_flops_ratio"] = r.ledger.training_ratio();
  j["test_flops_ratio"] = r.ledger.testing_ratio();
  j["g_density"] = r.generator.densities();
  j["d_density"] = r.discriminator.densities();
  j["diverged"] = r.diverged;
  j["failure"] = r.failure;
  return j;
}

RunOutcome run_in_dir(const RunConfig& c, const fs::path& dir, const RunOptions& opts) {
  c.validate();
  Trainer tr(trainer_config(c), c.gan, c.sampler());
  const bool write = !dir.empty();
  const std::string canonical = canonical_dump(c);
  if (opts.resume) {
    if (!write) throw ContractError("resume needs a run directory");
    const std::string stored = read_file(dir / "config.json");
    if (stored != canonical) throw ConfigError("config does not match the one stored in '" + dir.string() + "'");
    tr.load_checkpoint(dir / "checkpoint.bin");
  }

  while (true) {
    if (prune_pending(c, tr)) {
      const PruneMode mode = c.method == Method::pf_global ? PruneMode::global : PruneMode::uniform;
      const double s_D = c.pf_target == PruneTarget::G_and_D ? c.train.s_D : 0.0;
      tr.prune_and_extend(mode, c.pf_target, c.train.s_G, s_D, c.train.steps);
    }
    if (tr.finished()) break;
    if (opts.stop_after != 0 && tr.t() >= opts.stop_after) break;
    tr.step();
  }

  RunOutcome out;
  out.result = finish_result(c, tr);
  out.complete = tr.finished() && !prune_pending(c, tr);
  if (!write) return out;

  std::error_code ec;
  fs::create_directories(dir / "masks", ec);
  if (ec) throw IoError("cannot create '" + (dir / "masks").string() + "': " + ec.message());
  fs::remove(dir / "result.json", ec);
  write_file(dir / "config.json", canonical);
  write_file(dir / "metrics.csv", metrics_csv(out.result));
  write_file(dir / "events.log", events_log(out.result));
  for (const MaskSnapshot& s : out.result.snapshots) {
    save_masks(dir / "masks" / (step_name(s.step) + ".G.mask"), s.g);
    save_masks(dir / "masks" / (step_name(s.step) + ".D.mask"), s.d);
  }
  tr.save_checkpoint(dir / "checkpoint.bin");
  if (out.complete) write_file(dir / "result.json", result_summary(c, out.result).dump(2) + "\n");
  return out;
}

RunResult load_run(const fs::path& dir, RunConfig* config_out) {
  const RunConfig c = load_run_config((dir / "config.json").string());
  Trainer tr(trainer_config(c), c.gan, c.sampler());
  tr.load_checkpoint(dir / "checkpoint.bin");
  if (config_out) *config_out = c;
  return finish_result(c, tr);
}

}  // namespace sparse_evolve
