// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "sparse_evolve/config.hpp"

namespace sparse_evolve {

// Run directory layout:
//
//   config.json      canonical config; enough to reproduce the run
//   metrics.csv      step,d_loss,g_loss,coverage,hq_ratio,w1,itop_rate,flops_cum
//   events.log       one line per layer per exploration event
//   masks/           step_<t>.G.mask / step_<t>.D.mask snapshots
//   checkpoint.bin   trainer state at the last step taken
//   result.json      summary; present only once the run is complete

struct RunOptions {
  std::uint64_t stop_after = 0;  // stop once t reaches this (0: run to the end)
  bool resume = false;           // continue from <dir>/checkpoint.bin
};

struct RunOutcome {
  RunResult result;
  bool complete = false;
};

/// Runs `c` to completion (or to `stop_after`), handling the prune step of
/// the pf methods. Writes the run directory when `dir` is non-empty.
RunOutcome run_in_dir(const RunConfig& c, const std::filesystem::path& dir, const RunOptions& opts = {});

std::string metrics_csv(const RunResult& r);
std::string events_log(const RunResult& r);
nlohmann::json result_summary(const RunConfig& c, const RunResult& r);

/// Rebuilds the trainer state stored in a run directory.
RunResult load_run(const std::filesystem::path& dir, RunConfig* config_out = nullptr);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, const std::string& contents);

/// %.17g, with "nan"/"inf" spelled out.
std::string format_double(double v);

}  // namespace sparse_evolve
