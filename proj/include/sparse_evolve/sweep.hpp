// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparse_evolve/config.hpp"

namespace sparse_evolve {

/// Grid of runs sharing a base config. Omitted axes keep the base value.
///
///   { "base": {...}, "s_G": [...], "s_D": [...], "methods": [...],
///     "explore_targets": [...], "seeds": [...] }
struct SweepSpec {
  nlohmann::json base = nlohmann::json::object();
  std::vector<double> s_G;
  std::vector<double> s_D;
  std::vector<Method> methods;
  std::vector<ExploreTarget> explore_targets;
  std::vector<std::uint64_t> seeds;

  /// Cartesian product in method, explore_target, s_D, s_G, seed order.
  std::vector<RunConfig> expand() const;
};

SweepSpec sweep_from_json(const nlohmann::json& j);
SweepSpec load_sweep(const std::string& path);

struct SweepRow {
  RunConfig config;
  std::string config_hash;  // of the config as listed in the grid
  std::string run_hash;     // of the effective config; names the run directory
  nlohmann::json summary;   // result.json of the run
  bool reused = false;      // loaded from a previous sweep
  std::string error;        // non-empty when the row failed
};

struct SweepOptions {
  unsigned jobs = 1;
};

/// Runs every row into <out>/runs/<run_hash>, skipping runs whose
/// result.json already exists, then writes results.csv, aggregate.csv and
/// aggregate.json. Row failures are recorded and the sweep continues.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const std::filesystem::path& out, const SweepOptions& opts = {});

std::string results_csv(const std::vector<SweepRow>& rows);

/// mean and sample std per config (every field but the seed).
nlohmann::json aggregate(const std::vector<SweepRow>& rows);
std::string aggregate_csv(const nlohmann::json& agg);

}  // namespace sparse_evolve
