// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sparse_evolve/data.hpp"
#include "sparse_evolve/gan.hpp"

namespace sparse_evolve {

enum class Method { stu, static_sparse, dense, pf_global, pf_uniform };

std::string to_string(Method m);
Method parse_method(const std::string& s);
ExploreTarget parse_explore_target(const std::string& s);

/// Everything needed to reproduce one run.
struct RunConfig {
  Method method = Method::stu;
  PruneTarget pf_target = PruneTarget::G;
  DataKind data = DataKind::ring8;
  double data_sigma = 0.05;
  TrainConfig train;
  GanSpec gan;

  RunConfig();
  void validate() const;
  DataSampler sampler() const;

  /// The TrainConfig actually executed: static forces explore_target none,
  /// dense forces zero sparsity and no exploration.
  TrainConfig effective_train() const;
  /// Copy with the method mapping applied; identical runs share it.
  RunConfig effective() const;
};

/// Canonical form: every field present, keys sorted.
nlohmann::json to_json(const RunConfig& c);
/// Missing keys take defaults; unknown keys throw ConfigError naming the key.
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::string& path);
std::string canonical_dump(const RunConfig& c);
/// 16 hex digits of FNV-1a over the canonical dump.
std::string config_hash(const RunConfig& c);

/// Applies "a.b=value" to a JSON object. The value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(nlohmann::json& j, std::string_view assignment);

/// Trains according to the method. Divergence is recorded in the result.
RunResult execute(const RunConfig& c);

}  // namespace sparse_evolve
