// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparse_evolve/rng.hpp"
#include "sparse_evolve/sparse_param.hpp"
#include "sparse_evolve/topology.hpp"

namespace sparse_evolve {

enum class Decay { cosine, constant };

struct ExplorationSchedule {
  std::uint64_t delta_t = 100;
  double p0 = 0.5;
  Decay decay = Decay::cosine;
  std::uint64_t t_end = 0;  // last step at which exploration may run

  void validate(std::uint64_t total_steps) const;
  bool due(std::uint64_t t) const { return t > 0 && t % delta_t == 0 && t <= t_end; }
};

/// Fraction of active weights pruned at step t; nullopt once t > t_end.
/// Cosine: p0 / 2 * (1 + cos(pi * t / t_end)).
std::optional<double> pruning_rate(const ExplorationSchedule& sched, std::uint64_t t);

struct PruneOutcome {
  std::size_t k = 0;                 // number of weights removed
  std::vector<std::size_t> removed;  // flat indices, ascending
};

/// Removes the smallest-|value| active weights, retaining
/// ceil((1 - rate) * active). Ties are removed highest-index first so the
/// lowest flat index survives.
PruneOutcome prune_topk(SparseParam& param, double rate);

/// Activates the k inactive positions with the largest |dense_grad| at
/// value 0 with fresh optimizer state. Positions in `excluded` are skipped.
void regrow_gradient(SparseParam& param, const Tensor& dense_grad, std::size_t k,
                     std::span<const std::size_t> excluded = {});

/// Random-regrowth ablation: k inactive positions chosen uniformly.
void regrow_random(SparseParam& param, std::size_t k, Rng& rng, std::span<const std::size_t> excluded = {});

/// Union of every position ever active, per layer.
class ItopTracker {
 public:
  ItopTracker() = default;
  explicit ItopTracker(std::span<const SparseParam* const> params);

  void observe(std::span<const SparseParam* const> params);
  std::size_t union_count() const { return union_count_; }
  std::size_t total() const;
  const std::vector<std::vector<std::uint8_t>>& seen() const { return seen_; }
  void restore(std::vector<std::vector<std::uint8_t>> seen);

 private:
  std::vector<std::vector<std::uint8_t>> seen_;
  std::size_t union_count_ = 0;
};

/// Ever-activated positions over all dense positions of `layers`.
double itop_rate(const ItopTracker& tracker, std::span<const LayerSpec> layers);

enum class ExploreScope { layer, global };
enum class Regrowth { gradient, random };

struct ExploreOptions {
  ExploreScope scope = ExploreScope::layer;
  Regrowth regrowth = Regrowth::gradient;
  bool exclude_just_pruned = false;
};

struct ExplorationEvent {
  std::uint64_t step = 0;
  std::string net;
  std::size_t layer = 0;
  std::size_t k = 0;
  std::size_t active_before = 0;
  std::size_t active_after = 0;
  std::uint64_t hash_before = 0;
  std::uint64_t hash_after = 0;
};

/// One prune-and-regrow event over `params`, using each param's dense_grad.
/// Returns one event per layer, or nothing when the schedule is exhausted.
/// `rng` is only drawn from for random regrowth.
std::vector<ExplorationEvent> explore_step(std::span<SparseParam* const> params, const ExplorationSchedule& sched,
                                           std::uint64_t t, ItopTracker& tracker, const ExploreOptions& opts,
                                           Rng& rng, const std::string& net = "G");

}  // namespace sparse_evolve
