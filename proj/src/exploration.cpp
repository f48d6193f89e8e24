// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sparse_evolve/error.hpp"

namespace sparse_evolve {

namespace {

// ceil with slack for products like 0.9 * 10 that land a hair above an integer.
std::size_t retained_count(double rate, std::size_t active) {
  const double keep = (1.0 - rate) * static_cast<double>(active);
  return std::min(active, static_cast<std::size_t>(std::ceil(keep - 1e-9)));
}

void deactivate(SparseParam& p, std::size_t i) {
  p.mask.set(i, false);
  p.values[i] = 0.0;
  p.adam_m[i] = 0.0;
  p.adam_v[i] = 0.0;
  p.sema[i] = 0.0;
  p.age[i] = 0;
}

void activate(SparseParam& p, std::size_t i) {
  p.mask.set(i, true);
  p.values[i] = 0.0;
  p.adam_m[i] = 0.0;
  p.adam_v[i] = 0.0;
  p.sema[i] = 0.0;
  p.age[i] = 0;
}

// Flat (layer, index) address used by the global scope.
struct Slot {
  std::size_t layer;
  std::size_t index;
};

std::vector<Slot> pick(std::vector<Slot> candidates, std::span<const double> scores, std::size_t k) {
  const auto chosen = top_k_indices(scores, k);
  std::vector<Slot> out;
  out.reserve(chosen.size());
  for (auto c : chosen) out.push_back(candidates[c]);
  return out;
}

}  // namespace

void ExplorationSchedule::validate(std::uint64_t total_steps) const {
  if (delta_t < 1) throw ConfigError("delta_t must be >= 1");
  if (!(p0 > 0.0 && p0 < 1.0)) throw ConfigError("p0 must lie in (0, 1)");
  if (t_end > total_steps) throw ConfigError("t_end exceeds total steps");
}

std::optional<double> pruning_rate(const ExplorationSchedule& sched, std::uint64_t t) {
  if (t > sched.t_end) return std::nullopt;
  if (sched.decay == Decay::constant || sched.t_end == 0) return sched.p0;
  const double phase = std::numbers::pi * static_cast<double>(t) / static_cast<double>(sched.t_end);
  return sched.p0 / 2.0 * (1.0 + std::cos(phase));
}

PruneOutcome prune_topk(SparseParam& param, double rate) {
  std::vector<std::size_t> active;
  std::vector<double> mag;
  for (std::size_t i = 0; i < param.size(); ++i) {
    if (param.mask[i]) {
      active.push_back(i);
      mag.push_back(std::abs(param.values[i]));
    }
  }
  if (active.empty()) throw ContractError("prune_topk: " + param.name + " has no active weights");
  const std::size_t keep = retained_count(rate, active.size());
  PruneOutcome out;
  out.k = active.size() - keep;
  if (out.k == 0) return out;
  std::vector<std::uint8_t> kept(active.size(), 0);
  for (auto j : top_k_indices(mag, keep)) kept[j] = 1;
  for (std::size_t j = 0; j < active.size(); ++j) {
    if (!kept[j]) out.removed.push_back(active[j]);
  }
  for (auto i : out.removed) deactivate(param, i);
  return out;
}

void regrow_gradient(SparseParam& param, const Tensor& dense_grad, std::size_t k,
                     std::span<const std::size_t> excluded) {
  if (dense_grad.shape() != param.shape()) throw DimensionError("regrow_gradient: gradient shape mismatch");
  if (k == 0) return;
  std::vector<std::uint8_t> banned(param.size(), 0);
  for (auto i : excluded) banned.at(i) = 1;
  std::vector<std::size_t> zeros;
  std::vector<double> mag;
  for (std::size_t i = 0; i < param.size(); ++i) {
    if (!param.mask[i] && !banned[i]) {
      zeros.push_back(i);
      mag.push_back(std::abs(dense_grad[i]));
    }
  }
  if (k > zeros.size()) {
    throw ContractError("regrow_gradient: k=" + std::to_string(k) + " exceeds " + std::to_string(zeros.size()) +
                        " eligible zeros in " + param.name);
  }
  for (auto j : top_k_indices(mag, k)) activate(param, zeros[j]);
}

void regrow_random(SparseParam& param, std::size_t k, Rng& rng, std::span<const std::size_t> excluded) {
  if (k == 0) return;
  std::vector<std::uint8_t> banned(param.size(), 0);
  for (auto i : excluded) banned.at(i) = 1;
  std::vector<std::size_t> zeros;
  for (std::size_t i = 0; i < param.size(); ++i) {
    if (!param.mask[i] && !banned[i]) zeros.push_back(i);
  }
  if (k > zeros.size()) throw ContractError("regrow_random: k exceeds eligible zeros in " + param.name);
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(zeros[i], zeros[i + rng.below(zeros.size() - i)]);
    activate(param, zeros[i]);
  }
}

ItopTracker::ItopTracker(std::span<const SparseParam* const> params) {
  for (const SparseParam* p : params) seen_.emplace_back(p->size(), 0);
  observe(params);
}

void ItopTracker::observe(std::span<const SparseParam* const> params) {
  if (params.size() != seen_.size()) throw ContractError("ItopTracker: layer count changed");
  for (std::size_t l = 0; l < params.size(); ++l) {
    for (std::size_t i = 0; i < params[l]->size(); ++i) {
      if (params[l]->mask[i] && !seen_[l][i]) {
        seen_[l][i] = 1;
        ++union_count_;
      }
    }
  }
}

std::size_t ItopTracker::total() const {
  std::size_t n = 0;
  for (const auto& s : seen_) n += s.size();
  return n;
}

void ItopTracker::restore(std::vector<std::vector<std::uint8_t>> seen) {
  seen_ = std::move(seen);
  union_count_ = 0;
  for (const auto& s : seen_) union_count_ += static_cast<std::size_t>(std::count(s.begin(), s.end(), 1));
}

double itop_rate(const ItopTracker& tracker, std::span<const LayerSpec> layers) {
  std::size_t total = 0;
  for (const auto& l : layers) total += l.param_count();
  if (total == 0) return 0.0;
  return static_cast<double>(tracker.union_count()) / static_cast<double>(total);
}

std::vector<ExplorationEvent> explore_step(std::span<SparseParam* const> params, const ExplorationSchedule& sched,
                                           std::uint64_t t, ItopTracker& tracker, const ExploreOptions& opts,
                                           Rng& rng, const std::string& net) {
  const auto rate = pruning_rate(sched, t);
  if (!rate) return {};

  std::vector<ExplorationEvent> events(params.size());
  for (std::size_t l = 0; l < params.size(); ++l) {
    events[l] = ExplorationEvent{t, net, l, 0, params[l]->active(), 0, params[l]->mask.hash(), 0};
  }

  auto regrow = [&](SparseParam& p, std::size_t k, std::span<const std::size_t> removed) {
    std::span<const std::size_t> excluded = opts.exclude_just_pruned ? removed : std::span<const std::size_t>{};
    if (opts.regrowth == Regrowth::random) {
      regrow_random(p, k, rng, excluded);
    } else {
      regrow_gradient(p, p.dense_grad, k, excluded);
    }
  };

  if (opts.scope == ExploreScope::layer) {
    for (std::size_t l = 0; l < params.size(); ++l) {
      auto pruned = prune_topk(*params[l], *rate);
      regrow(*params[l], pruned.k, pruned.removed);
      events[l].k = pruned.k;
    }
  } else {
    // One TopK over the concatenated active weights, one regrowth over the
    // concatenated inactive positions.
    std::vector<Slot> active;
    std::vector<double> mag;
    for (std::size_t l = 0; l < params.size(); ++l) {
      for (std::size_t i = 0; i < params[l]->size(); ++i) {
        if (params[l]->mask[i]) {
          active.push_back({l, i});
          mag.push_back(std::abs(params[l]->values[i]));
        }
      }
    }
    if (active.empty()) throw ContractError("explore_step: no active weights");
    const std::size_t keep = retained_count(*rate, active.size());
    const std::size_t k = active.size() - keep;
    std::vector<std::uint8_t> kept(active.size(), 0);
    for (auto j : top_k_indices(mag, keep)) kept[j] = 1;
    std::vector<std::vector<std::uint8_t>> just_pruned(params.size());
    for (std::size_t l = 0; l < params.size(); ++l) just_pruned[l].assign(params[l]->size(), 0);
    for (std::size_t j = 0; j < active.size(); ++j) {
      if (kept[j]) continue;
      deactivate(*params[active[j].layer], active[j].index);
      just_pruned[active[j].layer][active[j].index] = 1;
      ++events[active[j].layer].k;
    }
    std::vector<Slot> zeros;
    std::vector<double> score;
    for (std::size_t l = 0; l < params.size(); ++l) {
      for (std::size_t i = 0; i < params[l]->size(); ++i) {
        if (params[l]->mask[i] || (opts.exclude_just_pruned && just_pruned[l][i])) continue;
        zeros.push_back({l, i});
        score.push_back(opts.regrowth == Regrowth::random ? rng.uniform() : std::abs(params[l]->dense_grad[i]));
      }
    }
    if (k > zeros.size()) throw ContractError("explore_step: k exceeds eligible zeros");
    for (const auto& s : pick(std::move(zeros), score, k)) activate(*params[s.layer], s.index);
  }

  for (std::size_t l = 0; l < params.size(); ++l) {
    events[l].active_after = params[l]->active();
    events[l].hash_after = params[l]->mask.hash();
  }
  std::vector<const SparseParam*> view(params.begin(), params.end());
  tracker.observe(view);
  return events;
}

}  // namespace sparse_evolve
