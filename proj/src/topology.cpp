// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sparse_evolve/error.hpp"

namespace sparse_evolve {

namespace {

void check_sparsity(double s) {
  if (!(s >= 0.0 && s < 1.0)) throw DomainError("sparsity " + std::to_string(s) + " outside [0, 1)");
}

std::size_t rounded_keep(double density, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::llround(density * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

}  // namespace

Shape LayerSpec::weight_shape() const {
  if (kind == LayerKind::dense) return {fan_in, fan_out};
  return {fan_out, fan_in, kernel_h, kernel_w};
}

void LayerSpec::validate() const {
  if (fan_in < 1 || fan_out < 1 || kernel_h < 1 || kernel_w < 1 || in_h < 1 || in_w < 1) {
    throw ConfigError("layer counts must all be >= 1");
  }
  if (kind == LayerKind::dense && (kernel_h != 1 || kernel_w != 1)) {
    throw ConfigError("dense layer with a kernel");
  }
  if (kind == LayerKind::conv2d && (kernel_h % 2 == 0 || kernel_w % 2 == 0)) {
    throw ConfigError("same-padded conv needs odd kernel sizes");
  }
}

std::size_t TopologyPlan::total_keep() const { return std::accumulate(keep.begin(), keep.end(), std::size_t{0}); }

std::vector<double> TopologyPlan::realized(std::span<const LayerSpec> layers) const {
  if (layers.size() != keep.size()) throw DimensionError("realized: layer count differs from plan");
  std::vector<double> d;
  for (std::size_t l = 0; l < keep.size(); ++l) {
    d.push_back(static_cast<double>(keep[l]) / static_cast<double>(layers[l].param_count()));
  }
  return d;
}

TopologyPlan allocate_uniform(std::span<const LayerSpec> layers, double sparsity) {
  check_sparsity(sparsity);
  TopologyPlan plan;
  plan.sparsity = sparsity;
  for (const auto& l : layers) {
    const std::size_t n = l.param_count();
    plan.keep.push_back(rounded_keep(1.0 - sparsity, n));
    plan.density.push_back(1.0 - sparsity);
  }
  return plan;
}

double erk_raw_density(const LayerSpec& l, bool kernel_terms) {
  const auto n_in = static_cast<double>(l.fan_in), n_out = static_cast<double>(l.fan_out);
  if (kernel_terms && l.kind == LayerKind::conv2d) {
    const auto kh = static_cast<double>(l.kernel_h), kw = static_cast<double>(l.kernel_w);
    return (n_in + n_out + kw + kh) / (n_in * n_out * kw * kh);
  }
  return (n_in + n_out) / (n_in * n_out);
}

TopologyPlan allocate_erk(std::span<const LayerSpec> layers, double sparsity, bool kernel_terms) {
  check_sparsity(sparsity);
  const std::size_t count = layers.size();
  std::vector<double> raw(count), size(count);
  double total = 0.0;
  for (std::size_t l = 0; l < count; ++l) {
    raw[l] = erk_raw_density(layers[l], kernel_terms);
    size[l] = static_cast<double>(layers[l].param_count());
    total += size[l];
  }
  TopologyPlan plan;
  plan.sparsity = sparsity;
  if (sparsity == 0.0) {
    for (const LayerSpec& l : layers) {
      plan.density.push_back(1.0);
      plan.keep.push_back(l.param_count());
    }
    return plan;
  }
  const double budget = (1.0 - sparsity) * total;

  std::vector<bool> capped(count, false);
  double scale = 0.0;
  for (;;) {
    double free_budget = budget, free_mass = 0.0;
    for (std::size_t l = 0; l < count; ++l) {
      if (capped[l]) {
        free_budget -= size[l];
      } else {
        free_mass += raw[l] * size[l];
      }
    }
    if (free_mass == 0.0) {
      if (free_budget > 0.5) throw DomainError("ERK budget cannot be absorbed even with every layer dense");
      break;
    }
    scale = free_budget / free_mass;
    bool changed = false;
    for (std::size_t l = 0; l < count; ++l) {
      if (!capped[l] && scale * raw[l] > 1.0) {
        capped[l] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }

  for (std::size_t l = 0; l < count; ++l) {
    const double d = capped[l] ? 1.0 : scale * raw[l];
    plan.density.push_back(d);
    plan.keep.push_back(rounded_keep(d, layers[l].param_count()));
  }
  return plan;
}

TopologyPlan allocate(Allocation kind, std::span<const LayerSpec> layers, double sparsity) {
  switch (kind) {
    case Allocation::uniform:
      return allocate_uniform(layers, sparsity);
    case Allocation::er:
      return allocate_erk(layers, sparsity, false);
    case Allocation::erk:
      return allocate_erk(layers, sparsity, true);
  }
  throw ContractError("unknown allocation");
}

std::vector<Mask> init_masks(const TopologyPlan& plan, std::span<const LayerSpec> layers, Rng& rng) {
  if (plan.keep.size() != layers.size()) throw ContractError("plan does not match layer list");
  std::vector<Mask> masks;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t n = layers[l].param_count();
    const std::size_t k = plan.keep[l];
    if (k > n) throw ContractError("plan keeps more weights than the layer has");
    // Partial Fisher-Yates: the first k slots are a uniform k-subset.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Mask m(layers[l].weight_shape(), false);
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(idx[i], idx[i + rng.below(n - i)]);
      m.set(idx[i], true);
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

std::vector<Mask> magnitude_prune_uniform(std::span<const SparseParam* const> params, double sparsity) {
  check_sparsity(sparsity);
  std::vector<Mask> masks;
  for (const SparseParam* p : params) {
    std::vector<double> mag(p->size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = p->mask[i] ? std::abs(p->values[i]) : -1.0;
    Mask m(p->shape(), false);
    for (std::size_t i : top_k_indices(mag, rounded_keep(1.0 - sparsity, p->size()))) {
      if (mag[i] >= 0.0) m.set(i, true);  // never revive masked-off positions
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

std::vector<Mask> magnitude_prune_global(std::span<const SparseParam* const> params, double sparsity) {
  check_sparsity(sparsity);
  std::vector<double> mag;
  std::vector<std::size_t> offset;
  for (const SparseParam* p : params) {
    offset.push_back(mag.size());
    for (std::size_t i = 0; i < p->size(); ++i) mag.push_back(p->mask[i] ? std::abs(p->values[i]) : -1.0);
  }
  const auto keep = static_cast<std::size_t>(std::llround((1.0 - sparsity) * static_cast<double>(mag.size())));
  std::vector<std::uint8_t> flat(mag.size(), 0);
  for (std::size_t i : top_k_indices(mag, keep)) flat[i] = mag[i] >= 0.0 ? 1 : 0;
  std::vector<Mask> masks;
  for (std::size_t l = 0; l < params.size(); ++l) {
    const auto first = flat.begin() + static_cast<std::ptrdiff_t>(offset[l]);
    masks.emplace_back(params[l]->shape(),
                       std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(params[l]->size())));
  }
  return masks;
}

}  // namespace sparse_evolve
