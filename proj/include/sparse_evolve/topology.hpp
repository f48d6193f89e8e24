// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sparse_evolve/rng.hpp"
#include "sparse_evolve/sparse_param.hpp"

namespace sparse_evolve {

enum class LayerKind { dense, conv2d };

/// Shape of one weight layer. Dense weights are [fan_in, fan_out]; conv
/// kernels are [fan_out, fan_in, kernel_h, kernel_w] applied with same
/// padding to an input of in_h x in_w.
struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t fan_in = 1;
  std::size_t fan_out = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t in_h = 1;
  std::size_t in_w = 1;

  static LayerSpec dense(std::size_t in, std::size_t out) { return {LayerKind::dense, in, out}; }
  static LayerSpec conv(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t h, std::size_t w) {
    return {LayerKind::conv2d, c_in, c_out, k, k, h, w};
  }

  std::size_t param_count() const { return fan_in * fan_out * kernel_h * kernel_w; }
  Shape weight_shape() const;
  /// Output positions per sample (h * w for same-padded conv, 1 for dense).
  std::size_t output_spatial() const { return kind == LayerKind::conv2d ? in_h * in_w : 1; }
  void validate() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class Allocation { uniform, er, erk };

/// Per-layer densities and the integer weight counts they imply.
struct TopologyPlan {
  double sparsity = 0.0;
  std::vector<double> density;    // continuous target d_l in (0, 1]
  std::vector<std::size_t> keep;  // active weights per layer

  std::size_t total_keep() const;
  /// keep[l] / N_l: the density the masks actually realize.
  std::vector<double> realized(std::span<const LayerSpec> layers) const;
};

TopologyPlan allocate_uniform(std::span<const LayerSpec> layers, double sparsity);

/// ERK: per-layer density proportional to (n_in + n_out + k_w + k_h) / N_l
/// for conv layers and (n_in + n_out) / (n_in * n_out) for dense layers.
/// `kernel_terms == false` gives ER, which uses the latter for every layer.
/// A single scale factor meets the global budget; layers pushed above
/// density 1 are capped and the factor recomputed until no new caps appear.
TopologyPlan allocate_erk(std::span<const LayerSpec> layers, double sparsity, bool kernel_terms = true);

TopologyPlan allocate(Allocation kind, std::span<const LayerSpec> layers, double sparsity);

/// Unnormalized ER/ERK density for one layer.
double erk_raw_density(const LayerSpec& layer, bool kernel_terms);

/// One mask per layer with exactly plan.keep[l] ones at uniformly random positions.
std::vector<Mask> init_masks(const TopologyPlan& plan, std::span<const LayerSpec> layers, Rng& rng);

/// Keeps the largest-|value| round((1 - s) * N_l) weights in every layer
/// (at least one); ties go to the lowest flat index.
std::vector<Mask> magnitude_prune_uniform(std::span<const SparseParam* const> params, double sparsity);

/// Keeps the largest-|value| round((1 - s) * sum N_l) weights across all
/// layers; ties go to the lowest (layer, flat index). Layers may empty out.
std::vector<Mask> magnitude_prune_global(std::span<const SparseParam* const> params, double sparsity);

/// Indices of the k largest scores, ties broken by lowest index, returned
/// in descending score order. k is clamped to the number of scores.
std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k);

}  // namespace sparse_evolve
