// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "sparse_evolve/data.hpp"
#include "sparse_evolve/tensor.hpp"

namespace sparse_evolve {

struct MetricsReport {
  double mode_coverage = 0.0;
  double hq_ratio = 0.0;
  double w1 = 0.0;
};

/// Fraction of modes with at least max(1, 0.2 * n / K) samples within
/// radius_mult * sigma of the mode centre.
double mode_coverage(const Tensor& samples, const DataSampler& sampler, double radius_mult = 3.0);

/// Fraction of samples within radius_mult * sigma of their nearest mode.
double hq_ratio(const Tensor& samples, const DataSampler& sampler, double radius_mult = 3.0);

/// Exact W1 between two 1-D empirical distributions (integral of |F - G|).
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

/// Mean over `n_projections` seeded random unit directions of the 1-D W1
/// between the projected sample sets. Samples are [n, dim].
double sliced_w1(const Tensor& samples, const Tensor& reference, std::size_t n_projections, std::uint64_t seed);

MetricsReport evaluate_samples(const Tensor& samples, const Tensor& reference, const DataSampler& sampler,
                               double radius_mult, std::size_t n_projections, std::uint64_t seed);

}  // namespace sparse_evolve
