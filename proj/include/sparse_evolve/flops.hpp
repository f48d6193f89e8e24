// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sparse_evolve/network.hpp"

namespace sparse_evolve {

// Analytical FLOPs. One multiply-accumulate is 2 FLOPs; a masked weight
// costs nothing; a backward pass costs 2x the matching forward pass.
// Bias additions, activations, losses and optimizer arithmetic (Adam,
// SEMA, prune-and-regrow) are not counted.

/// 2 * fan_in * fan_out * kh * kw * spatial * batch * density.
double layer_flops_forward(const LayerSpec& layer, double density, std::size_t batch, std::size_t spatial);
double layer_flops_forward(const LayerSpec& layer, double density, std::size_t batch);

double net_flops_forward(const NetSpec& net, std::span<const double> densities, std::size_t batch);

struct StepFlops {
  double g = 0.0;
  double d = 0.0;
  double total() const { return g + d; }
};

/// One training step: `d_steps` D updates (D forward+backward on real and
/// fake batches plus a G forward for the fakes) followed by one G update
/// (G and D forward, both backward).
StepFlops training_step_flops(const GanSpec& spec, std::span<const double> g_density,
                              std::span<const double> d_density, std::size_t batch, std::size_t d_steps = 1);

/// G forward for a single generated sample.
double testing_flops(const GanSpec& spec, std::span<const double> g_density);

/// Cumulative training FLOPs plus the dense references used for ratios.
class FlopsLedger {
 public:
  FlopsLedger() = default;
  FlopsLedger(const GanSpec& spec, std::size_t batch, std::size_t d_steps, std::uint64_t reference_steps);

  void add_step(const StepFlops& step);
  void set_testing(double per_sample) { test_per_sample_ = per_sample; }

  double train_g() const { return train_g_; }
  double train_d() const { return train_d_; }
  double train_total() const { return train_g_ + train_d_; }
  double test_per_sample() const { return test_per_sample_; }
  double dense_train() const { return dense_step_ * static_cast<double>(reference_steps_); }
  double dense_test() const { return dense_test_; }

  /// Training FLOPs over those of dense training for reference_steps.
  double training_ratio() const;
  double testing_ratio() const;

  // Checkpoint support.
  struct State {
    double train_g, train_d, test_per_sample, dense_step, dense_test;
    std::uint64_t reference_steps;
  };
  State state() const;
  void restore(const State& s);

 private:
  double train_g_ = 0.0;
  double train_d_ = 0.0;
  double test_per_sample_ = 0.0;
  double dense_step_ = 0.0;
  double dense_test_ = 0.0;
  std::uint64_t reference_steps_ = 0;
};

/// Prune-and-fine-tune: `steps` dense steps plus `steps` steps at the
/// fine-tune densities.
double pf_total_flops(const GanSpec& spec, std::span<const double> g_density, std::span<const double> d_density,
                      std::size_t batch, std::uint64_t steps, std::size_t d_steps = 1);

}  // namespace sparse_evolve
