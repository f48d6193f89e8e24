// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/flops.hpp"

#include <string>

#include "sparse_evolve/error.hpp"

namespace sparse_evolve {

double layer_flops_forward(const LayerSpec& layer, double density, std::size_t batch, std::size_t spatial) {
  // Global magnitude pruning can empty a layer, so 0 is accepted.
  if (!(density >= 0.0 && density <= 1.0)) throw DomainError("density " + std::to_string(density) + " outside [0,1]");
  return 2.0 * static_cast<double>(layer.fan_in) * static_cast<double>(layer.fan_out) *
         static_cast<double>(layer.kernel_h * layer.kernel_w) * static_cast<double>(spatial) *
         static_cast<double>(batch) * density;
}

double layer_flops_forward(const LayerSpec& layer, double density, std::size_t batch) {
  return layer_flops_forward(layer, density, batch, layer.output_spatial());
}

double net_flops_forward(const NetSpec& net, std::span<const double> densities, std::size_t batch) {
  if (densities.size() != net.layers.size()) throw DimensionError("one density per layer required");
  double total = 0.0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) total += layer_flops_forward(net.layers[l], densities[l], batch);
  return total;
}

StepFlops training_step_flops(const GanSpec& spec, std::span<const double> g_density,
                              std::span<const double> d_density, std::size_t batch, std::size_t d_steps) {
  const double g_fwd = net_flops_forward(spec.generator, g_density, batch);
  const double d_fwd = net_flops_forward(spec.discriminator, d_density, batch);
  const auto n = static_cast<double>(d_steps);
  StepFlops s;
  // D update: G forward for the fakes; D forward + backward on real and fake.
  s.g += n * g_fwd;
  s.d += n * 3.0 * (2.0 * d_fwd);
  // G update: forward and backward through both networks.
  s.g += 3.0 * g_fwd;
  s.d += 3.0 * d_fwd;
  return s;
}

double testing_flops(const GanSpec& spec, std::span<const double> g_density) {
  return net_flops_forward(spec.generator, g_density, 1);
}

FlopsLedger::FlopsLedger(const GanSpec& spec, std::size_t batch, std::size_t d_steps, std::uint64_t reference_steps)
    : reference_steps_(reference_steps) {
  const std::vector<double> g_ones(spec.generator.layers.size(), 1.0);
  const std::vector<double> d_ones(spec.discriminator.layers.size(), 1.0);
  dense_step_ = training_step_flops(spec, g_ones, d_ones, batch, d_steps).total();
  dense_test_ = testing_flops(spec, g_ones);
}

void FlopsLedger::add_step(const StepFlops& step) {
  train_g_ += step.g;
  train_d_ += step.d;
}

double FlopsLedger::training_ratio() const {
  const double ref = dense_train();
  return ref > 0.0 ? train_total() / ref : 0.0;
}

double FlopsLedger::testing_ratio() const { return dense_test_ > 0.0 ? test_per_sample_ / dense_test_ : 0.0; }

FlopsLedger::State FlopsLedger::state() const {
  return {train_g_, train_d_, test_per_sample_, dense_step_, dense_test_, reference_steps_};
}

void FlopsLedger::restore(const State& s) {
  train_g_ = s.train_g;
  train_d_ = s.train_d;
  test_per_sample_ = s.test_per_sample;
  dense_step_ = s.dense_step;
  dense_test_ = s.dense_test;
  reference_steps_ = s.reference_steps;
}

double pf_total_flops(const GanSpec& spec, std::span<const double> g_density, std::span<const double> d_density,
                      std::size_t batch, std::uint64_t steps, std::size_t d_steps) {
  const std::vector<double> g_ones(spec.generator.layers.size(), 1.0);
  const std::vector<double> d_ones(spec.discriminator.layers.size(), 1.0);
  const double dense = training_step_flops(spec, g_ones, d_ones, batch, d_steps).total();
  const double sparse = training_step_flops(spec, g_density, d_density, batch, d_steps).total();
  return (dense + sparse) * static_cast<double>(steps);
}

}  // namespace sparse_evolve
