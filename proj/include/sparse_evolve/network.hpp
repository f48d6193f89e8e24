// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "sparse_evolve/autodiff.hpp"
#include "sparse_evolve/rng.hpp"
#include "sparse_evolve/topology.hpp"

namespace sparse_evolve {

enum class Activation { identity, relu, leaky_relu, tanh, sigmoid };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

/// Feed-forward stack. Hidden layers use `hidden`, the last layer `output`.
/// Conv layers reshape the flat activation to [c, in_h, in_w] and flatten
/// their output again, so any layer may follow any other as long as the
/// flat sizes agree. Dense layers carry a bias; conv layers do not.
struct NetSpec {
  std::vector<LayerSpec> layers;
  Activation hidden = Activation::relu;
  Activation output = Activation::identity;
  double leaky_slope = 0.2;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  void validate() const;
};

std::size_t layer_in_dim(const LayerSpec& l);
std::size_t layer_out_dim(const LayerSpec& l);

struct GanSpec {
  std::size_t z_dim = 2;
  std::size_t data_dim = 2;
  NetSpec generator;
  NetSpec discriminator;

  void validate() const;
  /// Dense MLPs: z_dim -> g_hidden... -> data_dim and data_dim -> d_hidden... -> 1,
  /// with relu in G and leaky_relu(0.2) in D.
  static GanSpec mlp(std::size_t z_dim, const std::vector<std::size_t>& g_hidden,
                     const std::vector<std::size_t>& d_hidden);
};

class Network {
 public:
  Network() = default;
  /// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); masks all ones.
  Network(NetSpec spec, Rng& init_rng, const std::string& name);

  const NetSpec& spec() const { return spec_; }
  NodeId forward(Graph& g, NodeId x);

  std::size_t layer_count() const { return weights_.size(); }
  SparseParam& weight(std::size_t l) { return weights_[l]; }
  const SparseParam& weight(std::size_t l) const { return weights_[l]; }

  std::vector<SparseParam*> weights();
  std::vector<const SparseParam*> weights() const;
  /// Weights followed by biases.
  std::vector<SparseParam*> params();
  std::vector<const SparseParam*> params() const;

  std::vector<Mask> masks() const;
  void apply_masks(const std::vector<Mask>& masks);
  std::vector<double> densities() const;
  std::vector<std::size_t> active_counts() const;

  void zero_grad();
  void set_requires_grad(bool on);

  /// Copy whose weights and biases are replaced by their SEMA values.
  Network with_sema_weights() const;

  /// FNV-1a over every parameter value; used by tests and order probes.
  std::uint64_t value_hash() const;

 private:
  NetSpec spec_;
  std::vector<SparseParam> weights_;
  std::vector<SparseParam> biases_;  // one per layer; empty for conv layers
};

}  // namespace sparse_evolve
