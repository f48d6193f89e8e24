// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/network.hpp"

#include <cmath>
#include <cstring>

#include "sparse_evolve/error.hpp"

namespace sparse_evolve {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::leaky_relu:
      return "leaky_relu";
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "leaky_relu") return Activation::leaky_relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + s + "'");
}

std::size_t layer_in_dim(const LayerSpec& l) {
  return l.kind == LayerKind::dense ? l.fan_in : l.fan_in * l.in_h * l.in_w;
}

std::size_t layer_out_dim(const LayerSpec& l) {
  return l.kind == LayerKind::dense ? l.fan_out : l.fan_out * l.in_h * l.in_w;
}

std::size_t NetSpec::in_dim() const { return layers.empty() ? 0 : layer_in_dim(layers.front()); }
std::size_t NetSpec::out_dim() const { return layers.empty() ? 0 : layer_out_dim(layers.back()); }

void NetSpec::validate() const {
  if (layers.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (l > 0 && layer_out_dim(layers[l - 1]) != layer_in_dim(layers[l])) {
      throw ConfigError("layer " + std::to_string(l) + " expects " + std::to_string(layer_in_dim(layers[l])) +
                        " inputs but the previous layer yields " + std::to_string(layer_out_dim(layers[l - 1])));
    }
  }
}

void GanSpec::validate() const {
  generator.validate();
  discriminator.validate();
  if (generator.in_dim() != z_dim) throw ConfigError("generator input must equal z_dim");
  if (generator.out_dim() != data_dim) throw ConfigError("generator output must equal the data dimension");
  if (discriminator.in_dim() != data_dim) throw ConfigError("discriminator input must equal the data dimension");
  if (discriminator.out_dim() != 1) throw ConfigError("discriminator must output a single logit");
}

GanSpec GanSpec::mlp(std::size_t z_dim, const std::vector<std::size_t>& g_hidden,
                     const std::vector<std::size_t>& d_hidden) {
  auto chain = [](std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    std::vector<LayerSpec> layers;
    std::size_t prev = in;
    for (auto h : hidden) {
      layers.push_back(LayerSpec::dense(prev, h));
      prev = h;
    }
    layers.push_back(LayerSpec::dense(prev, out));
    return layers;
  };
  GanSpec spec;
  spec.z_dim = z_dim;
  spec.generator = NetSpec{chain(z_dim, g_hidden, 2), Activation::relu, Activation::identity, 0.2};
  spec.discriminator = NetSpec{chain(2, d_hidden, 1), Activation::leaky_relu, Activation::identity, 0.2};
  return spec;
}

Network::Network(NetSpec spec, Rng& init_rng, const std::string& name) : spec_(std::move(spec)) {
  spec_.validate();
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    const LayerSpec& ls = spec_.layers[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(ls.fan_in * ls.kernel_h * ls.kernel_w));
    Tensor w(ls.weight_shape());
    for (auto& v : w.data()) v = init_rng.uniform(-bound, bound);
    weights_.emplace_back(name + ".w" + std::to_string(l), std::move(w), true);
    if (ls.kind == LayerKind::dense) {
      Tensor b({ls.fan_out});
      for (auto& v : b.data()) v = init_rng.uniform(-bound, bound);
      biases_.emplace_back(name + ".b" + std::to_string(l), std::move(b), false);
    } else {
      biases_.emplace_back();
    }
  }
}

NodeId Network::forward(Graph& g, NodeId x) {
  const std::size_t batch = g.value(x).dim(0);
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    const LayerSpec& ls = spec_.layers[l];
    if (ls.kind == LayerKind::dense) {
      x = g.masked_linear(x, weights_[l], &biases_[l]);
    } else {
      x = g.reshape(x, {batch, ls.fan_in, ls.in_h, ls.in_w});
      x = g.conv2d(x, weights_[l], (ls.kernel_h - 1) / 2);
      x = g.reshape(x, {batch, layer_out_dim(ls)});
    }
    const Activation act = l + 1 == spec_.layers.size() ? spec_.output : spec_.hidden;
    switch (act) {
      case Activation::identity:
        break;
      case Activation::relu:
        x = g.relu(x);
        break;
      case Activation::leaky_relu:
        x = g.leaky_relu(x, spec_.leaky_slope);
        break;
      case Activation::tanh:
        x = g.tanh(x);
        break;
      case Activation::sigmoid:
        x = g.sigmoid(x);
        break;
    }
  }
  return x;
}

std::vector<SparseParam*> Network::weights() {
  std::vector<SparseParam*> out;
  for (auto& w : weights_) out.push_back(&w);
  return out;
}

std::vector<const SparseParam*> Network::weights() const {
  std::vector<const SparseParam*> out;
  for (const auto& w : weights_) out.push_back(&w);
  return out;
}

std::vector<SparseParam*> Network::params() {
  auto out = weights();
  for (auto& b : biases_) {
    if (!b.values.empty()) out.push_back(&b);
  }
  return out;
}

std::vector<const SparseParam*> Network::params() const {
  auto out = weights();
  for (const auto& b : biases_) {
    if (!b.values.empty()) out.push_back(&b);
  }
  return out;
}

std::vector<Mask> Network::masks() const {
  std::vector<Mask> out;
  for (const auto& w : weights_) out.push_back(w.mask);
  return out;
}

void Network::apply_masks(const std::vector<Mask>& masks) {
  if (masks.size() != weights_.size()) throw DimensionError("apply_masks: layer count mismatch");
  for (std::size_t l = 0; l < masks.size(); ++l) weights_[l].set_mask(masks[l]);
}

std::vector<double> Network::densities() const {
  std::vector<double> out;
  for (const auto& w : weights_) out.push_back(w.mask.density());
  return out;
}

std::vector<std::size_t> Network::active_counts() const {
  std::vector<std::size_t> out;
  for (const auto& w : weights_) out.push_back(w.active());
  return out;
}

void Network::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

void Network::set_requires_grad(bool on) {
  for (auto* p : params()) p->requires_grad = on;
}

Network Network::with_sema_weights() const {
  Network copy = *this;
  for (auto* p : copy.params()) p->values = p->sema;
  return copy;
}

std::uint64_t Network::value_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* p : params()) {
    for (double v : p->values.data()) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      for (int s = 0; s < 64; s += 8) {
        h ^= (bits >> s) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

}  // namespace sparse_evolve
