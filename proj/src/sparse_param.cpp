// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/sparse_param.hpp"

#include <algorithm>

#include "sparse_evolve/error.hpp"

namespace sparse_evolve {

Mask::Mask(Shape shape, bool on) : shape_(std::move(shape)), bits_(shape_numel(shape_), on ? 1 : 0) {}

Mask::Mask(Shape shape, std::vector<std::uint8_t> bits) : shape_(std::move(shape)), bits_(std::move(bits)) {
  if (shape_numel(shape_) != bits_.size()) {
    throw DimensionError("mask length does not match shape " + shape_str(shape_));
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t Mask::nonzero() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double Mask::density() const {
  return bits_.empty() ? 0.0 : static_cast<double>(nonzero()) / static_cast<double>(bits_.size());
}

std::uint64_t Mask::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (auto d : shape_) {
    for (int s = 0; s < 64; s += 8) mix((d >> s) & 0xff);
  }
  for (auto b : bits_) mix(b);
  return h;
}

SparseParam::SparseParam(std::string name_, Tensor values_, bool prunable_)
    : name(std::move(name_)),
      values(std::move(values_)),
      mask(values.shape(), true),
      dense_grad(values.shape()),
      adam_m(values.shape()),
      adam_v(values.shape()),
      sema(values.shape()),
      age(values.size(), 0),
      prunable(prunable_) {}

Tensor SparseParam::masked_grad() const {
  Tensor g = dense_grad;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!mask[i]) g[i] = 0.0;
  }
  return g;
}

void SparseParam::zero_grad() { dense_grad.fill(0.0); }

Tensor SparseParam::effective() const {
  Tensor w = values;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!mask[i]) w[i] = 0.0;
  }
  return w;
}

void SparseParam::set_mask(Mask m) {
  if (m.shape() != values.shape()) {
    throw DimensionError("mask shape " + shape_str(m.shape()) + " does not match parameter " + name +
                         " shape " + shape_str(values.shape()));
  }
  mask = std::move(m);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask[i]) {
      values[i] = 0.0;
      adam_m[i] = 0.0;
      adam_v[i] = 0.0;
      sema[i] = 0.0;
      age[i] = 0;
    }
  }
}

}  // namespace sparse_evolve
