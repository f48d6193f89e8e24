// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparse_evolve/tensor.hpp"

namespace sparse_evolve {

/// Binary pattern congruent with a weight tensor.
class Mask {
 public:
  Mask() = default;
  explicit Mask(Shape shape, bool on = true);
  Mask(Shape shape, std::vector<std::uint8_t> bits);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool on) { bits_[i] = on ? 1 : 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::size_t nonzero() const;
  double density() const;
  /// FNV-1a over the pattern; used to audit support changes.
  std::uint64_t hash() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> bits_;
};

/// A weight tensor with its mask and the per-weight optimizer state.
///
/// Invariants outside a backward pass: values and sema are 0 where the mask
/// is 0, and age > 0 only where the mask is 1. Biases are SparseParams with
/// `prunable == false` and an all-ones mask.
struct SparseParam {
  SparseParam() = default;
  SparseParam(std::string name, Tensor values, bool prunable = true);

  std::string name;
  Tensor values;
  Mask mask;
  Tensor dense_grad;  // d loss / d effective weight, at every position
  Tensor adam_m;
  Tensor adam_v;
  Tensor sema;
  std::vector<std::uint32_t> age;  // steps since most recent activation
  bool prunable = true;
  bool requires_grad = true;

  const Shape& shape() const { return values.shape(); }
  std::size_t size() const { return values.size(); }
  std::size_t active() const { return mask.nonzero(); }

  /// dense_grad with masked-off positions zeroed; what optimizers consume.
  Tensor masked_grad() const;
  void zero_grad();
  /// values with masked-off positions zeroed, i.e. the weight used in forward.
  Tensor effective() const;
  /// Replaces the mask, zeroing every per-weight quantity at newly inactive positions.
  void set_mask(Mask m);
};

}  // namespace sparse_evolve
