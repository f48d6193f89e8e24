// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "sparse_evolve/sparse_param.hpp"

namespace sparse_evolve {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam on the active positions of `param`; `step` counts
/// from 1. Inactive positions keep zero moments. Throws NumericError on a
/// non-finite gradient.
void adam_step(SparseParam& param, const Tensor& masked_grad, const AdamConfig& cfg, std::uint64_t step);

/// Zeroes values at masked-off positions.
void enforce_mask(SparseParam& param);

/// Sparse EMA. Ages every active weight by one step, then per position:
///   age == 0 (inactive)  -> sema = 0
///   age == 1             -> sema = value
///   age  > 1             -> sema = beta * sema + (1 - beta) * value
void sema_update(SparseParam& param, double beta);

/// Plain EMA: beta * shadow + (1 - beta) * values.
Tensor ema_update(const Tensor& shadow, const Tensor& values, double beta);

}  // namespace sparse_evolve
