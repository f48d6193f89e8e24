// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/optimizer.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sparse_evolve/error.hpp"

namespace sparse_evolve {

void adam_step(SparseParam& param, const Tensor& masked_grad, const AdamConfig& cfg, std::uint64_t step) {
  if (masked_grad.shape() != param.shape()) {
    throw DimensionError("adam_step: gradient shape " + shape_str(masked_grad.shape()) + " for " + param.name);
  }
  if (step == 0) throw ContractError("adam_step: step counts from 1");
  if (!masked_grad.all_finite()) throw NumericError("adam_step: non-finite gradient for " + param.name);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    if (!param.mask[i]) continue;
    const double g = masked_grad[i];
    double& m = param.adam_m[i];
    double& v = param.adam_v[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    param.values[i] -= cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
  }
  enforce_mask(param);
  if (!param.values.all_finite()) throw NumericError("adam_step: non-finite weights for " + param.name);
}

void enforce_mask(SparseParam& param) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    if (!param.mask[i]) param.values[i] = 0.0;
  }
}

void sema_update(SparseParam& param, double beta) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    if (!param.mask[i]) {
      param.sema[i] = 0.0;
      param.age[i] = 0;
      continue;
    }
    auto& t = param.age[i];
    if (t < std::numeric_limits<std::uint32_t>::max()) ++t;
    if (t == 1) {
      param.sema[i] = param.values[i];
    } else {
      param.sema[i] = beta * param.sema[i] + (1.0 - beta) * param.values[i];
    }
  }
}

Tensor ema_update(const Tensor& shadow, const Tensor& values, double beta) {
  if (shadow.shape() != values.shape()) throw DimensionError("ema_update: shape mismatch");
  Tensor out(shadow.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = beta * shadow[i] + (1.0 - beta) * values[i];
  return out;
}

}  // namespace sparse_evolve
