// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "sparse_evolve/rng.hpp"
#include "sparse_evolve/tensor.hpp"

namespace sparse_evolve {

enum class DataKind { ring8, grid25, checkerboard };

std::string to_string(DataKind kind);
DataKind parse_data_kind(const std::string& s);

using Point = std::array<double, 2>;

/// Synthetic 2-D mixture.
///
/// ring8: 8 Gaussians on a circle of radius 2. grid25: 5x5 Gaussians at
/// {-4,-2,0,2,4}^2. checkerboard: uniform over the 8 dark unit cells of a
/// 4x4 board on [-2,2]^2; its modes are the cell centres and its sigma is
/// the per-axis std of a unit-width uniform.
class DataSampler {
 public:
  static DataSampler make(DataKind kind, double sigma);
  static double default_sigma(DataKind kind);

  DataKind kind() const { return kind_; }
  const std::vector<Point>& centers() const { return centers_; }
  double sigma() const { return sigma_; }

  Tensor sample(std::size_t n, Rng& rng) const;

 private:
  DataSampler(DataKind kind, std::vector<Point> centers, double sigma);

  DataKind kind_;
  std::vector<Point> centers_;
  double sigma_;
};

}  // namespace sparse_evolve
