// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/data.hpp"

#include <cmath>
#include <numbers>

#include "sparse_evolve/error.hpp"

namespace sparse_evolve {

std::string to_string(DataKind kind) {
  switch (kind) {
    case DataKind::ring8:
      return "ring8";
    case DataKind::grid25:
      return "grid25";
    case DataKind::checkerboard:
      return "checkerboard";
  }
  return "?";
}

DataKind parse_data_kind(const std::string& s) {
  if (s == "ring8") return DataKind::ring8;
  if (s == "grid25") return DataKind::grid25;
  if (s == "checkerboard") return DataKind::checkerboard;
  throw ConfigError("unknown dataset '" + s + "'");
}

double DataSampler::default_sigma(DataKind kind) {
  switch (kind) {
    case DataKind::ring8:
      return 0.05;
    case DataKind::grid25:
      return 0.05;
    case DataKind::checkerboard:
      return 1.0 / std::sqrt(12.0);
  }
  return 0.05;
}

DataSampler::DataSampler(DataKind kind, std::vector<Point> centers, double sigma)
    : kind_(kind), centers_(std::move(centers)), sigma_(sigma) {}

DataSampler DataSampler::make(DataKind kind, double sigma) {
  std::vector<Point> c;
  switch (kind) {
    case DataKind::ring8:
      for (int i = 0; i < 8; ++i) {
        const double a = 2.0 * std::numbers::pi * i / 8.0;
        c.push_back({2.0 * std::cos(a), 2.0 * std::sin(a)});
      }
      break;
    case DataKind::grid25:
      for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) c.push_back({2.0 * i, 2.0 * j});
      break;
    case DataKind::checkerboard:
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          if ((i + j) % 2 == 0) c.push_back({-1.5 + i, -1.5 + j});
      sigma = default_sigma(kind);
      break;
  }
  if (!(sigma > 0.0)) throw ConfigError("data sigma must be > 0");
  return DataSampler(kind, std::move(c), sigma);
}

Tensor DataSampler::sample(std::size_t n, Rng& rng) const {
  Tensor out({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    const Point& c = centers_[rng.below(centers_.size())];
    if (kind_ == DataKind::checkerboard) {
      out.at(i, 0) = c[0] + rng.uniform(-0.5, 0.5);
      out.at(i, 1) = c[1] + rng.uniform(-0.5, 0.5);
    } else {
      out.at(i, 0) = c[0] + sigma_ * rng.normal();
      out.at(i, 1) = c[1] + sigma_ * rng.normal();
    }
  }
  return out;
}

}  // namespace sparse_evolve
