// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sparse_evolve/error.hpp"
#include "sparse_evolve/rng.hpp"

namespace sparse_evolve {

namespace {

void check_points(const Tensor& samples, const char* what) {
  if (samples.rank() != 2 || samples.dim(0) == 0) throw ContractError(std::string(what) + ": need a non-empty [n, d] sample set");
}

double dist2(const Tensor& s, std::size_t i, const Point& c) {
  const double dx = s.at(i, 0) - c[0], dy = s.at(i, 1) - c[1];
  return dx * dx + dy * dy;
}

}  // namespace

double mode_coverage(const Tensor& samples, const DataSampler& sampler, double radius_mult) {
  check_points(samples, "mode_coverage");
  const auto& centers = sampler.centers();
  const double r = radius_mult * sampler.sigma();
  const auto n = static_cast<double>(samples.dim(0));
  const double needed = std::max(1.0, 0.2 * n / static_cast<double>(centers.size()));
  std::size_t covered = 0;
  for (const auto& c : centers) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < samples.dim(0); ++i) {
      if (dist2(samples, i, c) <= r * r) ++hits;
    }
    if (static_cast<double>(hits) >= needed) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(centers.size());
}

double hq_ratio(const Tensor& samples, const DataSampler& sampler, double radius_mult) {
  check_points(samples, "hq_ratio");
  const double r = radius_mult * sampler.sigma();
  std::size_t good = 0;
  for (std::size_t i = 0; i < samples.dim(0); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : sampler.centers()) best = std::min(best, dist2(samples, i, c));
    if (best <= r * r) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(samples.dim(0));
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ContractError("wasserstein1_1d: empty sample set");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double wa = 1.0 / static_cast<double>(x.size()), wb = 1.0 / static_cast<double>(y.size());
  // Sweep the merged support, integrating |F_a - F_b| between breakpoints.
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, prev = std::min(x.front(), y.front()), total = 0.0;
  while (i < x.size() || j < y.size()) {
    const double next = (j == y.size() || (i < x.size() && x[i] <= y[j])) ? x[i] : y[j];
    total += std::abs(fa - fb) * (next - prev);
    prev = next;
    while (i < x.size() && x[i] == next) {
      fa += wa;
      ++i;
    }
    while (j < y.size() && y[j] == next) {
      fb += wb;
      ++j;
    }
  }
  return total;
}

double sliced_w1(const Tensor& samples, const Tensor& reference, std::size_t n_projections, std::uint64_t seed) {
  check_points(samples, "sliced_w1");
  check_points(reference, "sliced_w1");
  if (samples.dim(1) != reference.dim(1)) throw DimensionError("sliced_w1: dimension mismatch");
  if (n_projections == 0) throw ContractError("sliced_w1: need at least one projection");
  const std::size_t dim = samples.dim(1);
  Rng rng(seed);
  std::vector<double> dir(dim), pa(samples.dim(0)), pb(reference.dim(0));
  double total = 0.0;
  for (std::size_t k = 0; k < n_projections; ++k) {
    double norm = 0.0;
    while (norm < 1e-12) {
      norm = 0.0;
      for (auto& d : dir) {
        d = rng.normal();
        norm += d * d;
      }
      norm = std::sqrt(norm);
    }
    for (auto& d : dir) d /= norm;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      pa[i] = 0.0;
      for (std::size_t c = 0; c < dim; ++c) pa[i] += samples.at(i, c) * dir[c];
    }
    for (std::size_t i = 0; i < pb.size(); ++i) {
      pb[i] = 0.0;
      for (std::size_t c = 0; c < dim; ++c) pb[i] += reference.at(i, c) * dir[c];
    }
    total += wasserstein1_1d(pa, pb);
  }
  return total / static_cast<double>(n_projections);
}

MetricsReport evaluate_samples(const Tensor& samples, const Tensor& reference, const DataSampler& sampler,
                               double radius_mult, std::size_t n_projections, std::uint64_t seed) {
  return {mode_coverage(samples, sampler, radius_mult), hq_ratio(samples, sampler, radius_mult),
          sliced_w1(samples, reference, n_projections, seed)};
}

}  // namespace sparse_evolve
