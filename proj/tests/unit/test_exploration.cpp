// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "sparse_evolve/error.hpp"
#include "sparse_evolve/exploration.hpp"
#include "test_util.hpp"

namespace sparse_evolve {
namespace {

ExplorationSchedule schedule(std::uint64_t t_end, double p0 = 0.5, Decay decay = Decay::cosine) {
  ExplorationSchedule s;
  s.delta_t = 100;
  s.p0 = p0;
  s.decay = decay;
  s.t_end = t_end;
  return s;
}

std::vector<SparseParam*> ptrs(std::vector<SparseParam>& ps) {
  std::vector<SparseParam*> out;
  for (auto& p : ps) out.push_back(&p);
  return out;
}

std::vector<const SparseParam*> cptrs(std::vector<SparseParam>& ps) {
  std::vector<const SparseParam*> out;
  for (auto& p : ps) out.push_back(&p);
  return out;
}

TEST(PruningRate, CosineExamples) {
  const auto s = schedule(1000);
  EXPECT_DOUBLE_EQ(*pruning_rate(s, 0), 0.5);
  EXPECT_NEAR(*pruning_rate(s, 500), 0.25, 1e-15);
  EXPECT_NEAR(*pruning_rate(s, 1000), 0.0, 1e-15);
  EXPECT_FALSE(pruning_rate(s, 1001).has_value());
  EXPECT_DOUBLE_EQ(*pruning_rate(schedule(1000, 0.3, Decay::constant), 700), 0.3);
}

TEST(PruningRate, NonIncreasingUnderCosine) {
  const auto s = schedule(2250);
  double prev = 1.0;
  for (std::uint64_t t = 0; t <= 2250; t += 10) {
    const double r = *pruning_rate(s, t);
    EXPECT_LE(r, prev);
    EXPECT_GE(r, 0.0);
    prev = r;
  }
}

TEST(Schedule, DueAndValidate) {
  const auto s = schedule(300);
  EXPECT_FALSE(s.due(0));
  EXPECT_FALSE(s.due(50));
  EXPECT_TRUE(s.due(100));
  EXPECT_TRUE(s.due(300));
  EXPECT_FALSE(s.due(400));
  EXPECT_NO_THROW(s.validate(300));
  EXPECT_THROW(s.validate(299), ConfigError);
  EXPECT_THROW(schedule(10, 0.0).validate(100), ConfigError);
  EXPECT_THROW(schedule(10, 1.0).validate(100), ConfigError);
  auto bad = schedule(10);
  bad.delta_t = 0;
  EXPECT_THROW(bad.validate(100), ConfigError);
}

TEST(PruneTopK, Example) {
  SparseParam p("p", Tensor({5}, {0.1, -0.5, 0.3, 0.05, 0.9}));
  p.adam_m[0] = 1.0;
  const auto out = prune_topk(p, 0.4);
  EXPECT_EQ(out.k, 2u);
  EXPECT_EQ(out.removed, (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(p.mask.bits(), (std::vector<std::uint8_t>{0, 1, 1, 0, 1}));
  EXPECT_EQ(p.values, Tensor({5}, {0.0, -0.5, 0.3, 0.0, 0.9}));
  EXPECT_EQ(p.adam_m[0], 0.0);
}

TEST(PruneTopK, TiesKeepLowestIndex) {
  SparseParam p("p", Tensor({4}, {1.0, -1.0, 1.0, 1.0}));
  const auto out = prune_topk(p, 0.5);
  EXPECT_EQ(out.removed, (std::vector<std::size_t>{2, 3}));
}

TEST(PruneTopK, RetainsCeilingAndRejectsEmpty) {
  SparseParam p("p", Tensor({10}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
  EXPECT_EQ(prune_topk(p, 0.1).k, 1u);  // ceil(0.9 * 10) = 9 exactly
  SparseParam q("q", Tensor({3}, {1, 2, 3}));
  EXPECT_EQ(prune_topk(q, 0.2).k, 0u);  // ceil(2.4) = 3
  SparseParam empty("e", Tensor({2}));
  empty.set_mask(Mask({2}, false));
  EXPECT_THROW(prune_topk(empty, 0.5), ContractError);
}

TEST(RegrowGradient, Example) {
  SparseParam p("p", Tensor({4}, {0.7, 0.0, 0.0, 0.0}));
  p.set_mask(Mask({4}, {1, 0, 0, 0}));
  const Tensor g({4}, {5.0, 0.3, -0.9, 0.1});
  regrow_gradient(p, g, 2);
  EXPECT_EQ(p.mask.bits(), (std::vector<std::uint8_t>{1, 1, 1, 0}));
  EXPECT_EQ(p.values, Tensor({4}, {0.7, 0.0, 0.0, 0.0}));
  EXPECT_EQ(p.age[1], 0u);
}

TEST(RegrowGradient, Errors) {
  SparseParam p("p", Tensor({3}, {1.0, 0.0, 0.0}));
  p.set_mask(Mask({3}, {1, 0, 0}));
  EXPECT_THROW(regrow_gradient(p, Tensor({3}), 3), ContractError);
  EXPECT_THROW(regrow_gradient(p, Tensor({4}), 1), DimensionError);
  const std::vector<std::size_t> excluded{1};
  EXPECT_THROW(regrow_gradient(p, Tensor({3}), 2, excluded), ContractError);
  regrow_gradient(p, Tensor({3}, {0.0, 9.0, 1.0}), 1, excluded);
  EXPECT_TRUE(p.mask[2]);
  EXPECT_FALSE(p.mask[1]);
}

TEST(ExploreStep, ActiveCountInvariantPerLayer) {
  Rng rng(71);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<SparseParam> ps;
    const std::size_t layers = 1 + rng.below(3);
    for (std::size_t l = 0; l < layers; ++l) {
      ps.push_back(testing::random_param("w" + std::to_string(l), {1 + rng.below(8), 1 + rng.below(8)}, rng,
                                         rng.uniform(0.1, 0.9)));
      if (ps.back().active() == 0) ps.back().set_mask(Mask(ps.back().shape(), true));
      ps.back().dense_grad = testing::random_tensor(ps.back().shape(), rng);
    }
    ExploreOptions opts;
    opts.scope = trial % 2 ? ExploreScope::global : ExploreScope::layer;
    opts.regrowth = trial % 3 == 0 ? Regrowth::random : Regrowth::gradient;
    std::vector<std::size_t> before;
    std::size_t total_before = 0;
    for (auto& p : ps) {
      before.push_back(p.active());
      total_before += p.active();
    }
    ItopTracker tracker(cptrs(ps));
    const auto sched = schedule(1000, rng.uniform(0.05, 0.95));
    const auto events = explore_step(ptrs(ps), sched, 100 * rng.below(11), tracker, opts, rng);
    ASSERT_EQ(events.size(), layers);
    std::size_t total_after = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      total_after += ps[l].active();
      if (opts.scope == ExploreScope::layer) ASSERT_EQ(ps[l].active(), before[l]);
      EXPECT_EQ(events[l].active_after, ps[l].active());
      for (std::size_t i = 0; i < ps[l].size(); ++i) {
        if (!ps[l].mask[i]) ASSERT_EQ(ps[l].values[i], 0.0);
      }
    }
    ASSERT_EQ(total_after, total_before);
  }
}

// When the largest gradients sit exactly on the weights that get pruned,
// the same support is regrown.
TEST(ExploreStep, FixedPointWhenGradientsFavourPruned) {
  SparseParam p("p", Tensor({6}, {0.9, 0.1, 0.8, 0.0, 0.2, 0.0}));
  p.set_mask(Mask({6}, {1, 1, 1, 0, 1, 0}));
  p.dense_grad = Tensor({6}, {0.0, 5.0, 0.0, 0.1, 4.0, 0.2});
  const Mask before = p.mask;
  std::vector<SparseParam> ps{p};
  ItopTracker tracker(cptrs(ps));
  Rng rng(1);
  const auto events = explore_step(ptrs(ps), schedule(100, 0.5, Decay::constant), 100, tracker, {}, rng);
  EXPECT_EQ(events[0].k, 2u);
  EXPECT_EQ(ps[0].mask, before);
  EXPECT_EQ(events[0].hash_before, events[0].hash_after);
  EXPECT_EQ(ps[0].values[1], 0.0);  // regrown at zero
}

TEST(ExploreStep, ExhaustedScheduleIsNoOp) {
  Rng rng(73);
  std::vector<SparseParam> ps{testing::random_param("p", {5, 5}, rng, 0.5)};
  ps[0].dense_grad = testing::random_tensor({5, 5}, rng);
  const SparseParam before = ps[0];
  ItopTracker tracker(cptrs(ps));
  EXPECT_TRUE(explore_step(ptrs(ps), schedule(300), 400, tracker, {}, rng).empty());
  EXPECT_EQ(ps[0].mask, before.mask);
  EXPECT_EQ(ps[0].values, before.values);
}

TEST(Itop, StartsAtDensityAndIsMonotone) {
  Rng rng(79);
  std::vector<SparseParam> ps{SparseParam("w", testing::random_tensor({20, 10}, rng))};
  const std::vector<LayerSpec> layers{LayerSpec::dense(20, 10)};
  Mask m({20, 10}, false);
  for (std::size_t i = 0; i < 40; ++i) m.set(i * 5, true);
  ps[0].set_mask(m);
  ItopTracker tracker(cptrs(ps));
  EXPECT_DOUBLE_EQ(itop_rate(tracker, layers), 0.2);
  double prev = 0.2;
  const auto sched = schedule(2000);
  for (std::uint64_t t = 100; t <= 2000; t += 100) {
    ps[0].dense_grad = testing::random_tensor({20, 10}, rng);
    explore_step(ptrs(ps), sched, t, tracker, {}, rng);
    const double r = itop_rate(tracker, layers);
    EXPECT_GE(r, prev);
    EXPECT_LE(r, 1.0);
    EXPECT_GE(static_cast<double>(tracker.union_count()), static_cast<double>(ps[0].active()));
    prev = r;
  }
  EXPECT_GT(prev, 0.2);
}

TEST(Itop, RestoreRecountsUnion) {
  ItopTracker t;
  t.restore({{1, 0, 1}, {0, 0}});
  EXPECT_EQ(t.union_count(), 2u);
  EXPECT_EQ(t.total(), 5u);
}

TEST(ExploreStep, GlobalScopeMovesCapacityAcrossLayers) {
  std::vector<SparseParam> ps{SparseParam("a", Tensor({4}, {0.01, 0.02, 0.03, 0.04})),
                              SparseParam("b", Tensor({4}, {1.0, 2.0, 0.0, 0.0}))};
  ps[1].set_mask(Mask({4}, {1, 1, 0, 0}));
  ps[1].dense_grad = Tensor({4}, {0.0, 0.0, 3.0, 2.0});
  ItopTracker tracker(cptrs(ps));
  ExploreOptions opts;
  opts.scope = ExploreScope::global;
  Rng rng(2);
  const auto events = explore_step(ptrs(ps), schedule(100, 0.5, Decay::constant), 100, tracker, opts, rng);
  // Three of a's weights go; the two gradient peaks in b plus one zero-score
  // position (lowest index, a[0]) come back.
  EXPECT_EQ(ps[0].mask.bits(), (std::vector<std::uint8_t>{1, 0, 0, 1}));
  EXPECT_EQ(ps[1].active(), 4u);
  EXPECT_EQ(events[0].k, 3u);
  EXPECT_EQ(events[1].k, 0u);
}

TEST(ExploreStep, ExcludeJustPrunedAvoidsRevival) {
  Rng rng(83);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SparseParam> ps{testing::random_param("p", {8, 8}, rng, 0.4)};
    // Gradients favour the active positions, which would otherwise be revived.
    for (std::size_t i = 0; i < 64; ++i) ps[0].dense_grad[i] = ps[0].mask[i] ? 10.0 : rng.uniform();
    const Mask before = ps[0].mask;
    ExploreOptions opts;
    opts.exclude_just_pruned = true;
    ItopTracker tracker(cptrs(ps));
    const auto events = explore_step(ptrs(ps), schedule(100, 0.3, Decay::constant), 100, tracker, opts, rng);
    std::size_t revived_elsewhere = 0;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < 64; ++i) {
      if (!before[i] && ps[0].mask[i]) ++revived_elsewhere;
      if (before[i] && !ps[0].mask[i]) ++dropped;
    }
    EXPECT_EQ(dropped, events[0].k);
    EXPECT_EQ(revived_elsewhere, events[0].k);
  }
}

TEST(ExploreStep, RandomRegrowthIsSeeded) {
  auto run = [](std::uint64_t seed) {
    Rng init(89);
    std::vector<SparseParam> ps{testing::random_param("p", {10, 10}, init, 0.3)};
    ItopTracker tracker(cptrs(ps));
    ExploreOptions opts;
    opts.regrowth = Regrowth::random;
    Rng rng(seed);
    explore_step(ptrs(ps), schedule(100, 0.5, Decay::constant), 100, tracker, opts, rng);
    return ps[0].mask;
  };
  EXPECT_EQ(run(5), run(5));
  EXPECT_NE(run(5), run(6));
}

TEST(RegrowRandom, OnlyInactivePositions) {
  Rng rng(97);
  SparseParam p("p", Tensor({50}));
  p.set_mask(Mask({50}, false));
  p.mask.set(3, true);
  regrow_random(p, 20, rng);
  EXPECT_EQ(p.active(), 21u);
  EXPECT_THROW(regrow_random(p, 30, rng), ContractError);
}

}  // namespace
}  // namespace sparse_evolve
