// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sparse_evolve/autodiff.hpp"
#include "sparse_evolve/data.hpp"
#include "sparse_evolve/exploration.hpp"
#include "sparse_evolve/flops.hpp"
#include "sparse_evolve/metrics.hpp"
#include "sparse_evolve/network.hpp"
#include "sparse_evolve/optimizer.hpp"

namespace sparse_evolve {

enum class ExploreTarget { none, G, D, both };
enum class LossMode { minimax, nonsaturating };
enum class PruneMode { global, uniform };
enum class PruneTarget { G, G_and_D };

std::string to_string(ExploreTarget t);
std::string to_string(LossMode m);

struct TrainConfig {
  double s_G = 0.9;
  double s_D = 0.5;
  Allocation allocation = Allocation::erk;
  std::uint64_t steps = 3000;
  std::size_t batch = 64;
  double lr_G = 2e-3;
  double lr_D = 2e-3;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t d_steps = 1;

  std::uint64_t delta_t = 100;
  double p0 = 0.5;
  Decay decay = Decay::cosine;
  double t_end_fraction = 0.75;
  ExploreTarget explore_target = ExploreTarget::G;
  ExploreOptions explore;

  bool sema = true;
  double sema_beta = 0.99;
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::nonsaturating;

  std::uint64_t eval_interval = 500;
  std::size_t eval_samples = 1000;
  std::size_t w1_projections = 64;
  double radius_mult = 3.0;

  void validate() const;
  ExplorationSchedule schedule() const;
};

/// BCE(D(real), 1) + BCE(D(G(z)), 0). The fake batch is produced on a
/// separate tape, so no gradient reaches G.
NodeId d_loss(Graph& g, Network& D, Network& G, const Tensor& real, const Tensor& z);

/// minimax: mean log(1 - sigmoid(D(G(z)))); nonsaturating: BCE(D(G(z)), 1).
NodeId g_loss(Graph& g, Network& D, Network& G, const Tensor& z, LossMode mode);

Tensor latent_batch(std::size_t n, std::size_t z_dim, Rng& rng);

/// n generator outputs from fresh N(0, I) latents drawn with `seed`.
Tensor sample(const Network& G, std::size_t z_dim, std::size_t n, std::uint64_t seed);

struct MetricsRow {
  std::uint64_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double coverage = 0.0;
  double hq_ratio = 0.0;
  double w1 = 0.0;
  double itop_rate = 0.0;
  double flops_cum = 0.0;
  std::vector<std::size_t> g_active;
  std::vector<std::size_t> d_active;
  std::uint64_t g_mask_hash = 0;
  std::uint64_t d_mask_hash = 0;
};

struct MaskSnapshot {
  std::uint64_t step = 0;
  std::vector<Mask> g;
  std::vector<Mask> d;
};

struct RunResult {
  TrainConfig config;
  GanSpec spec;
  std::vector<MetricsRow> metrics;
  std::vector<ExplorationEvent> events;
  std::vector<MaskSnapshot> snapshots;  // step 0, every evaluation, and pruning events
  FlopsLedger ledger;
  Network generator;
  Network discriminator;
  MetricsReport final_metrics;
  double itop_final = 0.0;
  std::uint64_t steps_done = 0;
  bool diverged = false;
  std::string failure;

  /// The generator used for sampling: SEMA weights when SEMA is enabled.
  Network sampling_generator() const;
};

enum class ProbePoint { d_loss, g_loss, step_end };

/// Called with the live networks at the named point of every step; lets
/// tests observe the update order without touching the trainer.
using TrainProbe = std::function<void(ProbePoint, std::uint64_t step, const Network& G, const Network& D)>;

/// Runs the alternating sparse GAN updates one step at a time:
/// D update against the current G, G update against the updated D, SEMA,
/// then exploration of the configured target every delta_t steps.
class Trainer {
 public:
  Trainer(TrainConfig config, GanSpec spec, DataSampler sampler);

  void set_probe(TrainProbe probe) { probe_ = std::move(probe); }

  /// One step; returns false once the run is finished or has diverged.
  bool step();
  void run();
  bool finished() const { return diverged_ || t_ >= horizon_; }
  bool diverged() const { return diverged_; }
  std::uint64_t t() const { return t_; }
  std::uint64_t horizon() const { return horizon_; }

  Network& generator() { return G_; }
  Network& discriminator() { return D_; }
  const TrainConfig& config() const { return config_; }

  /// Magnitude-prunes the targets to (s_G, s_D) and extends the horizon by
  /// `extra_steps` of fixed-mask training.
  void prune_and_extend(PruneMode mode, PruneTarget target, double s_G, double s_D, std::uint64_t extra_steps);

  RunResult result() const;

  void save_checkpoint(const std::filesystem::path& path) const;
  /// Restores a checkpoint written by a trainer with the same config.
  void load_checkpoint(const std::filesystem::path& path);

 private:
  void d_update();
  void g_update();
  void evaluate(std::uint64_t step);
  void snapshot(std::uint64_t step);
  MetricsReport current_metrics() const;
  StepFlops current_step_flops() const;

  TrainConfig config_;
  GanSpec spec_;
  DataSampler sampler_;
  Network G_;
  Network D_;
  Rng data_rng_;
  Rng latent_rng_;
  Rng explore_rng_;
  ExplorationSchedule schedule_;
  ItopTracker g_tracker_;
  ItopTracker d_tracker_;
  FlopsLedger ledger_;
  Tensor reference_;  // data samples the W1 estimate compares against
  std::uint64_t t_ = 0;
  std::uint64_t horizon_ = 0;
  std::uint64_t g_updates_ = 0;
  std::uint64_t d_updates_ = 0;
  double last_d_loss_ = 0.0;
  double last_g_loss_ = 0.0;
  std::vector<MetricsRow> metrics_;
  std::vector<ExplorationEvent> events_;
  std::vector<MaskSnapshot> snapshots_;
  bool diverged_ = false;
  std::string failure_;
  TrainProbe probe_;
};

/// Full run of the trainer. Divergence is recorded in the result, not thrown.
RunResult train(const TrainConfig& config, const GanSpec& spec, const DataSampler& sampler,
                TrainProbe probe = {});

/// Prune-and-fine-tune baseline: `steps` dense steps, one-shot magnitude
/// pruning to the targets, then `steps` fixed-mask steps. FLOPs ratios are
/// normalized by `steps` of dense training.
RunResult run_pf(const TrainConfig& config, const GanSpec& spec, const DataSampler& sampler, PruneMode mode,
                 PruneTarget target);

}  // namespace sparse_evolve
