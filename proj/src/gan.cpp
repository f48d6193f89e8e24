// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/gan.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "binary_io.hpp"
#include "sparse_evolve/error.hpp"

namespace sparse_evolve {

namespace {

enum Stream : std::uint64_t { kInit = 1, kData = 2, kLatent = 3, kExplore = 4, kReference = 5, kEval = 6 };

std::uint64_t combined_hash(const std::vector<Mask>& masks) {
  std::uint64_t h = 0;
  for (const auto& m : masks) h = splitmix64(h ^ m.hash());
  return h;
}

void apply_plan(Network& net, const TopologyPlan& plan, Rng& rng) {
  net.apply_masks(init_masks(plan, net.spec().layers, rng));
}

}  // namespace

std::string to_string(ExploreTarget t) {
  switch (t) {
    case ExploreTarget::none:
      return "none";
    case ExploreTarget::G:
      return "G";
    case ExploreTarget::D:
      return "D";
    case ExploreTarget::both:
      return "both";
  }
  return "?";
}

std::string to_string(LossMode m) { return m == LossMode::minimax ? "minimax" : "nonsaturating"; }

void TrainConfig::validate() const {
  if (!(s_G >= 0.0 && s_G < 1.0)) throw ConfigError("s_G must lie in [0, 1)");
  if (!(s_D >= 0.0 && s_D < 1.0)) throw ConfigError("s_D must lie in [0, 1)");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (d_steps < 1) throw ConfigError("d_steps must be >= 1");
  if (!(lr_G > 0.0) || !(lr_D > 0.0)) throw ConfigError("learning rates must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(sema_beta >= 0.0 && sema_beta <= 1.0)) throw ConfigError("sema_beta must lie in [0, 1]");
  if (!(t_end_fraction >= 0.0 && t_end_fraction <= 1.0)) throw ConfigError("t_end_fraction must lie in [0, 1]");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  if (eval_samples < 1) throw ConfigError("eval_samples must be >= 1");
  if (w1_projections < 1) throw ConfigError("w1_projections must be >= 1");
  if (!(radius_mult > 0.0)) throw ConfigError("radius_mult must be > 0");
  schedule().validate(steps);
}

ExplorationSchedule TrainConfig::schedule() const {
  ExplorationSchedule s;
  s.delta_t = delta_t;
  s.p0 = p0;
  s.decay = decay;
  s.t_end = static_cast<std::uint64_t>(std::floor(t_end_fraction * static_cast<double>(steps)));
  return s;
}

NodeId d_loss(Graph& g, Network& D, Network& G, const Tensor& real, const Tensor& z) {
  if (real.empty() || z.empty()) throw ContractError("d_loss: empty batch");
  Tensor fake;
  {
    Graph detached;
    fake = detached.value(G.forward(detached, detached.input(z)));
  }
  const std::vector<double> ones(real.dim(0), 1.0), zeros(fake.dim(0), 0.0);
  const NodeId real_term = g.bce_logits(D.forward(g, g.input(real)), ones);
  const NodeId fake_term = g.bce_logits(D.forward(g, g.input(std::move(fake))), zeros);
  return g.add(real_term, fake_term);
}

NodeId g_loss(Graph& g, Network& D, Network& G, const Tensor& z, LossMode mode) {
  if (z.empty()) throw ContractError("g_loss: empty batch");
  const NodeId logits = D.forward(g, G.forward(g, g.input(z)));
  const std::size_t n = g.value(logits).dim(0);
  if (mode == LossMode::nonsaturating) return g.bce_logits(logits, std::vector<double>(n, 1.0));
  // log(1 - sigmoid(l)) = -softplus(l) = -BCE(l, 0)
  return g.scale(g.bce_logits(logits, std::vector<double>(n, 0.0)), -1.0);
}

Tensor latent_batch(std::size_t n, std::size_t z_dim, Rng& rng) {
  Tensor z({n, z_dim});
  for (auto& v : z.data()) v = rng.normal();
  return z;
}

Tensor sample(const Network& G, std::size_t z_dim, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ContractError("sample: n must be >= 1");
  Rng rng(seed);
  Network gen = G;
  Graph g;
  return g.value(gen.forward(g, g.input(latent_batch(n, z_dim, rng))));
}

Network RunResult::sampling_generator() const { return config.sema ? generator.with_sema_weights() : generator; }

Trainer::Trainer(TrainConfig config, GanSpec spec, DataSampler sampler)
    : config_(std::move(config)), spec_(std::move(spec)), sampler_(std::move(sampler)) {
  config_.validate();
  spec_.validate();
  Rng init = Rng::stream(config_.seed, kInit);
  G_ = Network(spec_.generator, init, "G");
  D_ = Network(spec_.discriminator, init, "D");
  apply_plan(G_, allocate(config_.allocation, spec_.generator.layers, config_.s_G), init);
  apply_plan(D_, allocate(config_.allocation, spec_.discriminator.layers, config_.s_D), init);

  data_rng_ = Rng::stream(config_.seed, kData);
  latent_rng_ = Rng::stream(config_.seed, kLatent);
  explore_rng_ = Rng::stream(config_.seed, kExplore);
  Rng ref = Rng::stream(config_.seed, kReference);
  reference_ = sampler_.sample(config_.eval_samples, ref);

  schedule_ = config_.schedule();
  horizon_ = config_.steps;
  const auto gw = G_.weights();
  const auto dw = D_.weights();
  g_tracker_ = ItopTracker(std::vector<const SparseParam*>(gw.begin(), gw.end()));
  d_tracker_ = ItopTracker(std::vector<const SparseParam*>(dw.begin(), dw.end()));
  ledger_ = FlopsLedger(spec_, config_.batch, config_.d_steps, config_.steps);
  ledger_.set_testing(testing_flops(spec_, G_.densities()));
  snapshot(0);
}

void Trainer::d_update() {
  G_.set_requires_grad(false);
  D_.set_requires_grad(true);
  D_.zero_grad();
  const Tensor real = sampler_.sample(config_.batch, data_rng_);
  const Tensor z = latent_batch(config_.batch, spec_.z_dim, latent_rng_);
  Graph g;
  const NodeId loss = d_loss(g, D_, G_, real, z);
  if (probe_) probe_(ProbePoint::d_loss, t_ + 1, G_, D_);
  g.backward(loss);
  ++d_updates_;
  const AdamConfig adam{config_.lr_D, config_.beta1, config_.beta2, config_.adam_eps};
  for (auto* p : D_.params()) adam_step(*p, p->masked_grad(), adam, d_updates_);
  last_d_loss_ = g.value(loss)[0];
}

void Trainer::g_update() {
  D_.set_requires_grad(false);
  G_.set_requires_grad(true);
  G_.zero_grad();
  const Tensor z = latent_batch(config_.batch, spec_.z_dim, latent_rng_);
  Graph g;
  const NodeId loss = g_loss(g, D_, G_, z, config_.loss_mode);
  if (probe_) probe_(ProbePoint::g_loss, t_ + 1, G_, D_);
  g.backward(loss);
  ++g_updates_;
  const AdamConfig adam{config_.lr_G, config_.beta1, config_.beta2, config_.adam_eps};
  for (auto* p : G_.params()) adam_step(*p, p->masked_grad(), adam, g_updates_);
  if (config_.sema) {
    for (auto* p : G_.params()) sema_update(*p, config_.sema_beta);
  }
  last_g_loss_ = g.value(loss)[0];
  D_.set_requires_grad(true);
}

StepFlops Trainer::current_step_flops() const {
  return training_step_flops(spec_, G_.densities(), D_.densities(), config_.batch, config_.d_steps);
}

bool Trainer::step() {
  if (finished()) return false;
  try {
    for (std::size_t i = 0; i < config_.d_steps; ++i) d_update();
    g_update();
    ++t_;
    ledger_.add_step(current_step_flops());

    if (schedule_.due(t_)) {
      const ExploreTarget target = config_.explore_target;
      if (target == ExploreTarget::G || target == ExploreTarget::both) {
        auto ev = explore_step(G_.weights(), schedule_, t_, g_tracker_, config_.explore, explore_rng_, "G");
        events_.insert(events_.end(), ev.begin(), ev.end());
      }
      if (target == ExploreTarget::D || target == ExploreTarget::both) {
        auto ev = explore_step(D_.weights(), schedule_, t_, d_tracker_, config_.explore, explore_rng_, "D");
        events_.insert(events_.end(), ev.begin(), ev.end());
      }
      ledger_.set_testing(testing_flops(spec_, G_.densities()));
    }
    if (t_ % config_.eval_interval == 0 || t_ == horizon_) evaluate(t_);
  } catch (const NumericError& e) {
    diverged_ = true;
    failure_ = "step " + std::to_string(t_ + 1) + ": " + e.what();
    return false;
  }
  if (probe_) probe_(ProbePoint::step_end, t_, G_, D_);
  return !finished();
}

void Trainer::run() {
  while (step()) {
  }
}

MetricsReport Trainer::current_metrics() const {
  const Network gen = config_.sema ? G_.with_sema_weights() : G_;
  const std::uint64_t eval_seed = splitmix64(config_.seed ^ (kEval * 0x9e3779b97f4a7c15ULL));
  const Tensor samples = sample(gen, spec_.z_dim, config_.eval_samples, eval_seed);
  if (!samples.all_finite()) throw NumericError("non-finite generator samples");
  return evaluate_samples(samples, reference_, sampler_, config_.radius_mult, config_.w1_projections, eval_seed + 1);
}

void Trainer::evaluate(std::uint64_t step) {
  const MetricsReport m = current_metrics();
  MetricsRow row;
  row.step = step;
  row.d_loss = last_d_loss_;
  row.g_loss = last_g_loss_;
  row.coverage = m.mode_coverage;
  row.hq_ratio = m.hq_ratio;
  row.w1 = m.w1;
  row.itop_rate = itop_rate(g_tracker_, spec_.generator.layers);
  row.flops_cum = ledger_.train_total();
  row.g_active = G_.active_counts();
  row.d_active = D_.active_counts();
  row.g_mask_hash = combined_hash(G_.masks());
  row.d_mask_hash = combined_hash(D_.masks());
  metrics_.push_back(std::move(row));
  snapshot(step);
}

void Trainer::snapshot(std::uint64_t step) { snapshots_.push_back({step, G_.masks(), D_.masks()}); }

void Trainer::prune_and_extend(PruneMode mode, PruneTarget target, double s_G, double s_D,
                               std::uint64_t extra_steps) {
  auto prune = [mode](Network& net, double s) {
    const auto w = net.weights();
    const std::vector<const SparseParam*> view(w.begin(), w.end());
    net.apply_masks(mode == PruneMode::global ? magnitude_prune_global(view, s) : magnitude_prune_uniform(view, s));
  };
  prune(G_, s_G);
  if (target == PruneTarget::G_and_D) prune(D_, s_D);
  const auto gw = G_.weights();
  const auto dw = D_.weights();
  g_tracker_.observe(std::vector<const SparseParam*>(gw.begin(), gw.end()));
  d_tracker_.observe(std::vector<const SparseParam*>(dw.begin(), dw.end()));
  ledger_.set_testing(testing_flops(spec_, G_.densities()));
  horizon_ += extra_steps;
  snapshot(t_);
}

RunResult Trainer::result() const {
  RunResult r;
  r.config = config_;
  r.spec = spec_;
  r.metrics = metrics_;
  r.events = events_;
  r.snapshots = snapshots_;
  r.ledger = ledger_;
  r.generator = G_;
  r.discriminator = D_;
  r.itop_final = itop_rate(g_tracker_, spec_.generator.layers);
  r.steps_done = t_;
  r.diverged = diverged_;
  r.failure = failure_;
  if (!metrics_.empty() && metrics_.back().step == t_) {
    r.final_metrics = {metrics_.back().coverage, metrics_.back().hq_ratio, metrics_.back().w1};
  } else {
    try {
      r.final_metrics = current_metrics();
    } catch (const NumericError&) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      r.final_metrics = {0.0, 0.0, nan};
    }
  }
  return r;
}

namespace {

void put_tensor(detail::BinaryWriter& w, const Tensor& t) { w.put_vector(t.vec()); }

void get_tensor(detail::BinaryReader& r, Tensor& t) {
  auto v = r.get_vector<double>();
  if (v.size() != t.size()) throw IoError("checkpoint tensor size mismatch");
  t = Tensor(t.shape(), std::move(v));
}

void put_net(detail::BinaryWriter& w, const Network& net) {
  for (const SparseParam* p : net.params()) {
    put_tensor(w, p->values);
    w.put_vector(p->mask.bits());
    put_tensor(w, p->dense_grad);
    put_tensor(w, p->adam_m);
    put_tensor(w, p->adam_v);
    put_tensor(w, p->sema);
    w.put_vector(p->age);
  }
}

void get_net(detail::BinaryReader& r, Network& net) {
  for (SparseParam* p : net.params()) {
    get_tensor(r, p->values);
    p->mask = Mask(p->shape(), r.get_vector<std::uint8_t>());
    get_tensor(r, p->dense_grad);
    get_tensor(r, p->adam_m);
    get_tensor(r, p->adam_v);
    get_tensor(r, p->sema);
    p->age = r.get_vector<std::uint32_t>();
    if (p->age.size() != p->size()) throw IoError("checkpoint age size mismatch");
  }
}

void put_masks(detail::BinaryWriter& w, const std::vector<Mask>& masks) {
  w.put<std::uint64_t>(masks.size());
  for (const auto& m : masks) {
    w.put_vector(m.shape());
    w.put_vector(m.bits());
  }
}

std::vector<Mask> get_masks(detail::BinaryReader& r) {
  std::vector<Mask> out(r.get<std::uint64_t>());
  for (auto& m : out) {
    auto shape = r.get_vector<std::size_t>();
    m = Mask(std::move(shape), r.get_vector<std::uint8_t>());
  }
  return out;
}

constexpr std::uint64_t kCheckpointMagic = 0x32304b5043455053ULL;  // "SPECPK02"

void put_spec(detail::BinaryWriter& w, const NetSpec& n) {
  for (const auto& l : n.layers) {
    for (std::size_t v : {static_cast<std::size_t>(l.kind), l.fan_in, l.fan_out, l.kernel_h, l.kernel_w, l.in_h, l.in_w})
      w.put<std::uint64_t>(v);
  }
  w.put<std::uint64_t>(static_cast<std::uint64_t>(n.hidden));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(n.output));
  w.put(n.leaky_slope);
}

// FNV-1a over every setting that shapes the trajectory, so a checkpoint is
// never resumed under a different configuration.
std::uint64_t fingerprint(const TrainConfig& c, const GanSpec& spec, const DataSampler& data) {
  detail::BinaryWriter w;
  for (double v : {c.s_G, c.s_D, c.lr_G, c.lr_D, c.beta1, c.beta2, c.adam_eps, c.p0, c.sema_beta, c.t_end_fraction,
                   c.radius_mult, data.sigma()})
    w.put(v);
  for (std::uint64_t v : {static_cast<std::uint64_t>(c.allocation), c.steps, static_cast<std::uint64_t>(c.batch),
                          static_cast<std::uint64_t>(c.d_steps), c.delta_t, static_cast<std::uint64_t>(c.decay),
                          static_cast<std::uint64_t>(c.explore_target), static_cast<std::uint64_t>(c.explore.scope),
                          static_cast<std::uint64_t>(c.explore.regrowth),
                          static_cast<std::uint64_t>(c.explore.exclude_just_pruned), static_cast<std::uint64_t>(c.sema),
                          c.seed, static_cast<std::uint64_t>(c.loss_mode), c.eval_interval,
                          static_cast<std::uint64_t>(c.eval_samples), static_cast<std::uint64_t>(c.w1_projections),
                          static_cast<std::uint64_t>(data.kind()), static_cast<std::uint64_t>(spec.z_dim),
                          static_cast<std::uint64_t>(spec.data_dim)})
    w.put(v);
  put_spec(w, spec.generator);
  put_spec(w, spec.discriminator);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : w.bytes()) h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
  return h;
}

}  // namespace

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  detail::BinaryWriter w;
  w.put(kCheckpointMagic);
  w.put(fingerprint(config_, spec_, sampler_));
  w.put(t_);
  w.put(horizon_);
  w.put(g_updates_);
  w.put(d_updates_);
  w.put(last_d_loss_);
  w.put(last_g_loss_);
  w.put_string(data_rng_.state());
  w.put_string(latent_rng_.state());
  w.put_string(explore_rng_.state());
  put_net(w, G_);
  put_net(w, D_);
  for (const ItopTracker* tr : {&g_tracker_, &d_tracker_}) {
    w.put<std::uint64_t>(tr->seen().size());
    for (const auto& s : tr->seen()) w.put_vector(s);
  }
  w.put(ledger_.state());
  w.put<std::uint64_t>(metrics_.size());
  for (const auto& m : metrics_) {
    w.put(m.step);
    for (double v : {m.d_loss, m.g_loss, m.coverage, m.hq_ratio, m.w1, m.itop_rate, m.flops_cum}) w.put(v);
    w.put_vector(m.g_active);
    w.put_vector(m.d_active);
    w.put(m.g_mask_hash);
    w.put(m.d_mask_hash);
  }
  w.put<std::uint64_t>(events_.size());
  for (const auto& e : events_) {
    w.put(e.step);
    w.put_string(e.net);
    w.put<std::uint64_t>(e.layer);
    w.put<std::uint64_t>(e.k);
    w.put<std::uint64_t>(e.active_before);
    w.put<std::uint64_t>(e.active_after);
    w.put(e.hash_before);
    w.put(e.hash_after);
  }
  w.put<std::uint64_t>(snapshots_.size());
  for (const auto& s : snapshots_) {
    w.put(s.step);
    put_masks(w, s.g);
    put_masks(w, s.d);
  }
  w.put<std::uint8_t>(diverged_ ? 1 : 0);
  w.put_string(failure_);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!f) throw IoError("write failed for checkpoint " + path.string());
}

void Trainer::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read checkpoint " + path.string());
  detail::BinaryReader r(std::string(std::istreambuf_iterator<char>(f), {}));
  if (r.get<std::uint64_t>() != kCheckpointMagic) throw IoError("not a checkpoint: " + path.string());
  if (r.get<std::uint64_t>() != fingerprint(config_, spec_, sampler_)) {
    throw IoError("checkpoint was written by a different configuration");
  }
  t_ = r.get<std::uint64_t>();
  horizon_ = r.get<std::uint64_t>();
  g_updates_ = r.get<std::uint64_t>();
  d_updates_ = r.get<std::uint64_t>();
  last_d_loss_ = r.get<double>();
  last_g_loss_ = r.get<double>();
  data_rng_.set_state(r.get_string());
  latent_rng_.set_state(r.get_string());
  explore_rng_.set_state(r.get_string());
  get_net(r, G_);
  get_net(r, D_);
  for (ItopTracker* tr : {&g_tracker_, &d_tracker_}) {
    std::vector<std::vector<std::uint8_t>> seen(r.get<std::uint64_t>());
    for (auto& s : seen) s = r.get_vector<std::uint8_t>();
    tr->restore(std::move(seen));
  }
  ledger_.restore(r.get<FlopsLedger::State>());
  metrics_.assign(r.get<std::uint64_t>(), MetricsRow{});
  for (auto& m : metrics_) {
    m.step = r.get<std::uint64_t>();
    for (double* v : {&m.d_loss, &m.g_loss, &m.coverage, &m.hq_ratio, &m.w1, &m.itop_rate, &m.flops_cum}) {
      *v = r.get<double>();
    }
    m.g_active = r.get_vector<std::size_t>();
    m.d_active = r.get_vector<std::size_t>();
    m.g_mask_hash = r.get<std::uint64_t>();
    m.d_mask_hash = r.get<std::uint64_t>();
  }
  events_.assign(r.get<std::uint64_t>(), ExplorationEvent{});
  for (auto& e : events_) {
    e.step = r.get<std::uint64_t>();
    e.net = r.get_string();
    e.layer = r.get<std::uint64_t>();
    e.k = r.get<std::uint64_t>();
    e.active_before = r.get<std::uint64_t>();
    e.active_after = r.get<std::uint64_t>();
    e.hash_before = r.get<std::uint64_t>();
    e.hash_after = r.get<std::uint64_t>();
  }
  snapshots_.assign(r.get<std::uint64_t>(), MaskSnapshot{});
  for (auto& s : snapshots_) {
    s.step = r.get<std::uint64_t>();
    s.g = get_masks(r);
    s.d = get_masks(r);
  }
  diverged_ = r.get<std::uint8_t>() != 0;
  failure_ = r.get_string();
  if (!r.done()) throw IoError("checkpoint has trailing bytes");
}

RunResult train(const TrainConfig& config, const GanSpec& spec, const DataSampler& sampler, TrainProbe probe) {
  Trainer trainer(config, spec, sampler);
  trainer.set_probe(std::move(probe));
  trainer.run();
  return trainer.result();
}

RunResult run_pf(const TrainConfig& config, const GanSpec& spec, const DataSampler& sampler, PruneMode mode,
                 PruneTarget target) {
  TrainConfig dense = config;
  dense.s_G = 0.0;
  dense.s_D = 0.0;
  dense.explore_target = ExploreTarget::none;
  Trainer trainer(dense, spec, sampler);
  trainer.run();
  if (!trainer.diverged()) {
    trainer.prune_and_extend(mode, target, config.s_G, target == PruneTarget::G_and_D ? config.s_D : 0.0,
                             config.steps);
    trainer.run();
  }
  RunResult r = trainer.result();
  r.config = config;
  r.config.explore_target = ExploreTarget::none;
  return r;
}

}  // namespace sparse_evolve
