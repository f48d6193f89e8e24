// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/config.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "sparse_evolve/error.hpp"

namespace sparse_evolve {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::array<std::pair<const char*, E>, N>& table, const std::string& s, const char* what) {
  for (const auto& [name, value] : table) {
    if (s == name) return value;
  }
  std::string options;
  for (const auto& [name, value] : table) options += std::string(options.empty() ? "" : ", ") + name;
  throw ConfigError(std::string("unknown ") + what + " '" + s + "' (expected one of: " + options + ")");
}

template <typename E, std::size_t N>
std::string enum_name(const std::array<std::pair<const char*, E>, N>& table, E v) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  throw ContractError("enum value without a name");
}

constexpr std::array<std::pair<const char*, Method>, 5> kMethods{{{"stu", Method::stu},
                                                                  {"static", Method::static_sparse},
                                                                  {"dense", Method::dense},
                                                                  {"pf_global", Method::pf_global},
                                                                  {"pf_uniform", Method::pf_uniform}}};
constexpr std::array<std::pair<const char*, ExploreTarget>, 4> kTargets{
    {{"none", ExploreTarget::none}, {"G", ExploreTarget::G}, {"D", ExploreTarget::D}, {"both", ExploreTarget::both}}};
constexpr std::array<std::pair<const char*, PruneTarget>, 2> kPruneTargets{
    {{"G", PruneTarget::G}, {"G_and_D", PruneTarget::G_and_D}}};
constexpr std::array<std::pair<const char*, Allocation>, 3> kAllocations{
    {{"uniform", Allocation::uniform}, {"er", Allocation::er}, {"erk", Allocation::erk}}};
constexpr std::array<std::pair<const char*, Decay>, 2> kDecays{{{"cosine", Decay::cosine}, {"constant", Decay::constant}}};
constexpr std::array<std::pair<const char*, LossMode>, 2> kLosses{
    {{"minimax", LossMode::minimax}, {"nonsaturating", LossMode::nonsaturating}}};
constexpr std::array<std::pair<const char*, ExploreScope>, 2> kScopes{
    {{"layer", ExploreScope::layer}, {"global", ExploreScope::global}}};
constexpr std::array<std::pair<const char*, Regrowth>, 2> kRegrowth{
    {{"gradient", Regrowth::gradient}, {"random", Regrowth::random}}};

// Reads typed fields from a JSON object and rejects leftovers.
class Fields {
 public:
  Fields(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(where("") + "expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("expected a boolean");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<std::int64_t>() < 0))
          throw ConfigError("expected a non-negative integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("expected a string");
      }
      out = it->template get<T>();
    } catch (const ConfigError& e) {
      throw ConfigError(where(key) + e.what());
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + e.what());
    }
  }

  template <typename E, std::size_t N>
  void get_enum(const char* key, const std::array<std::pair<const char*, E>, N>& table, E& out) {
    std::string s;
    if (!j_.contains(key)) {
      seen_.insert(key);
      return;
    }
    get(key, s);
    try {
      out = parse_enum(table, s, key);
    } catch (const ConfigError& e) {
      throw ConfigError(where(key) + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw ConfigError("unknown config key '" + (prefix_.empty() ? k : prefix_ + "." + k) + "'");
    }
  }

 private:
  std::string where(const char* key) const {
    const std::string p = path(key);
    return p.empty() ? std::string() : "config key '" + p + "': ";
  }

  const json& j_;
  std::string prefix_;
  std::set<std::string, std::less<>> seen_;
};

json layer_to_json(const LayerSpec& l) {
  json j;
  j["kind"] = l.kind == LayerKind::dense ? "dense" : "conv2d";
  j["fan_in"] = l.fan_in;
  j["fan_out"] = l.fan_out;
  if (l.kind == LayerKind::conv2d) {
    j["kernel"] = {l.kernel_h, l.kernel_w};
    j["input"] = {l.in_h, l.in_w};
  }
  return j;
}

LayerSpec layer_from_json(const json& j, const std::string& prefix) {
  Fields f(j, prefix);
  std::string kind = "dense";
  LayerSpec l;
  f.get("kind", kind);
  f.get("fan_in", l.fan_in);
  f.get("fan_out", l.fan_out);
  std::vector<std::size_t> kernel{1, 1};
  std::vector<std::size_t> input{1, 1};
  f.get("kernel", kernel);
  f.get("input", input);
  f.finish();
  if (kind == "dense") {
    l.kind = LayerKind::dense;
  } else if (kind == "conv2d") {
    if (kernel.size() != 2 || input.size() != 2) throw ConfigError(prefix + ": kernel and input need two entries");
    l = LayerSpec::conv(l.fan_in, l.fan_out, kernel[0], input[0], input[1]);
    l.kernel_w = kernel[1];
  } else {
    throw ConfigError("config key '" + prefix + ".kind': unknown layer kind '" + kind + "'");
  }
  return l;
}

json net_to_json(const NetSpec& n) {
  json layers = json::array();
  for (const LayerSpec& l : n.layers) layers.push_back(layer_to_json(l));
  return {{"layers", layers},
          {"hidden", to_string(n.hidden)},
          {"output", to_string(n.output)},
          {"leaky_slope", n.leaky_slope}};
}

void net_from_json(const json& j, const std::string& prefix, NetSpec& n) {
  Fields f(j, prefix);
  if (const json* layers = f.child("layers")) {
    if (!layers->is_array()) throw ConfigError("config key '" + prefix + ".layers': expected an array");
    n.layers.clear();
    for (std::size_t i = 0; i < layers->size(); ++i) {
      n.layers.push_back(layer_from_json((*layers)[i], prefix + ".layers[" + std::to_string(i) + "]"));
    }
  }
  std::string hidden = to_string(n.hidden);
  std::string output = to_string(n.output);
  f.get("hidden", hidden);
  f.get("output", output);
  f.get("leaky_slope", n.leaky_slope);
  f.finish();
  try {
    n.hidden = parse_activation(hidden);
    n.output = parse_activation(output);
  } catch (const std::exception& e) {
    throw ConfigError(prefix + ": " + e.what());
  }
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string to_string(Method m) { return enum_name(kMethods, m); }
Method parse_method(const std::string& s) { return parse_enum(kMethods, s, "method"); }
ExploreTarget parse_explore_target(const std::string& s) { return parse_enum(kTargets, s, "explore_target"); }

RunConfig::RunConfig() : gan(GanSpec::mlp(4, {64, 64}, {64, 64})) {}

void RunConfig::validate() const {
  if (!(data_sigma > 0.0)) throw ConfigError("data.sigma must be > 0");
  gan.validate();
  if (gan.data_dim != 2) throw ConfigError("gan.data_dim must be 2 for the built-in datasets");
  effective_train().validate();
}

DataSampler RunConfig::sampler() const { return DataSampler::make(data, data_sigma); }

TrainConfig RunConfig::effective_train() const {
  TrainConfig t = train;
  switch (method) {
    case Method::stu:
      break;
    case Method::static_sparse:
    case Method::pf_global:
    case Method::pf_uniform:
      t.explore_target = ExploreTarget::none;
      break;
    case Method::dense:
      t.s_G = 0.0;
      t.s_D = 0.0;
      t.explore_target = ExploreTarget::none;
      break;
  }
  return t;
}

RunConfig RunConfig::effective() const {
  RunConfig c = *this;
  c.train = effective_train();
  if (method != Method::pf_global && method != Method::pf_uniform) c.pf_target = PruneTarget::G;
  return c;
}

json to_json(const RunConfig& c) {
  const TrainConfig& t = c.train;
  json j;
  j["method"] = to_string(c.method);
  j["pf_target"] = enum_name(kPruneTargets, c.pf_target);
  j["data"] = {{"kind", to_string(c.data)}, {"sigma", c.data_sigma}};
  j["gan"] = {{"z_dim", c.gan.z_dim},
              {"data_dim", c.gan.data_dim},
              {"generator", net_to_json(c.gan.generator)},
              {"discriminator", net_to_json(c.gan.discriminator)}};
  j["s_G"] = t.s_G;
  j["s_D"] = t.s_D;
  j["allocation"] = enum_name(kAllocations, t.allocation);
  j["steps"] = t.steps;
  j["batch"] = t.batch;
  j["lr_G"] = t.lr_G;
  j["lr_D"] = t.lr_D;
  j["beta1"] = t.beta1;
  j["beta2"] = t.beta2;
  j["adam_eps"] = t.adam_eps;
  j["d_steps"] = t.d_steps;
  j["delta_t"] = t.delta_t;
  j["p0"] = t.p0;
  j["decay"] = enum_name(kDecays, t.decay);
  j["t_end_fraction"] = t.t_end_fraction;
  j["explore_target"] = to_string(t.explore_target);
  j["explore_scope"] = enum_name(kScopes, t.explore.scope);
  j["regrowth"] = enum_name(kRegrowth, t.explore.regrowth);
  j["exclude_just_pruned"] = t.explore.exclude_just_pruned;
  j["sema"] = t.sema;
  j["sema_beta"] = t.sema_beta;
  j["seed"] = t.seed;
  j["loss_mode"] = to_string(t.loss_mode);
  j["eval_interval"] = t.eval_interval;
  j["eval_samples"] = t.eval_samples;
  j["w1_projections"] = t.w1_projections;
  j["radius_mult"] = t.radius_mult;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  TrainConfig& t = c.train;
  Fields f(j, "");
  f.get_enum("method", kMethods, c.method);
  f.get_enum("pf_target", kPruneTargets, c.pf_target);
  bool sigma_given = false;
  if (const json* d = f.child("data")) {
    Fields df(*d, "data");
    std::string kind = to_string(c.data);
    df.get("kind", kind);
    sigma_given = d->contains("sigma");
    df.get("sigma", c.data_sigma);
    df.finish();
    try {
      c.data = parse_data_kind(kind);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config key 'data.kind': ") + e.what());
    }
  }
  if (!sigma_given) c.data_sigma = DataSampler::default_sigma(c.data);

  if (const json* g = f.child("gan")) {
    Fields gf(*g, "gan");
    std::size_t z_dim = c.gan.z_dim;
    std::vector<std::size_t> g_hidden{64, 64};
    std::vector<std::size_t> d_hidden{64, 64};
    gf.get("z_dim", z_dim);
    gf.get("data_dim", c.gan.data_dim);
    gf.get("g_hidden", g_hidden);
    gf.get("d_hidden", d_hidden);
    const std::size_t data_dim = c.gan.data_dim;
    c.gan = GanSpec::mlp(z_dim, g_hidden, d_hidden);
    c.gan.data_dim = data_dim;
    if (data_dim != 2 && !g->contains("generator")) throw ConfigError("gan.data_dim other than 2 needs explicit layers");
    if (const json* n = gf.child("generator")) net_from_json(*n, "gan.generator", c.gan.generator);
    if (const json* n = gf.child("discriminator")) net_from_json(*n, "gan.discriminator", c.gan.discriminator);
    gf.finish();
  }

  f.get("s_G", t.s_G);
  f.get("s_D", t.s_D);
  f.get_enum("allocation", kAllocations, t.allocation);
  f.get("steps", t.steps);
  f.get("batch", t.batch);
  f.get("lr_G", t.lr_G);
  f.get("lr_D", t.lr_D);
  f.get("beta1", t.beta1);
  f.get("beta2", t.beta2);
  f.get("adam_eps", t.adam_eps);
  f.get("d_steps", t.d_steps);
  f.get("delta_t", t.delta_t);
  f.get("p0", t.p0);
  f.get_enum("decay", kDecays, t.decay);
  f.get("t_end_fraction", t.t_end_fraction);
  f.get_enum("explore_target", kTargets, t.explore_target);
  f.get_enum("explore_scope", kScopes, t.explore.scope);
  f.get_enum("regrowth", kRegrowth, t.explore.regrowth);
  f.get("exclude_just_pruned", t.explore.exclude_just_pruned);
  f.get("sema", t.sema);
  f.get("sema_beta", t.sema_beta);
  f.get("seed", t.seed);
  f.get_enum("loss_mode", kLosses, t.loss_mode);
  f.get("eval_interval", t.eval_interval);
  f.get("eval_samples", t.eval_samples);
  f.get("w1_projections", t.w1_projections);
  f.get("radius_mult", t.radius_mult);
  f.finish();
  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

std::string canonical_dump(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(c).dump())));
  return buf;
}

void apply_override(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

RunResult execute(const RunConfig& c) {
  c.validate();
  const TrainConfig t = c.effective_train();
  switch (c.method) {
    case Method::pf_global:
      return run_pf(t, c.gan, c.sampler(), PruneMode::global, c.pf_target);
    case Method::pf_uniform:
      return run_pf(t, c.gan, c.sampler(), PruneMode::uniform, c.pf_target);
    default:
      return train(t, c.gan, c.sampler());
  }
}

}  // namespace sparse_evolve
