// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/sweep.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include "sparse_evolve/error.hpp"
#include "sparse_evolve/run_io.hpp"

namespace sparse_evolve {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
std::vector<T> read_list(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(std::string("sweep key '") + key + "': expected an array");
  if (v.empty()) throw ConfigError(std::string("sweep key '") + key + "': list is empty");
  std::vector<T> out;
  for (const json& e : v) {
    try {
      out.push_back(e.get<T>());
    } catch (const json::exception& ex) {
      throw ConfigError(std::string("sweep key '") + key + "': " + ex.what());
    }
  }
  return out;
}

std::string csv_safe(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  }
  return s;
}

double num(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) return std::nan("");
  return it->get<double>();
}

bool finished_run(const fs::path& dir, const std::string& canonical) {
  std::error_code ec;
  if (!fs::exists(dir / "result.json", ec) || !fs::exists(dir / "config.json", ec)) return false;
  try {
    return read_file(dir / "config.json") == canonical;
  } catch (const IoError&) {
    return false;
  }
}

struct Stats {
  double mean = std::nan("");
  double std = std::nan("");
};

Stats stats(const std::vector<double>& xs) {
  std::vector<double> v;
  for (double x : xs) {
    if (std::isfinite(x)) v.push_back(x);
  }
  Stats s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

json stat_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::vector<RunConfig> SweepSpec::expand() const {
  std::vector<RunConfig> out;
  const RunConfig base_cfg = run_config_from_json(base);
  const auto axis = [](const auto& list, auto fallback) {
    return list.empty() ? std::vector<decltype(fallback)>{fallback} : list;
  };
  for (Method m : axis(methods, base_cfg.method)) {
    for (ExploreTarget et : axis(explore_targets, base_cfg.train.explore_target)) {
      for (double sd : axis(s_D, base_cfg.train.s_D)) {
        for (double sg : axis(s_G, base_cfg.train.s_G)) {
          for (std::uint64_t seed : axis(seeds, base_cfg.train.seed)) {
            RunConfig c = base_cfg;
            c.method = m;
            c.train.explore_target = et;
            c.train.s_D = sd;
            c.train.s_G = sg;
            c.train.seed = seed;
            try {
              c.validate();
            } catch (const std::exception& e) {
              throw ConfigError("sweep cell (method=" + to_string(m) + ", s_G=" + format_double(sg) +
                                ", s_D=" + format_double(sd) + "): " + e.what());
            }
            out.push_back(std::move(c));
          }
        }
      }
    }
  }
  return out;
}

SweepSpec sweep_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("sweep file must hold a JSON object");
  SweepSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key == "base") {
      if (!value.is_object()) throw ConfigError("sweep key 'base': expected an object");
      s.base = value;
    } else if (key == "s_G") {
      s.s_G = read_list<double>(j, "s_G");
    } else if (key == "s_D") {
      s.s_D = read_list<double>(j, "s_D");
    } else if (key == "methods") {
      for (const std::string& m : read_list<std::string>(j, "methods")) s.methods.push_back(parse_method(m));
    } else if (key == "explore_targets") {
      for (const std::string& t : read_list<std::string>(j, "explore_targets")) {
        s.explore_targets.push_back(parse_explore_target(t));
      }
    } else if (key == "seeds") {
      s.seeds = read_list<std::uint64_t>(j, "seeds");
    } else {
      throw ConfigError("unknown sweep key '" + key + "'");
    }
  }
  s.expand();  // validates every cell
  return s;
}

SweepSpec load_sweep(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sweep file '" + path + "'");
  try {
    return sweep_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("sweep file '" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const fs::path& out, const SweepOptions& opts) {
  std::vector<SweepRow> rows;
  for (RunConfig& c : spec.expand()) {
    SweepRow r;
    r.config_hash = config_hash(c);
    r.run_hash = config_hash(c.effective());
    r.config = std::move(c);
    rows.push_back(std::move(r));
  }

  // Rows that differ only in fields the method ignores share one run.
  std::map<std::string, std::vector<std::size_t>> by_run;
  for (std::size_t i = 0; i < rows.size(); ++i) by_run[rows[i].run_hash].push_back(i);
  std::vector<const std::vector<std::size_t>*> work;
  for (const auto& [hash, idx] : by_run) work.push_back(&idx);

  std::error_code ec;
  fs::create_directories(out / "runs", ec);
  if (ec) throw IoError("cannot create '" + (out / "runs").string() + "': " + ec.message());

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t w = next++; w < work.size(); w = next++) {
      const std::vector<std::size_t>& idx = *work[w];
      const RunConfig eff = rows[idx.front()].config.effective();
      const fs::path dir = out / "runs" / rows[idx.front()].run_hash;
      json summary;
      std::string error;
      bool reused = false;
      try {
        if (finished_run(dir, canonical_dump(eff))) {
          summary = json::parse(read_file(dir / "result.json"));
          reused = true;
        } else {
          RunOutcome o = run_in_dir(eff, dir);
          summary = result_summary(eff, o.result);
        }
      } catch (const std::exception& e) {
        error = e.what();
      }
      for (std::size_t i : idx) {
        rows[i].summary = summary;
        rows[i].error = error;
        rows[i].reused = reused;
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(work.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }

  write_file(out / "results.csv", results_csv(rows));
  const json agg = aggregate(rows);
  write_file(out / "aggregate.csv", aggregate_csv(agg));
  write_file(out / "aggregate.json", agg.dump(2) + "\n");
  return rows;
}

std::string results_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "config_hash,run_hash,method,explore_target,s_G,s_D,seed,steps,coverage,hq_ratio,w1,itop_rate,"
      "train_flops_ratio,test_flops_ratio,diverged,error\n";
  for (const SweepRow& r : rows) {
    const TrainConfig& t = r.config.train;
    const bool ok = r.error.empty();
    out += r.config_hash + ',' + r.run_hash + ',' + to_string(r.config.method) + ',' + to_string(t.explore_target) +
           ',' + format_double(t.s_G) + ',' + format_double(t.s_D) + ',' + std::to_string(t.seed) + ',' +
           std::to_string(t.steps);
    for (const char* key : {"coverage", "hq_ratio", "w1", "itop_rate", "train_flops_ratio", "test_flops_ratio"}) {
      out += ',' + format_double(ok ? num(r.summary, key) : std::nan(""));
    }
    const bool diverged = ok && r.summary.value("diverged", false);
    out += std::string(",") + (diverged ? "1" : "0") + ',' + csv_safe(r.error) + '\n';
  }
  return out;
}

json aggregate(const std::vector<SweepRow>& rows) {
  // Group key: config with the seed fixed, so seeds of one cell collapse.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const SweepRow*>> groups;
  for (const SweepRow& r : rows) {
    RunConfig c = r.config;
    c.train.seed = 0;
    const std::string key = config_hash(c);
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  json out = json::array();
  for (const std::string& key : order) {
    const auto& g = groups[key];
    const TrainConfig& t = g.front()->config.train;
    std::vector<double> cov, hq, w1, itop, trf, tef;
    std::size_t failed = 0, diverged = 0;
    for (const SweepRow* r : g) {
      if (!r->error.empty()) {
        ++failed;
        continue;
      }
      if (r->summary.value("diverged", false)) ++diverged;
      cov.push_back(num(r->summary, "coverage"));
      hq.push_back(num(r->summary, "hq_ratio"));
      w1.push_back(num(r->summary, "w1"));
      itop.push_back(num(r->summary, "itop_rate"));
      trf.push_back(num(r->summary, "train_flops_ratio"));
      tef.push_back(num(r->summary, "test_flops_ratio"));
    }
    json j;
    j["group"] = key;
    j["method"] = to_string(g.front()->config.method);
    j["explore_target"] = to_string(t.explore_target);
    j["s_G"] = t.s_G;
    j["s_D"] = t.s_D;
    j["steps"] = t.steps;
    j["n"] = g.size();
    j["n_failed"] = failed;
    j["n_diverged"] = diverged;
    const auto put = [&j](const std::string& name, const std::vector<double>& xs) {
      const Stats s = stats(xs);
      j[name + "_mean"] = stat_json(s.mean);
      j[name + "_std"] = stat_json(s.std);
    };
    put("coverage", cov);
    put("hq_ratio", hq);
    put("w1", w1);
    put("itop_rate", itop);
    put("train_flops_ratio", trf);
    put("test_flops_ratio", tef);
    out.push_back(j);
  }
  return out;
}

std::string aggregate_csv(const json& agg) {
  static const char* const kStats[] = {"coverage", "hq_ratio", "w1", "itop_rate", "train_flops_ratio",
                                       "test_flops_ratio"};
  std::string out = "method,explore_target,s_G,s_D,steps,n,n_failed,n_diverged";
  for (const char* s : kStats) out += std::string(",") + s + "_mean," + s + "_std";
  out += '\n';
  for (const json& j : agg) {
    out += j["method"].get<std::string>() + ',' + j["explore_target"].get<std::string>() + ',' +
           format_double(j["s_G"].get<double>()) + ',' + format_double(j["s_D"].get<double>()) + ',' +
           std::to_string(j["steps"].get<std::uint64_t>()) + ',' + std::to_string(j["n"].get<std::size_t>()) + ',' +
           std::to_string(j["n_failed"].get<std::size_t>()) + ',' + std::to_string(j["n_diverged"].get<std::size_t>());
    for (const char* s : kStats) {
      for (const char* suffix : {"_mean", "_std"}) out += ',' + format_double(num(j, (std::string(s) + suffix).c_str()));
    }
    out += '\n';
  }
  return out;
}

}  // namespace sparse_evolve
