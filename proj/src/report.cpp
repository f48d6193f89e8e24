// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "sparse_evolve/error.hpp"
#include "sparse_evolve/flops.hpp"
#include "sparse_evolve/run_io.hpp"
#include "sparse_evolve/topology.hpp"

namespace sparse_evolve {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const std::string& column, std::size_t row) {
  if (s == "nan" || s.empty()) return std::nan("");
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("results row " + std::to_string(row + 1) + ": column '" + column + "' holds '" + s +
                  "', not a number");
  }
}

struct Acc {
  std::vector<double> cov;
  std::vector<double> w1;
};

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  std::vector<double> v;
  for (double x : xs) {
    if (std::isfinite(x)) v.push_back(x);
  }
  if (v.empty()) return {std::nan(""), std::nan("")};
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::vector<double> pruned_densities(const Network& net, double s, PruneMode mode) {
  Network copy = net;
  const auto w = copy.weights();
  const std::vector<const SparseParam*> view(w.begin(), w.end());
  copy.apply_masks(mode == PruneMode::global ? magnitude_prune_global(view, s) : magnitude_prune_uniform(view, s));
  return copy.densities();
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError("results table is missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line, ',');
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw IoError("results row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(cells.size()) +
                    " cells, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw IoError("results table is empty");
  return t;
}

std::string ReportSeries::label() const {
  return method + (method == "stu" ? "/" + explore_target : std::string()) + " s_D=" + fmt("%g", s_D);
}

std::vector<ReportSeries> summarize_results(const CsvTable& table) {
  const std::size_t c_method = table.column("method");
  const std::size_t c_target = table.column("explore_target");
  const std::size_t c_sg = table.column("s_G");
  const std::size_t c_sd = table.column("s_D");
  const std::size_t c_cov = table.column("coverage");
  const std::size_t c_w1 = table.column("w1");
  if (table.rows.empty()) throw IoError("results table has no rows");

  using SeriesKey = std::tuple<std::string, std::string, double>;
  std::map<SeriesKey, std::map<double, Acc>> groups;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const SeriesKey key{r[c_method], r[c_target], to_double(r[c_sd], "s_D", i)};
    const double sg = to_double(r[c_sg], "s_G", i);
    if (!std::isfinite(sg) || !std::isfinite(std::get<2>(key))) {
      throw IoError("results row " + std::to_string(i + 1) + ": sparsity is not a number");
    }
    Acc& a = groups[key][sg];
    a.cov.push_back(to_double(r[c_cov], "coverage", i));
    a.w1.push_back(to_double(r[c_w1], "w1", i));
  }

  std::vector<ReportSeries> out;
  for (const auto& [key, points] : groups) {
    ReportSeries s;
    std::tie(s.method, s.explore_target, s.s_D) = key;
    for (const auto& [sg, a] : points) {
      ReportPoint p;
      p.s_G = sg;
      p.n = a.cov.size();
      std::tie(p.coverage_mean, p.coverage_std) = mean_std(a.cov);
      std::tie(p.w1_mean, p.w1_std) = mean_std(a.w1);
      s.points.push_back(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string summary_markdown(const std::vector<ReportSeries>& series) {
  std::string out = "| series | s_G | n | coverage | w1 |\n|---|---|---|---|---|\n";
  for (const ReportSeries& s : series) {
    for (const ReportPoint& p : s.points) {
      out += "| " + s.label() + " | " + fmt("%g", p.s_G) + " | " + std::to_string(p.n) + " | " +
             fmt("%.3f", p.coverage_mean) + " ± " + fmt("%.3f", p.coverage_std) + " | " + fmt("%.4f", p.w1_mean) +
             " ± " + fmt("%.4f", p.w1_std) + " |\n";
    }
  }
  return out;
}

std::string render_svg(const std::vector<ReportSeries>& series, PlotMetric metric) {
  constexpr double W = 640, H = 420, L = 70, R = 200, T = 40, B = 60;
  const double pw = W - L - R;
  const double ph = H - T - B;
  const auto value = [metric](const ReportPoint& p) { return metric == PlotMetric::coverage ? p.coverage_mean : p.w1_mean; };

  double x0 = 1.0, x1 = 0.0, y1 = 0.0;
  for (const ReportSeries& s : series) {
    for (const ReportPoint& p : s.points) {
      x0 = std::min(x0, p.s_G);
      x1 = std::max(x1, p.s_G);
      if (std::isfinite(value(p))) y1 = std::max(y1, value(p));
    }
  }
  if (x1 - x0 < 1e-9) {
    x0 -= 0.05;
    x1 += 0.05;
  }
  if (metric == PlotMetric::coverage) {
    y1 = 1.0;
  } else {
    y1 = y1 > 0.0 ? y1 * 1.1 : 1.0;
  }
  const auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  const auto sy = [&](double y) { return T + ph - y / y1 * ph; };

  const std::string title = metric == PlotMetric::coverage ? "mode coverage vs s_G" : "sliced W1 vs s_G";
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
  svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt("%.1f", L + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         title + "</text>\n";
  svg += "<line x1=\"" + fmt("%.1f", L) + "\" y1=\"" + fmt("%.1f", T + ph) + "\" x2=\"" + fmt("%.1f", L + pw) + "\" y2=\"" +
         fmt("%.1f", T + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt("%.1f", L) + "\" y1=\"" + fmt("%.1f", T) + "\" x2=\"" + fmt("%.1f", L) + "\" y2=\"" +
         fmt("%.1f", T + ph) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y1 * i / 4.0;
    svg += "<text x=\"" + fmt("%.1f", sx(xv)) + "\" y=\"" + fmt("%.1f", T + ph + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%.3g", xv) + "</text>\n";
    svg += "<text x=\"" + fmt("%.1f", L - 6) + "\" y=\"" + fmt("%.1f", sy(yv) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%.3g", yv) + "</text>\n";
  }
  svg += "<text x=\"" + fmt("%.1f", L + pw / 2) + "\" y=\"" + fmt("%.1f", H - 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">s_G</text>\n";
  svg += std::string("<text x=\"16\" y=\"") + fmt("%.1f", T + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 " +
         fmt("%.1f", T + ph / 2) + ")\">" + (metric == PlotMetric::coverage ? "coverage" : "w1") + "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const ReportSeries& s = series[i];
    const std::string color = kPalette[i % std::size(kPalette)];
    std::string pts;
    for (const ReportPoint& p : s.points) {
      if (!std::isfinite(value(p))) continue;
      pts += (pts.empty() ? "" : " ") + fmt("%.2f", sx(p.s_G)) + "," + fmt("%.2f", sy(value(p)));
    }
    if (pts.find(' ') != std::string::npos) {
      svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    }
    for (const ReportPoint& p : s.points) {
      if (!std::isfinite(value(p))) continue;
      svg += "<circle cx=\"" + fmt("%.2f", sx(p.s_G)) + "\" cy=\"" + fmt("%.2f", sy(value(p))) + "\" r=\"3\" fill=\"" +
             color + "\"/>\n";
    }
    const double ly = T + 10 + 18.0 * static_cast<double>(i);
    svg += "<line x1=\"" + fmt("%.1f", L + pw + 16) + "\" y1=\"" + fmt("%.1f", ly) + "\" x2=\"" + fmt("%.1f", L + pw + 36) +
           "\" y2=\"" + fmt("%.1f", ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt("%.1f", L + pw + 42) + "\" y=\"" + fmt("%.1f", ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape_xml(s.label()) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void write_report(const fs::path& results_csv, const fs::path& out) {
  const std::vector<ReportSeries> series = summarize_results(parse_csv(read_file(results_csv)));
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create '" + out.string() + "': " + ec.message());
  write_file(out / "summary.md", summary_markdown(series));
  write_file(out / "coverage_vs_sG.svg", render_svg(series, PlotMetric::coverage));
  write_file(out / "w1_vs_sG.svg", render_svg(series, PlotMetric::w1));
}

FlopsTable flops_table(const RunConfig& base, const std::vector<double>& s_G, const std::vector<double>& s_D) {
  const GanSpec& spec = base.gan;
  const TrainConfig& tc = base.train;
  const std::vector<double> g_dense(spec.generator.layers.size(), 1.0);
  const std::vector<double> d_dense(spec.discriminator.layers.size(), 1.0);
  const double dense_step = training_step_flops(spec, g_dense, d_dense, tc.batch, tc.d_steps).total();
  const double dense_test = testing_flops(spec, g_dense);

  Rng init = Rng::stream(tc.seed, 1);
  const Network G(spec.generator, init, "G");
  const Network D(spec.discriminator, init, "D");
  const bool both = base.pf_target == PruneTarget::G_and_D;

  FlopsTable t;
  t.s_G = s_G;
  const auto cell = [&](std::span<const double> gd, std::span<const double> dd, bool pf) {
    const double step = training_step_flops(spec, gd, dd, tc.batch, tc.d_steps).total();
    return FlopsCell{(pf ? dense_step + step : step) / dense_step, testing_flops(spec, gd) / dense_test};
  };
  const auto sparse_row = [&](const std::string& name, double sd) {
    t.rows.push_back(name);
    std::vector<FlopsCell> row;
    const std::vector<double> dd = allocate(tc.allocation, spec.discriminator.layers, sd).realized(spec.discriminator.layers);
    for (double sg : s_G) row.push_back(cell(allocate(tc.allocation, spec.generator.layers, sg).realized(spec.generator.layers), dd, false));
    t.cells.push_back(std::move(row));
  };

  t.rows.push_back("Dense");
  t.cells.emplace_back(s_G.size(), cell(g_dense, d_dense, false));
  for (PruneMode mode : {PruneMode::global, PruneMode::uniform}) {
    t.rows.push_back(std::string("PF (") + (mode == PruneMode::global ? "global" : "uniform") +
                     (both ? ", G and D s_D=" + fmt("%g", tc.s_D) : ", G") + ")");
    std::vector<FlopsCell> row;
    const std::vector<double> dd = both ? pruned_densities(D, tc.s_D, mode) : d_dense;
    for (double sg : s_G) row.push_back(cell(pruned_densities(G, sg, mode), dd, true));
    t.cells.push_back(std::move(row));
  }
  for (double sd : s_D) sparse_row("Static Sparse s_D=" + fmt("%g", sd), sd);
  for (double sd : s_D) sparse_row("STU s_D=" + fmt("%g", sd), sd);
  return t;
}

std::string format_flops_table(const FlopsTable& t) {
  std::size_t w0 = 8;
  for (const std::string& r : t.rows) w0 = std::max(w0, r.size());
  std::string out = "Method";
  out += std::string(w0 - 6, ' ');
  for (double sg : t.s_G) {
    const std::string h = "s_G=" + fmt("%g", sg);
    out += " | " + h + std::string(h.size() < 16 ? 16 - h.size() : 0, ' ');
  }
  while (out.back() == ' ') out.pop_back();
  out += '\n';
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out += t.rows[i] + std::string(w0 - t.rows[i].size(), ' ');
    for (const FlopsCell& c : t.cells[i]) {
      const std::string v = "(" + fmt("%.2f", c.train) + "x, " + fmt("%.2f", c.test) + "x)";
      out += " | " + v + std::string(v.size() < 16 ? 16 - v.size() : 0, ' ');
    }
    while (out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const FlopsTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t c = 0; c < t.s_G.size(); ++c) {
      cells.push_back({{"s_G", t.s_G[c]}, {"train", t.cells[i][c].train}, {"test", t.cells[i][c].test}});
    }
    rows.push_back({{"method", t.rows[i]}, {"cells", cells}});
  }
  return {{"rows", rows}};
}

}  // namespace sparse_evolve
