// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparse_evolve/config.hpp"

namespace sparse_evolve {

/// Header plus rows of a CSV file without quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name`; throws IoError naming the column when absent.
  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);

struct ReportPoint {
  double s_G = 0.0;
  std::size_t n = 0;
  double coverage_mean = 0.0;
  double coverage_std = 0.0;
  double w1_mean = 0.0;
  double w1_std = 0.0;
};

/// One line of a plot: a (method, explore_target, s_D) triple over s_G.
struct ReportSeries {
  std::string method;
  std::string explore_target;
  double s_D = 0.0;
  std::vector<ReportPoint> points;  // ascending s_G

  std::string label() const;
};

/// Groups a results.csv by series and s_G. Empty tables and missing
/// columns are errors.
std::vector<ReportSeries> summarize_results(const CsvTable& table);

std::string summary_markdown(const std::vector<ReportSeries>& series);

enum class PlotMetric { coverage, w1 };
/// Self-contained SVG line plot of the metric against s_G.
std::string render_svg(const std::vector<ReportSeries>& series, PlotMetric metric);

/// Writes summary.md, coverage_vs_sG.svg and w1_vs_sG.svg into `out`.
void write_report(const std::filesystem::path& results_csv, const std::filesystem::path& out);

struct FlopsCell {
  double train = 0.0;
  double test = 0.0;
};

/// Analytical training and testing FLOPs ratios against dense training for
/// each method row and s_G column, in the layout of the usual comparison
/// table. PF (global) layer densities come from magnitude-pruning the
/// seed's initial weights.
struct FlopsTable {
  std::vector<double> s_G;
  std::vector<std::string> rows;
  std::vector<std::vector<FlopsCell>> cells;  // [row][column]
};

FlopsTable flops_table(const RunConfig& base, const std::vector<double>& s_G, const std::vector<double>& s_D);
std::string format_flops_table(const FlopsTable& t);
nlohmann::json to_json(const FlopsTable& t);

}  // namespace sparse_evolve
