/*
 *   Copyright 2026 The adjnorm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file report.hpp
 *
 * Metrics CSV rows and self-contained SVG line charts.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adjnorm/common.hpp"

namespace adjnorm {

/// One metrics CSV line. Summary rows carry seed "mean" and fill the *_std columns.
struct MetricsRow {
  std::string dataset;
  std::string backbone;
  double r = 0.0;
  std::size_t layers = 0;
  std::string seed;
  std::size_t k = 0;
  std::optional<double> recall, ndcg, nov, pru;
  std::size_t num_users_evaluated = 0;
  double l2_lambda = 0.0;
  std::string baseline = "NONE";
  double baseline_alpha = 0.0;
  std::string status = "ok";
  std::optional<double> recall_std, ndcg_std, nov_std, pru_std;

  bool is_summary() const { return seed == "mean"; }
};

inline const char* metrics_csv_header() {
  return "dataset,backbone,r,L,seed,K,recall,ndcg,nov,pru,num_users_evaluated,l2,baseline,baseline_alpha,status,"
         "recall_std,ndcg_std,nov_std,pru_std";
}

inline std::string format_real(double v, int precision = 10) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::setprecision(precision) << v;
  return ss.str();
}

namespace detail {
inline std::string opt_cell(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

inline std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::istringstream ss(s);
  ss.imbue(std::locale::classic());
  double v = 0.0;
  if (!(ss >> v)) throw DataError("metrics csv: bad number '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}
}  // namespace detail

inline std::string to_csv(const MetricsRow& m) {
  std::ostringstream ss;
  ss << m.dataset << ',' << m.backbone << ',' << format_real(m.r) << ',' << m.layers << ',' << m.seed << ',' << m.k << ','
     << detail::opt_cell(m.recall) << ',' << detail::opt_cell(m.ndcg) << ',' << detail::opt_cell(m.nov) << ','
     << detail::opt_cell(m.pru) << ',' << m.num_users_evaluated << ',' << format_real(m.l2_lambda) << ',' << m.baseline
     << ',' << format_real(m.baseline_alpha) << ',' << m.status << ',' << detail::opt_cell(m.recall_std) << ','
     << detail::opt_cell(m.ndcg_std) << ',' << detail::opt_cell(m.nov_std) << ',' << detail::opt_cell(m.pru_std);
  return ss.str();
}

inline void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << metrics_csv_header() << '\n';
  for (const auto& row : rows) out << to_csv(row) << '\n';
}

inline std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header()) throw DataError(path.string() + ": unexpected header");
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = detail::split_csv(line);
    if (c.size() != 19) throw ParseError(path.string() + ": expected 19 columns", lineno);
    MetricsRow m;
    m.dataset = c[0];
    m.backbone = c[1];
    m.r = *detail::parse_opt(c[2]);
    m.layers = static_cast<std::size_t>(*detail::parse_opt(c[3]));
    m.seed = c[4];
    m.k = static_cast<std::size_t>(*detail::parse_opt(c[5]));
    m.recall = detail::parse_opt(c[6]);
    m.ndcg = detail::parse_opt(c[7]);
    m.nov = detail::parse_opt(c[8]);
    m.pru = detail::parse_opt(c[9]);
    m.num_users_evaluated = static_cast<std::size_t>(*detail::parse_opt(c[10]));
    m.l2_lambda = *detail::parse_opt(c[11]);
    m.baseline = c[12];
    m.baseline_alpha = *detail::parse_opt(c[13]);
    m.status = c[14];
    m.recall_std = detail::parse_opt(c[15]);
    m.ndcg_std = detail::parse_opt(c[16]);
    m.nov_std = detail::parse_opt(c[17]);
    m.pru_std = detail::parse_opt(c[18]);
    rows.push_back(std::move(m));
  }
  return rows;
}

/// Mean and population standard deviation of the successful per-seed rows.
inline MetricsRow summarize(const std::vector<MetricsRow>& seed_rows) {
  if (seed_rows.empty()) throw ArgumentError("summarize: no rows");
  MetricsRow s = seed_rows.front();
  s.seed = "mean";
  s.num_users_evaluated = 0;
  auto stats = [&](auto field) -> std::pair<std::optional<double>, std::optional<double>> {
    std::vector<double> xs;
    for (const auto& r : seed_rows)
      if (r.status == "ok" && (r.*field)) xs.push_back(*(r.*field));
    if (xs.empty()) return {std::nullopt, std::nullopt};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= double(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / double(xs.size()))};
  };
  std::tie(s.recall, s.recall_std) = stats(&MetricsRow::recall);
  std::tie(s.ndcg, s.ndcg_std) = stats(&MetricsRow::ndcg);
  std::tie(s.nov, s.nov_std) = stats(&MetricsRow::nov);
  std::tie(s.pru, s.pru_std) = stats(&MetricsRow::pru);
  for (const auto& r : seed_rows)
    if (r.status == "ok") s.num_users_evaluated = std::max(s.num_users_evaluated, r.num_users_evaluated);
  const bool any_failed =
      std::any_of(seed_rows.begin(), seed_rows.end(), [](const MetricsRow& r) { return r.status != "ok"; });
  s.status = !s.recall ? "failed" : (any_failed ? "partial" : "ok");
  return s;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct ChartPanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

namespace detail {
inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}
}  // namespace detail

/// Panels side by side, one polyline with markers per series.
inline std::string render_svg(const std::vector<ChartPanel>& panels) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double pw = 420, ph = 320, ml = 70, mr = 20, mt = 40, mb = 55;
  std::ostringstream svg;
  svg.imbue(std::locale::classic());
  svg << std::setprecision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pw * double(panels.size()) << "\" height=\"" << ph
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const double ox = pw * double(p);
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : panel.series)
      for (auto [x, y] : s.points) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
    if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
    const double pad = 0.08 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const double x0 = ox + ml, x1 = ox + pw - mr, y0 = ph - mb, y1 = mt;
    auto sx = [&](double x) { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); };
    auto sy = [&](double y) { return y0 - (y - ymin) / (ymax - ymin) * (y0 - y1); };

    svg << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << detail::svg_escape(panel.title) << "</text>\n";
    svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double xv = xmin + (xmax - xmin) * t / 4.0;
      const double yv = ymin + (ymax - ymin) * t / 4.0;
      svg << "<text x=\"" << sx(xv) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << format_real(xv, 3)
          << "</text>\n";
      svg << "<text x=\"" << x0 - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << format_real(yv, 3)
          << "</text>\n";
      svg << "<line x1=\"" << x0 << "\" y1=\"" << sy(yv) << "\" x2=\"" << x1 << "\" y2=\"" << sy(yv)
          << "\" stroke=\"#e0e0e0\"/>\n";
    }
    svg << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << ph - 14 << "\" text-anchor=\"middle\">"
        << detail::svg_escape(panel.x_label) << "</text>\n";
    svg << "<text transform=\"translate(" << ox + 16 << ',' << (y0 + y1) / 2
        << ") rotate(-90)\" text-anchor=\"middle\">" << detail::svg_escape(panel.y_label) << "</text>\n";
    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const auto& series = panel.series[s];
      const char* color = palette[s % 6];
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (auto [x, y] : series.points) svg << sx(x) << ',' << sy(y) << ' ';
      svg << "\"/>\n";
      for (auto [x, y] : series.points)
        svg << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      svg << "<text x=\"" << x1 - 4 << "\" y=\"" << y1 + 14 * double(s + 1) << "\" text-anchor=\"end\" fill=\"" << color
          << "\">" << detail::svg_escape(series.name) << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

/**
 * Two panels (Recall/NDCG and Nov/PRU) against the varying axis, from the
 * summary rows at cutoff k.
 */
inline std::string sweep_chart(const std::vector<MetricsRow>& rows, const std::string& axis, std::size_t k) {
  std::map<double, const MetricsRow*> by_x;
  for (const auto& row : rows) {
    if (!row.is_summary() || row.k != k || !row.recall) continue;
    by_x[axis == "depth" ? double(row.layers) : row.r] = &row;
  }
  auto series = [&](const std::string& name, std::optional<double> MetricsRow::*field) {
    Series s{name, {}};
    for (auto [x, row] : by_x)
      if ((row->*field)) s.points.emplace_back(x, *(row->*field));
    return s;
  };
  const std::string xl = axis == "depth" ? "propagation layers L" : "normalization coefficient r";
  const std::string suffix = "@" + std::to_string(k);
  ChartPanel acc{"Accuracy", xl, "metric value",
                 {series("Recall" + suffix, &MetricsRow::recall), series("NDCG" + suffix, &MetricsRow::ndcg)}};
  ChartPanel nov{"Novelty", xl, "metric value",
                 {series("Nov" + suffix, &MetricsRow::nov), series("PRU" + suffix, &MetricsRow::pru)}};
  return render_svg({acc, nov});
}

}  // namespace adjnorm
