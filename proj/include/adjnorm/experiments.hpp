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
 * @file experiments.hpp
 *
 * Orchestration behind the command line tool: dataset preparation,
 * multi-seed training and evaluation, sweeps over r or depth, and the
 * propagation-limit verification report.
 *
 * Output layout under output.dir:
 *   data/                      prepared split (unless dataset.prepared_dir is set)
 *   metrics.csv                per-seed rows plus one summary row per K
 *   {run_id}/best.ckpt         best-validation checkpoint
 *   {run_id}/train_log.csv     epoch,loss,val_recall@20,elapsed_ms
 *   sweep/{axis}_{value}/      one run directory per sweep cell
 *   sweep.csv, sweep.svg       consolidated sweep results
 */

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adjnorm/baselines.hpp"
#include "adjnorm/common.hpp"
#include "adjnorm/config.hpp"
#include "adjnorm/dataset.hpp"
#include "adjnorm/metrics.hpp"
#include "adjnorm/models.hpp"
#include "adjnorm/report.hpp"
#include "adjnorm/sparse.hpp"
#include "adjnorm/theory.hpp"
#include "adjnorm/training.hpp"

namespace adjnorm {

/// Runs kcore filtering and the split, writes the files and prints the stats table.
inline InteractionDataset run_prepare(const ExperimentConfig& cfg, std::ostream& report) {
  RawInteractions raw;
  if (cfg.dataset_path) {
    if (!std::filesystem::exists(*cfg.dataset_path))
      throw DataError("dataset file does not exist: " + cfg.dataset_path->string());
    raw = ingest(*cfg.dataset_path);
  } else {
    const auto& s = *cfg.synth;
    raw = synth_powerlaw(s.num_users, s.num_items, s.per_user, s.zipf, s.seed);
  }
  const auto filtered = kcore_filter(raw, cfg.split.kcore_min);
  if (filtered.empty())
    throw DataError("no interactions survive " + std::to_string(cfg.split.kcore_min) + "-core filtering");
  auto ds = split(filtered, cfg.split);
  write_split(ds, cfg.prepared_dir());

  const std::size_t total = ds.train.size() + ds.val.size() + ds.test.size();
  report << std::left << std::setw(16) << "Dataset" << std::setw(10) << "#Users" << std::setw(10) << "#Items"
         << std::setw(15) << "#Interactions" << "Sparsity\n";
  report << std::setw(16) << cfg.dataset_name << std::setw(10) << ds.num_users << std::setw(10) << ds.num_items
         << std::setw(15) << total << std::fixed << std::setprecision(4) << 100.0 * density(ds) << "%\n";
  report << std::defaultfloat << "split: train=" << ds.train.size() << " val=" << ds.val.size()
         << " test=" << ds.test.size() << "  -> " << cfg.prepared_dir().string() << '\n';
  return ds;
}

inline std::string run_id(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::ostringstream ss;
  ss << to_string(cfg.model.backbone) << "_r" << format_real(cfg.model.r) << "_L" << cfg.model.layers;
  if (cfg.baseline.kind != BaselineKind::none)
    ss << '_' << to_string(cfg.baseline.kind) << format_real(cfg.baseline.alpha);
  ss << "_seed" << seed;
  return ss.str();
}

inline MetricsRow provenance_row(const ExperimentConfig& cfg, const std::string& seed, std::size_t k) {
  MetricsRow row;
  row.dataset = cfg.dataset_name;
  row.backbone = to_string(cfg.model.backbone);
  row.r = cfg.model.r;
  row.layers = cfg.model.layers;
  row.seed = seed;
  row.k = k;
  row.l2_lambda = cfg.train.l2_lambda;
  row.baseline = to_string(cfg.baseline.kind);
  row.baseline_alpha = cfg.baseline.alpha;
  return row;
}

/// Test-split metrics of a table for every configured cutoff.
inline std::vector<MetricsRow> evaluate_table(const ExperimentConfig& cfg, const InteractionDataset& ds,
                                              const ModelSpec& spec, const EmbeddingTable& table,
                                              const std::string& seed_label) {
  const auto P = propagation_for(spec, ds);
  const auto cache = forward(spec, P, table);
  std::vector<MetricsRow> rows;
  for (auto k : cfg.ks) {
    RankOptions opt;
    opt.k = k;
    opt.target = SplitPart::test;
    if (cfg.baseline.kind == BaselineKind::pc) opt.pc_alpha = cfg.baseline.alpha;
    const auto rep = evaluate(rank_topk(cache.combined, ds, opt), ds);
    auto row = provenance_row(cfg, seed_label, k);
    row.recall = rep.recall;
    row.ndcg = rep.ndcg;
    row.nov = rep.nov;
    row.pru = rep.pru;
    row.num_users_evaluated = rep.num_evaluated_users;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_train_log(const std::filesystem::path& path, const TrainResult& res) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,loss,val_recall@20,elapsed_ms\n";
  for (const auto& row : res.log)
    out << row.epoch << ',' << format_real(row.loss) << ',' << (row.val_recall ? format_real(*row.val_recall) : "")
        << ',' << format_real(row.elapsed_ms, 6) << '\n';
}

/// Per-seed and summary rows in output order: for each K, the seeds then "mean".
inline std::vector<MetricsRow> order_with_summaries(const ExperimentConfig& cfg, const std::vector<MetricsRow>& seed_rows) {
  std::vector<MetricsRow> out;
  for (auto k : cfg.ks) {
    std::vector<MetricsRow> group;
    for (const auto& r : seed_rows)
      if (r.k == k) group.push_back(r);
    out.insert(out.end(), group.begin(), group.end());
    out.push_back(summarize(group));
  }
  return out;
}

/**
 * Trains once per seed with early stopping, evaluates the best checkpoint
 * on the test split and writes metrics.csv. A numerical failure marks that
 * seed failed and the remaining seeds still run.
 */
inline std::vector<MetricsRow> run_train_eval(const ExperimentConfig& cfg, std::ostream& log) {
  const auto ds = load_split(cfg.prepared_dir());
  std::vector<MetricsRow> seed_rows;
  for (auto seed : cfg.seeds) {
    const auto id = run_id(cfg, seed);
    const auto dir = cfg.output_dir / id;
    std::filesystem::create_directories(dir);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    try {
      const auto res = train(ds, cfg.model, tc, cfg.baseline);
      write_train_log(dir / "train_log.csv", res);
      save_checkpoint(dir / "best.ckpt", cfg.model, res.best, seed);
      auto rows = evaluate_table(cfg, ds, cfg.model, res.best, std::to_string(seed));
      log << id << ": best epoch " << res.best_epoch << ", val Recall@20 " << format_real(res.best_val_recall, 5);
      for (const auto& r : rows)
        log << " | K=" << r.k << " recall " << format_real(*r.recall, 5) << " ndcg " << format_real(*r.ndcg, 5)
            << " nov " << format_real(*r.nov, 5) << " pru " << format_real(*r.pru, 5);
      log << '\n';
      seed_rows.insert(seed_rows.end(), rows.begin(), rows.end());
    } catch (const NumericalError& e) {
      log << id << ": FAILED (" << e.what() << ")\n";
      std::ofstream(dir / "FAILED") << e.what() << '\n';
      for (auto k : cfg.ks) {
        auto row = provenance_row(cfg, std::to_string(seed), k);
        row.status = "failed";
        seed_rows.push_back(std::move(row));
      }
    }
  }
  auto rows = order_with_summaries(cfg, seed_rows);
  write_metrics_csv(cfg.output_dir / "metrics.csv", rows);
  return rows;
}

/// Evaluates a saved checkpoint on the test split; writes eval_metrics.csv.
inline std::vector<MetricsRow> run_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint) {
  const auto ds = load_split(cfg.prepared_dir());
  const auto ck = load_checkpoint(checkpoint);
  if (ck.table.num_users != ds.num_users || ck.table.num_items != ds.num_items)
    throw DataError("checkpoint does not match the prepared dataset: " + checkpoint.string());
  ExperimentConfig c = cfg;
  c.model = ck.spec;
  auto rows = evaluate_table(c, ds, ck.spec, ck.table, std::to_string(ck.seed));
  write_metrics_csv(cfg.output_dir / "eval_metrics.csv", rows);
  return rows;
}

enum class SweepAxis { r, depth };

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "r" || s == "R") return SweepAxis::r;
  if (s == "depth" || s == "DEPTH" || s == "L") return SweepAxis::depth;
  throw ConfigError("unknown sweep axis '" + s + "' (expected r or depth)");
}

inline std::string to_string(SweepAxis a) { return a == SweepAxis::r ? "r" : "depth"; }

struct SweepSpec {
  SweepAxis axis = SweepAxis::r;
  std::vector<double> values;

  void validate() const {
    if (values.empty()) throw ConfigError("sweep values must be nonempty");
    for (std::size_t k = 1; k < values.size(); ++k)
      if (!(values[k] > values[k - 1])) throw ConfigError("sweep values must be strictly increasing");
    if (axis == SweepAxis::depth)
      for (double v : values)
        if (v < 0 || v != std::floor(v)) throw ConfigError("depth sweep values must be non-negative integers");
  }
};

inline ExperimentConfig sweep_cell(const ExperimentConfig& base, SweepAxis axis, double value) {
  ExperimentConfig c = base;
  c.data_dir = base.prepared_dir();
  if (axis == SweepAxis::r) c.model.r = value;
  else c.model.layers = static_cast<std::size_t>(value);
  c.output_dir = base.output_dir / "sweep" / (to_string(axis) + "_" + format_real(value));
  return c;
}

/**
 * Runs run_train_eval per sweep value with everything else fixed, then
 * writes sweep.csv and sweep.svg under output.dir. With `parallel`, cells
 * run concurrently in separate output directories.
 */
inline std::vector<MetricsRow> run_sweep(const ExperimentConfig& base, const SweepSpec& sweep, bool parallel,
                                         std::ostream& log) {
  sweep.validate();
  if (sweep.axis == SweepAxis::depth && base.model.backbone == Backbone::mf)
    throw ConfigError("depth sweep is meaningless for the MF backbone");
  std::vector<std::vector<MetricsRow>> per_cell(sweep.values.size());
  auto run_cell = [&](std::size_t idx, std::ostream& cell_log) {
    const auto cell = sweep_cell(base, sweep.axis, sweep.values[idx]);
    try {
      per_cell[idx] = run_train_eval(cell, cell_log);
    } catch (const Error& e) {
      cell_log << "cell " << to_string(sweep.axis) << '=' << format_real(sweep.values[idx]) << " failed: " << e.what()
               << '\n';
      for (auto k : cell.ks) {
        auto row = provenance_row(cell, "mean", k);
        row.status = "failed";
        per_cell[idx].push_back(std::move(row));
      }
    }
  };
  if (parallel) {
    std::vector<std::ostringstream> logs(sweep.values.size());
    std::vector<std::future<void>> futures;
    for (std::size_t idx = 0; idx < sweep.values.size(); ++idx)
      futures.push_back(std::async(std::launch::async, [&, idx] { run_cell(idx, logs[idx]); }));
    for (auto& f : futures) f.get();
    for (auto& l : logs) log << l.str();
  } else {
    for (std::size_t idx = 0; idx < sweep.values.size(); ++idx) run_cell(idx, log);
  }
  std::vector<MetricsRow> all;
  for (auto& rows : per_cell) all.insert(all.end(), rows.begin(), rows.end());
  write_metrics_csv(base.output_dir / "sweep.csv", all);
  const std::size_t k = std::find(base.ks.begin(), base.ks.end(), 20) != base.ks.end() ? 20 : base.ks.front();
  std::ofstream(base.output_dir / "sweep.svg", std::ios::binary) << sweep_chart(all, to_string(sweep.axis), k);
  return all;
}

/// Regenerates sweep.svg (or metrics.svg) from the CSV files in dir.
inline std::vector<std::filesystem::path> run_report(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  for (const char* name : {"sweep", "metrics"}) {
    const auto csv = dir / (std::string(name) + ".csv");
    if (!std::filesystem::exists(csv)) continue;
    const auto rows = read_metrics_csv(csv);
    std::vector<double> rs;
    std::vector<std::size_t> ls;
    std::size_t k = 0;
    for (const auto& r : rows) {
      if (!r.is_summary()) continue;
      rs.push_back(r.r);
      ls.push_back(r.layers);
      if (k == 0 || r.k == 20) k = r.k;
    }
    std::sort(rs.begin(), rs.end());
    rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
    std::sort(ls.begin(), ls.end());
    ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
    const std::string axis = (ls.size() > 1 && rs.size() <= 1) ? "depth" : "r";
    const auto svg = dir / (std::string(name) + ".svg");
    std::ofstream(svg, std::ios::binary) << sweep_chart(rows, axis, k == 0 ? 20 : k);
    written.push_back(svg);
  }
  if (written.empty()) throw DataError("no sweep.csv or metrics.csv found in " + dir.string());
  return written;
}

struct TheoryParams {
  std::vector<std::size_t> sizes{10, 20, 40};
  std::vector<double> rs{0.0, 0.5, 1.0, 1.25, 1.5};
  std::size_t graphs_per_cell = 20;
  double tol = 1e-8;
  std::size_t l_max = 10000;
  double extra_edge_prob = 0.15;
  std::uint64_t seed = 2022;
};

struct TheoryCell {
  std::size_t size = 0;
  double r = 0.0;
  std::size_t graphs = 0;
  std::size_t converged = 0;
  std::size_t max_l_star = 0;
  double max_final_error = 0.0;
  std::size_t triples = 0;
  std::size_t ordering_violations = 0;
  double max_abs_diff = 0.0;

  bool passed() const noexcept { return converged == graphs && ordering_violations == 0; }
};

/// Random connected graphs per (size, r) cell through convergence and ordering checks.
inline std::vector<TheoryCell> run_verify_theory(const TheoryParams& params, std::ostream& out) {
  std::vector<TheoryCell> cells;
  out << "size      r  graphs  converged  max_l*  max_error     triples  violations  max|diff|\n";
  for (auto n : params.sizes) {
    for (double r : params.rs) {
      TheoryCell cell;
      cell.size = n;
      cell.r = r;
      std::mt19937_64 rng(params.seed + 7919 * n);
      for (std::size_t g = 0; g < params.graphs_per_cell; ++g) {
        const auto adj = random_connected_graph(n, params.extra_edge_prob, rng);
        const auto conv = convergence_check(adj, r, params.tol, params.l_max);
        ++cell.graphs;
        cell.max_final_error = std::max(cell.max_final_error, conv.final_error);
        if (conv.converged()) {
          ++cell.converged;
          cell.max_l_star = std::max(cell.max_l_star, *conv.l_star);
        }
        const auto ord = ordering_check(adj, r, params.seed + g);
        cell.triples += ord.triples;
        cell.ordering_violations += ord.violations;
        cell.max_abs_diff = std::max(cell.max_abs_diff, ord.max_abs_diff);
      }
      out << std::left << std::setw(6) << n << std::right << std::setw(5) << format_real(r, 4) << std::setw(8)
          << cell.graphs << std::setw(11) << cell.converged << std::setw(8)
          << (cell.converged ? std::to_string(cell.max_l_star) : std::string("NOT_CONVERGED")) << "  " << std::setw(10)
          << format_real(cell.max_final_error, 3) << std::setw(12) << cell.triples << std::setw(12)
          << cell.ordering_violations << "  " << format_real(cell.max_abs_diff, 3)
          << (cell.passed() ? "  PASS" : "  FAIL") << '\n';
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace adjnorm
