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

// Command line front end. Exit codes: 0 success, 1 usage, 2 data, 3 numerical.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "adjnorm/adjnorm.hpp"

namespace {

int code(adjnorm::ExitCode c) { return static_cast<int>(c); }

void print_rows(const std::vector<adjnorm::MetricsRow>& rows) {
  std::cout << adjnorm::metrics_csv_header() << '\n';
  for (const auto& r : rows) std::cout << adjnorm::to_csv(r) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adjnorm: r-normalized graph collaborative filtering experiments"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  std::string config;
  auto* prepare = app.add_subcommand("prepare", "Filter, split and write the dataset");
  prepare->add_option("--config", config, "Experiment config file")->required();

  auto* train = app.add_subcommand("train", "Train every seed and evaluate the best checkpoints");
  train->add_option("--config", config, "Experiment config file")->required();

  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval->add_option("--config", config, "Experiment config file")->required();
  eval->add_option("--checkpoint", checkpoint, "Checkpoint written by train")->required();

  std::string axis;
  std::string values;
  bool parallel = false;
  auto* sweep = app.add_subcommand("sweep", "Sweep r or the propagation depth");
  sweep->add_option("--config", config, "Experiment config file")->required();
  sweep->add_option("--axis", axis, "r or depth")->required();
  sweep->add_option("--values", values, "Comma-separated, strictly increasing values")->required();
  sweep->add_flag("--parallel", parallel, "Run sweep cells concurrently");

  adjnorm::TheoryParams theory;
  std::string sizes, rs;
  auto* verify = app.add_subcommand("verify-theory", "Check the propagation limit and ordering cases");
  verify->add_option("--sizes", sizes, "Comma-separated node counts (default 10,20,40)");
  verify->add_option("--rs", rs, "Comma-separated r values (default 0,0.5,1,1.25,1.5)");
  verify->add_option("--tol", theory.tol, "Max-entry tolerance vs the closed-form limit")->capture_default_str();
  verify->add_option("--graphs", theory.graphs_per_cell, "Random graphs per cell")->capture_default_str();
  verify->add_option("--lmax", theory.l_max, "Maximum power")->capture_default_str();
  verify->add_option("--seed", theory.seed, "Graph generator seed")->capture_default_str();

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Regenerate SVG plots from CSV results");
  report->add_option("--dir", report_dir, "Directory with sweep.csv or metrics.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : code(adjnorm::ExitCode::usage);
  }
  adjnorm::set_quiet(quiet);

  try {
    if (*prepare) {
      adjnorm::run_prepare(adjnorm::load_config(config), std::cout);
    } else if (*train) {
      print_rows(adjnorm::run_train_eval(adjnorm::load_config(config), std::cerr));
    } else if (*eval) {
      print_rows(adjnorm::run_eval(adjnorm::load_config(config), checkpoint));
    } else if (*sweep) {
      adjnorm::SweepSpec spec{adjnorm::parse_axis(axis), adjnorm::parse_list<double>(values, "--values")};
      const auto rows = adjnorm::run_sweep(adjnorm::load_config(config), spec, parallel, std::cerr);
      print_rows(rows);
      const bool failed = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.status == "failed"; });
      if (failed) return code(adjnorm::ExitCode::numerical);
    } else if (*verify) {
      if (!sizes.empty()) theory.sizes = adjnorm::parse_list<std::size_t>(sizes, "--sizes");
      if (!rs.empty()) theory.rs = adjnorm::parse_list<double>(rs, "--rs");
      const auto cells = adjnorm::run_verify_theory(theory, std::cout);
      const bool ok = std::all_of(cells.begin(), cells.end(), [](const auto& c) { return c.passed(); });
      std::cout << (ok ? "all cells passed\n" : "some cells FAILED\n");
      return ok ? 0 : code(adjnorm::ExitCode::numerical);
    } else if (*report) {
      for (const auto& p : adjnorm::run_report(report_dir)) std::cout << "wrote " << p.string() << '\n';
    }
  } catch (const adjnorm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(adjnorm::ExitCode::data);
  }
  return 0;
}
