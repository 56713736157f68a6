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
 * @file config.hpp
 *
 * Experiment configuration in sectioned key/value (INI) form:
 *
 *   [dataset]  name, path | synth_users synth_items synth_per_user synth_zipf synth_seed,
 *              kcore, train_ratio, val_ratio, test_ratio, split_seed, prepared_dir
 *   [model]    backbone, layers, r, dim
 *   [train]    learning_rate, l2_lambda, batch_size, max_epochs, eval_every, patience, neg_alpha
 *   [baseline] kind, alpha
 *   [eval]     k (comma list), seeds (comma list)
 *   [output]   dir
 *
 * Relative paths are resolved against the directory of the config file.
 */

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adjnorm/baselines.hpp"
#include "adjnorm/common.hpp"
#include "adjnorm/dataset.hpp"
#include "adjnorm/models.hpp"
#include "adjnorm/training.hpp"

namespace adjnorm {

struct SynthParams {
  std::size_t num_users = 2000;
  std::size_t num_items = 1000;
  std::size_t per_user = 10;
  double zipf = 1.0;
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  std::string dataset_name = "dataset";
  std::optional<std::filesystem::path> dataset_path;
  std::optional<SynthParams> synth;
  SplitConfig split;
  ModelSpec model;
  TrainConfig train;
  BaselineConfig baseline;
  std::vector<std::size_t> ks{20};
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "adjnorm_out";
  std::filesystem::path data_dir;  // defaults to output_dir/data

  std::filesystem::path prepared_dir() const { return data_dir.empty() ? output_dir / "data" : data_dir; }

  void validate() const {
    if (!dataset_path && !synth) throw ConfigError("dataset: either path or synth_* parameters are required");
    split.validate();
    model.validate();
    train.validate();
    baseline.validate();
    if (seeds.empty()) throw ConfigError("eval.seeds must list at least one seed");
    if (ks.empty()) throw ConfigError("eval.k must list at least one cutoff");
    for (auto k : ks)
      if (k < 1) throw ConfigError("eval.k values must be >= 1");
  }
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    std::istringstream conv(item.substr(b, e - b + 1));
    T v{};
    if (!(conv >> v) || !conv.eof()) throw ConfigError(what + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  return out;
}

inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() ? base_dir / path : path;
  };
  ExperimentConfig c;
  try {
    c.dataset_name = tree.get<std::string>("dataset.name", c.dataset_name);
    if (auto p = tree.get_optional<std::string>("dataset.path")) c.dataset_path = resolve(*p);
    if (tree.get_optional<std::string>("dataset.synth_users")) {
      SynthParams s;
      s.num_users = tree.get<std::size_t>("dataset.synth_users");
      s.num_items = tree.get<std::size_t>("dataset.synth_items", s.num_items);
      s.per_user = tree.get<std::size_t>("dataset.synth_per_user", s.per_user);
      s.zipf = tree.get<double>("dataset.synth_zipf", s.zipf);
      s.seed = tree.get<std::uint64_t>("dataset.synth_seed", s.seed);
      c.synth = s;
    }
    c.split.kcore_min = tree.get<std::size_t>("dataset.kcore", c.split.kcore_min);
    c.split.train_ratio = tree.get<double>("dataset.train_ratio", c.split.train_ratio);
    c.split.val_ratio = tree.get<double>("dataset.val_ratio", c.split.val_ratio);
    c.split.test_ratio = tree.get<double>("dataset.test_ratio", c.split.test_ratio);
    c.split.seed = tree.get<std::uint64_t>("dataset.split_seed", c.split.seed);
    if (auto p = tree.get_optional<std::string>("dataset.prepared_dir")) c.data_dir = resolve(*p);

    c.model.backbone = parse_backbone(tree.get<std::string>("model.backbone", "LIGHTGCN"));
    c.model.layers = tree.get<std::size_t>("model.layers", c.model.backbone == Backbone::mf ? 0 : c.model.layers);
    c.model.r = tree.get<double>("model.r", c.model.r);
    c.model.dim = tree.get<std::size_t>("model.dim", c.model.dim);

    c.train.learning_rate = tree.get<double>("train.learning_rate", c.train.learning_rate);
    c.train.l2_lambda = tree.get<double>("train.l2_lambda", c.train.l2_lambda);
    c.train.batch_size = tree.get<std::size_t>("train.batch_size", c.train.batch_size);
    c.train.max_epochs = tree.get<std::size_t>("train.max_epochs", c.train.max_epochs);
    c.train.eval_every = tree.get<std::size_t>("train.eval_every", c.train.eval_every);
    c.train.patience = tree.get<std::size_t>("train.patience", c.train.patience);
    c.train.neg_alpha = tree.get<double>("train.neg_alpha", c.train.neg_alpha);

    c.baseline.kind = parse_baseline_kind(tree.get<std::string>("baseline.kind", "NONE"));
    c.baseline.alpha = tree.get<double>("baseline.alpha", 0.0);

    c.ks = parse_list<std::size_t>(tree.get<std::string>("eval.k", "20"), "eval.k");
    c.seeds = parse_list<std::uint64_t>(tree.get<std::string>("eval.seeds", "0"), "eval.seeds");

    c.output_dir = resolve(tree.get<std::string>("output.dir", c.output_dir.string()));
  } catch (const boost::property_tree::ptree_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  return parse_config(in, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace adjnorm
