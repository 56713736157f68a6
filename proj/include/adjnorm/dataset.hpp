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
 * @file dataset.hpp
 *
 * Interaction log ingestion, k-core filtering, per-user stratified
 * train/validation/test splitting and a synthetic power-law generator.
 *
 * Users and items get dense indices in order of first appearance in the
 * filtered log. All item degrees are counted over the training split only.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "adjnorm/common.hpp"

namespace adjnorm {

struct RawRecord {
  std::string user;
  std::string item;
  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

/// Deduplicated (user_key, item_key) records in first-seen order.
class RawInteractions {
 public:
  RawInteractions() = default;

  /// Collapses repeated pairs, keeping the first occurrence.
  static RawInteractions from_records(const std::vector<RawRecord>& records) {
    RawInteractions out;
    std::unordered_set<std::string> seen;
    seen.reserve(records.size() * 2);
    for (const auto& rec : records) {
      if (seen.insert(pair_key(rec)).second) out.records_.push_back(rec);
    }
    return out;
  }

  const std::vector<RawRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  friend bool operator==(const RawInteractions&, const RawInteractions&) = default;

 private:
  static std::string pair_key(const RawRecord& r) {
    std::string k;
    k.reserve(r.user.size() + r.item.size() + 1);
    k.append(r.user).push_back('\t');
    k.append(r.item);
    return k;
  }

  std::vector<RawRecord> records_;
};

struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

struct SplitConfig {
  double train_ratio = 0.7;
  double val_ratio = 0.1;
  double test_ratio = 0.2;
  std::uint64_t seed = 2022;
  std::size_t kcore_min = 10;

  void validate() const {
    if (!(train_ratio > 0 && val_ratio > 0 && test_ratio > 0))
      throw ArgumentError("split ratios must be positive");
    if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
      throw ArgumentError("split ratios must sum to 1");
    if (kcore_min < 1) throw ArgumentError("kcore_min must be >= 1");
  }
};

enum class SplitPart { train, val, test };

/// Dense-indexed split with training degrees and per-user item lists.
struct InteractionDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<Interaction> train;
  std::vector<Interaction> val;
  std::vector<Interaction> test;
  std::vector<std::uint32_t> item_degree;
  std::vector<std::uint32_t> user_degree;
  std::vector<std::vector<std::uint32_t>> user_train_items;
  std::vector<std::vector<std::uint32_t>> user_val_items;
  std::vector<std::vector<std::uint32_t>> user_test_items;
  std::vector<std::string> user_keys;
  std::vector<std::string> item_keys;

  /// Items present only in val/test have no training signal.
  bool item_is_cold(std::uint32_t item) const { return item_degree[item] == 0; }

  const std::vector<Interaction>& part(SplitPart p) const {
    switch (p) {
      case SplitPart::train: return train;
      case SplitPart::val: return val;
      default: return test;
    }
  }

  const std::vector<std::vector<std::uint32_t>>& user_items(SplitPart p) const {
    switch (p) {
      case SplitPart::train: return user_train_items;
      case SplitPart::val: return user_val_items;
      default: return user_test_items;
    }
  }

  std::uint32_t max_item_degree() const {
    return item_degree.empty() ? 0 : *std::max_element(item_degree.begin(), item_degree.end());
  }

  /// Recomputes degrees and per-user sorted lists from the triples.
  void rebuild_indexes() {
    item_degree.assign(num_items, 0);
    user_degree.assign(num_users, 0);
    auto fill = [this](const std::vector<Interaction>& src, std::vector<std::vector<std::uint32_t>>& dst) {
      dst.assign(num_users, {});
      for (const auto& x : src) {
        if (x.user >= num_users || x.item >= num_items) throw DataError("interaction index out of range");
        dst[x.user].push_back(x.item);
      }
      for (auto& v : dst) std::sort(v.begin(), v.end());
    };
    fill(train, user_train_items);
    fill(val, user_val_items);
    fill(test, user_test_items);
    for (const auto& x : train) {
      ++item_degree[x.item];
      ++user_degree[x.user];
    }
  }

  void validate() const {
    std::unordered_set<std::uint64_t> seen;
    auto key = [](const Interaction& x) { return (std::uint64_t(x.user) << 32) | x.item; };
    for (const auto* part : {&train, &val, &test}) {
      for (const auto& x : *part) {
        if (x.user >= num_users || x.item >= num_items) throw DataError("index out of range");
        if (!seen.insert(key(x)).second) throw DataError("duplicate or overlapping interaction");
      }
    }
    for (const auto* part : {&val, &test}) {
      for (const auto& x : *part) {
        if (user_degree[x.user] == 0) throw DataError("user in val/test without training interactions");
      }
    }
  }
};

/**
 * Reads `user_key<TAB>item_key[<TAB>...]` lines. Blank lines and lines
 * starting with '#' are skipped; extra columns are ignored.
 */
inline RawInteractions ingest_stream(std::istream& in) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab1 = line.find('\t');
    if (tab1 == std::string::npos) throw ParseError("expected user_key<TAB>item_key", lineno);
    const auto tab2 = line.find('\t', tab1 + 1);
    std::string user = line.substr(0, tab1);
    std::string item = line.substr(tab1 + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab1 - 1);
    if (user.empty() || item.empty()) throw ParseError("empty user or item key", lineno);
    records.push_back({std::move(user), std::move(item)});
  }
  if (records.empty()) throw DataError("input contains no interactions");
  return RawInteractions::from_records(records);
}

inline RawInteractions ingest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interaction file: " + path.string());
  try {
    return ingest_stream(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// Iteratively peels users and items with fewer than min_count interactions.
inline RawInteractions kcore_filter(const RawInteractions& raw, std::size_t min_count) {
  if (min_count < 1) throw ArgumentError("kcore_filter: min_count must be >= 1");
  const auto& recs = raw.records();
  std::unordered_map<std::string, std::size_t> user_deg, item_deg;
  for (const auto& r : recs) {
    ++user_deg[r.user];
    ++item_deg[r.item];
  }
  std::vector<char> alive(recs.size(), 1);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 0; k < recs.size(); ++k) {
      if (!alive[k]) continue;
      const auto& r = recs[k];
      if (user_deg[r.user] < min_count || item_deg[r.item] < min_count) {
        alive[k] = 0;
        --user_deg[r.user];
        --item_deg[r.item];
        changed = true;
      }
    }
  }
  std::vector<RawRecord> kept;
  for (std::size_t k = 0; k < recs.size(); ++k)
    if (alive[k]) kept.push_back(recs[k]);
  return RawInteractions::from_records(kept);
}

/**
 * Per-user stratified split. Each user's items are shuffled, then
 * floor(n*val) go to validation, floor(n*test) to test and the remainder to
 * train, always leaving at least one training interaction.
 */
inline InteractionDataset split(const RawInteractions& raw, const SplitConfig& cfg) {
  cfg.validate();
  if (raw.empty()) throw DataError("split: no interactions to split");

  InteractionDataset ds;
  std::unordered_map<std::string, std::uint32_t> user_id, item_id;
  std::vector<std::vector<std::uint32_t>> per_user;
  for (const auto& r : raw.records()) {
    auto [uit, unew] = user_id.try_emplace(r.user, static_cast<std::uint32_t>(ds.user_keys.size()));
    if (unew) {
      ds.user_keys.push_back(r.user);
      per_user.emplace_back();
    }
    auto [iit, inew] = item_id.try_emplace(r.item, static_cast<std::uint32_t>(ds.item_keys.size()));
    if (inew) ds.item_keys.push_back(r.item);
    per_user[uit->second].push_back(iit->second);
  }
  ds.num_users = ds.user_keys.size();
  ds.num_items = ds.item_keys.size();

  std::mt19937_64 rng(cfg.seed);
  for (std::uint32_t u = 0; u < ds.num_users; ++u) {
    auto& items = per_user[u];
    std::shuffle(items.begin(), items.end(), rng);
    const std::size_t n = items.size();
    auto n_val = static_cast<std::size_t>(std::floor(double(n) * cfg.val_ratio + 1e-9));
    auto n_test = static_cast<std::size_t>(std::floor(double(n) * cfg.test_ratio + 1e-9));
    while (n_val + n_test >= n && n_val + n_test > 0) {
      if (n_test >= n_val) --n_test;
      else --n_val;
    }
    const std::size_t n_train = n - n_val - n_test;
    for (std::size_t k = 0; k < n; ++k) {
      Interaction x{u, items[k]};
      if (k < n_train) ds.train.push_back(x);
      else if (k < n_train + n_val) ds.val.push_back(x);
      else ds.test.push_back(x);
    }
  }
  ds.rebuild_indexes();
  return ds;
}

/**
 * Each user draws `per_user` distinct items; item of rank k (1-based) has
 * weight k^-zipf_exponent. Weighted sampling without replacement uses
 * exponential keys, i.e. the top `per_user` of log(U)/w.
 */
inline RawInteractions synth_powerlaw(std::size_t num_users, std::size_t num_items, std::size_t per_user,
                                      double zipf_exponent, std::uint64_t seed) {
  if (num_users == 0 || num_items == 0 || per_user == 0)
    throw ArgumentError("synth_powerlaw: counts must be positive");
  if (zipf_exponent < 0) throw ArgumentError("synth_powerlaw: zipf exponent must be >= 0");
  if (per_user > num_items) throw ArgumentError("synth_powerlaw: interactions_per_user exceeds num_items");

  std::vector<double> inv_weight(num_items);
  for (std::size_t k = 0; k < num_items; ++k) inv_weight[k] = std::pow(double(k + 1), zipf_exponent);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<double, std::uint32_t>> keys(num_items);
  std::vector<RawRecord> records;
  records.reserve(num_users * per_user);
  for (std::size_t u = 0; u < num_users; ++u) {
    for (std::size_t k = 0; k < num_items; ++k) {
      double x = unif(rng);
      while (x <= 0.0) x = unif(rng);
      keys[k] = {std::log(x) * inv_weight[k], static_cast<std::uint32_t>(k)};
    }
    std::partial_sort(keys.begin(), keys.begin() + per_user, keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    const std::string ukey = "u" + std::to_string(u);
    for (std::size_t k = 0; k < per_user; ++k) records.push_back({ukey, "i" + std::to_string(keys[k].second)});
  }
  return RawInteractions::from_records(records);
}

/// Share of training interactions over all user-item pairs.
inline double density(const InteractionDataset& ds) {
  if (ds.num_users == 0 || ds.num_items == 0) return 0.0;
  const double total = double(ds.train.size() + ds.val.size() + ds.test.size());
  return total / (double(ds.num_users) * double(ds.num_items));
}

namespace detail {

inline void write_pairs(const std::filesystem::path& path, const std::vector<Interaction>& xs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& x : xs) out << x.user << '\t' << x.item << '\n';
}

inline void write_keys(const std::filesystem::path& path, const std::vector<std::string>& keys) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t k = 0; k < keys.size(); ++k) out << k << '\t' << keys[k] << '\n';
}

inline std::vector<Interaction> read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Interaction> xs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    long long u = -1, i = -1;
    char tab = 0;
    if (!(ss >> u) || !ss.get(tab) || tab != '\t' || !(ss >> i) || u < 0 || i < 0)
      throw ParseError(path.string() + ": expected u<TAB>i", lineno);
    xs.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(i)});
  }
  return xs;
}

inline std::vector<std::string> read_keys(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> keys;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(path.string() + ": expected dense_id<TAB>key", lineno);
    if (std::stoull(line.substr(0, tab)) != keys.size())
      throw ParseError(path.string() + ": dense ids must be contiguous", lineno);
    keys.push_back(line.substr(tab + 1));
  }
  return keys;
}

}  // namespace detail

/// Writes train/val/test.tsv, idmap_{users,items}.tsv and stats.tsv.
inline void write_split(const InteractionDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  detail::write_pairs(dir / "train.tsv", ds.train);
  detail::write_pairs(dir / "val.tsv", ds.val);
  detail::write_pairs(dir / "test.tsv", ds.test);
  detail::write_keys(dir / "idmap_users.tsv", ds.user_keys);
  detail::write_keys(dir / "idmap_items.tsv", ds.item_keys);
  std::ofstream out(dir / "stats.tsv", std::ios::binary);
  out << "num_users\tnum_items\tnum_train\tnum_val\tnum_test\tsparsity\n";
  out << ds.num_users << '\t' << ds.num_items << '\t' << ds.train.size() << '\t' << ds.val.size() << '\t'
      << ds.test.size() << '\t' << std::setprecision(6) << density(ds) << '\n';
}

inline InteractionDataset load_split(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("prepared dataset not found: " + dir.string());
  InteractionDataset ds;
  ds.user_keys = detail::read_keys(dir / "idmap_users.tsv");
  ds.item_keys = detail::read_keys(dir / "idmap_items.tsv");
  ds.num_users = ds.user_keys.size();
  ds.num_items = ds.item_keys.size();
  ds.train = detail::read_pairs(dir / "train.tsv");
  ds.val = detail::read_pairs(dir / "val.tsv");
  ds.test = detail::read_pairs(dir / "test.tsv");
  ds.rebuild_indexes();
  ds.validate();
  return ds;
}

}  // namespace adjnorm
