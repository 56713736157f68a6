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
 * @file metrics.hpp
 *
 * Full-catalog top-K ranking and the Recall, NDCG, Nov and PRU metrics.
 *
 * Ranking candidates are the items with training degree >= 1 that are not
 * in the user's training set; validation items stay rankable at test time.
 * Ties are broken by ascending item index. Only users with at least one
 * ground-truth item in the target split are evaluated.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "adjnorm/baselines.hpp"
#include "adjnorm/common.hpp"
#include "adjnorm/dataset.hpp"
#include "adjnorm/dense.hpp"

namespace adjnorm {

struct RankOptions {
  std::size_t k = 20;
  SplitPart target = SplitPart::test;
  bool exclude_train = true;
  bool exclude_cold = true;
  /// Popularity compensation strength; negative disables it.
  double pc_alpha = -1.0;
};

struct RankingResult {
  std::size_t k = 0;
  SplitPart target = SplitPart::test;
  bool excluded_train = true;
  bool excluded_cold = true;
  std::vector<std::uint32_t> users;
  std::vector<std::vector<std::uint32_t>> lists;
};

/**
 * Indices of the k largest scores, descending, ties by ascending index.
 * Items for which `excluded` returns true are skipped; shorter lists are
 * returned when fewer than k items remain.
 */
template <typename Excluded>
std::vector<std::uint32_t> top_k(std::span<const double> scores, std::size_t k, Excluded&& excluded) {
  std::vector<std::uint32_t> cand;
  cand.reserve(scores.size());
  for (std::uint32_t i = 0; i < scores.size(); ++i)
    if (!excluded(i)) cand.push_back(i);
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  const std::size_t take = std::min(k, cand.size());
  if (take < cand.size()) {
    std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(), better);
    cand.resize(take);
  }
  std::sort(cand.begin(), cand.end(), better);
  return cand;
}

inline std::vector<std::uint32_t> top_k(std::span<const double> scores, std::size_t k) {
  return top_k(scores, k, [](std::uint32_t) { return false; });
}

/// Ranks all candidate items for each evaluated user by combined-embedding dot product.
inline RankingResult rank_topk(const DenseMatrix& combined, const InteractionDataset& ds, const RankOptions& opt) {
  if (opt.k < 1) throw ArgumentError("rank_topk: K must be >= 1");
  if (combined.rows() != ds.num_users + ds.num_items) throw ArgumentError("rank_topk: embedding rows do not match dataset");
  RankingResult res;
  res.k = opt.k;
  res.target = opt.target;
  res.excluded_train = opt.exclude_train;
  res.excluded_cold = opt.exclude_cold;
  const auto& truth = ds.user_items(opt.target);
  for (std::uint32_t u = 0; u < ds.num_users; ++u)
    if (!truth[u].empty()) res.users.push_back(u);
  res.lists.resize(res.users.size());

  const double d_max = double(std::max<std::uint32_t>(1, ds.max_item_degree()));
  const bool use_pc = opt.pc_alpha >= 0.0;
  parallel_for(0, res.users.size(), [&](std::size_t slot) {
    const std::uint32_t u = res.users[slot];
    const auto& seen = ds.user_train_items[u];
    auto excluded = [&](std::uint32_t i) {
      return (opt.exclude_cold && ds.item_degree[i] == 0) ||
             (opt.exclude_train && std::binary_search(seen.begin(), seen.end(), i));
    };
    std::vector<double> scores(ds.num_items);
    auto urow = combined.row(u);
    for (std::size_t i = 0; i < ds.num_items; ++i) scores[i] = dot(urow, combined.row(ds.num_users + i));
    if (use_pc) {
      std::vector<std::uint32_t> idx;
      std::vector<double> cs;
      std::vector<std::uint32_t> deg;
      for (std::uint32_t i = 0; i < ds.num_items; ++i) {
        if (excluded(i)) continue;
        idx.push_back(i);
        cs.push_back(scores[i]);
        deg.push_back(ds.item_degree[i]);
      }
      pc_adjust(cs, deg, d_max, opt.pc_alpha);
      for (std::size_t k = 0; k < idx.size(); ++k) scores[idx[k]] = cs[k];
    }
    res.lists[slot] = top_k(std::span<const double>(scores), opt.k, excluded);
  }, 16);
  return res;
}

namespace detail {
inline const std::vector<std::uint32_t>& truth_of(const RankingResult& rk, const InteractionDataset& ds, std::size_t slot) {
  return ds.user_items(rk.target)[rk.users[slot]];
}
}  // namespace detail

/// Mean over evaluated users of |top-K ∩ truth| / |truth|.
inline double recall_at_k(const RankingResult& rk, const InteractionDataset& ds) {
  if (rk.users.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t s = 0; s < rk.users.size(); ++s) {
    const auto& truth = detail::truth_of(rk, ds, s);
    std::size_t hits = 0;
    for (auto i : rk.lists[s]) hits += std::binary_search(truth.begin(), truth.end(), i) ? 1 : 0;
    total += double(hits) / double(truth.size());
  }
  return total / double(rk.users.size());
}

/// Binary-relevance NDCG with log2(p+1) discount, p starting at 1.
inline double ndcg_at_k(const RankingResult& rk, const InteractionDataset& ds) {
  if (rk.users.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t s = 0; s < rk.users.size(); ++s) {
    const auto& truth = detail::truth_of(rk, ds, s);
    double dcg = 0.0;
    for (std::size_t p = 0; p < rk.lists[s].size(); ++p)
      if (std::binary_search(truth.begin(), truth.end(), rk.lists[s][p])) dcg += 1.0 / std::log2(double(p) + 2.0);
    double idcg = 0.0;
    for (std::size_t p = 0; p < std::min(rk.k, truth.size()); ++p) idcg += 1.0 / std::log2(double(p) + 2.0);
    total += dcg / idcg;
  }
  return total / double(rk.users.size());
}

/**
 * Normalized self-information of the recommended items:
 * (1/(|U_eval| K)) sum_u sum_i -log2(d_i/|U|) / log2|U|, |U| the full user count.
 */
inline double nov_at_k(const RankingResult& rk, const InteractionDataset& ds) {
  if (rk.users.empty()) return 0.0;
  const double n_users = double(ds.num_users);
  const double norm = std::log2(n_users);
  if (!(norm > 0.0)) throw ArgumentError("nov_at_k: needs at least two users");
  double total = 0.0;
  bool warned = false;
  for (const auto& list : rk.lists) {
    for (auto i : list) {
      double d = ds.item_degree[i];
      if (d == 0.0) {
        if (!warned) log_warning("nov_at_k: ranked item with zero training degree, treating d_i as 1");
        warned = true;
        d = 1.0;
      }
      total += -std::log2(d / n_users) / norm;
    }
  }
  return total / (double(rk.users.size()) * double(rk.k));
}

/// Fractional ranks (1-based); tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo + 1;
    while (hi < order.size() && x[order[hi]] == x[order[lo]]) ++hi;
    const double avg = 0.5 * double(lo + hi - 1) + 1.0;
    for (std::size_t k = lo; k < hi; ++k) ranks[order[k]] = avg;
    lo = hi;
  }
  return ranks;
}

/// Spearman's rho with tie-averaged ranks; 0 when either input is constant.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("spearman: inputs differ in length");
  if (x.size() < 2) throw ArgumentError("spearman: needs at least two observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = double(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Negated mean Spearman correlation between item degree and rank position.
inline double pru_at_k(const RankingResult& rk, const InteractionDataset& ds) {
  if (rk.users.empty()) return 0.0;
  double total = 0.0;
  std::vector<double> pop, pos;
  for (const auto& list : rk.lists) {
    if (list.size() < 2) continue;
    pop.clear();
    pos.clear();
    for (std::size_t p = 0; p < list.size(); ++p) {
      pop.push_back(double(ds.item_degree[list[p]]));
      pos.push_back(double(p + 1));
    }
    total += spearman(pop, pos);
  }
  return -total / double(rk.users.size());
}

struct MetricsReport {
  std::size_t k = 0;
  double recall = 0.0;
  double ndcg = 0.0;
  double nov = 0.0;
  double pru = 0.0;
  std::size_t num_evaluated_users = 0;
};

inline MetricsReport evaluate(const RankingResult& rk, const InteractionDataset& ds) {
  MetricsReport m;
  m.k = rk.k;
  m.recall = recall_at_k(rk, ds);
  m.ndcg = ndcg_at_k(rk, ds);
  m.nov = nov_at_k(rk, ds);
  m.pru = pru_at_k(rk, ds);
  m.num_evaluated_users = rk.users.size();
  return m;
}

}  // namespace adjnorm
