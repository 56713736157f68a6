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
 * @file training.hpp
 *
 * BPR triple sampling, the softplus BPR objective with L2 on the batch's
 * ego embeddings, lazy-row Adam and the early-stopped training loop.
 */

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "adjnorm/baselines.hpp"
#include "adjnorm/common.hpp"
#include "adjnorm/dataset.hpp"
#include "adjnorm/dense.hpp"
#include "adjnorm/metrics.hpp"
#include "adjnorm/models.hpp"
#include "adjnorm/sparse.hpp"

namespace adjnorm {

struct BprTriple {
  std::uint32_t u = 0;
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  friend bool operator==(const BprTriple&, const BprTriple&) = default;
};

struct TrainConfig {
  double learning_rate = 0.001;
  double l2_lambda = 1e-4;
  std::size_t batch_size = 2048;
  std::size_t max_epochs = 1000;
  std::size_t eval_every = 5;
  std::size_t patience = 5;
  double neg_alpha = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(l2_lambda >= 0.0)) throw ConfigError("l2_lambda must be >= 0");
    if (batch_size == 0 || eval_every == 0 || patience == 0)
      throw ConfigError("batch_size, eval_every and patience must be positive");
    if (!(neg_alpha >= 0.0)) throw ConfigError("neg_alpha must be >= 0");
  }
};

/**
 * Negative item distribution: uniform over all items when alpha = 0,
 * otherwise proportional to d_j^alpha over items with d_j >= 1.
 */
class NegativeSampler {
 public:
  NegativeSampler(const InteractionDataset& ds, double alpha) : alpha_(alpha), num_items_(ds.num_items) {
    if (alpha < 0.0) throw ArgumentError("negative sampling exponent must be >= 0");
    if (ds.num_items == 0) throw ArgumentError("negative sampling needs at least one item");
    if (alpha == 0.0) {
      uniform_ = std::uniform_int_distribution<std::uint32_t>(0, static_cast<std::uint32_t>(ds.num_items - 1));
      return;
    }
    std::vector<double> w;
    for (std::uint32_t i = 0; i < ds.num_items; ++i) {
      if (ds.item_degree[i] == 0) continue;
      candidates_.push_back(i);
      w.push_back(std::pow(double(ds.item_degree[i]), alpha));
    }
    if (candidates_.empty()) throw ArgumentError("negative sampling: no item has training degree >= 1");
    weighted_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
  }

  template <typename Rng>
  std::uint32_t operator()(Rng& rng) {
    if (alpha_ == 0.0) return uniform_(rng);
    return candidates_[weighted_(rng)];
  }

  double alpha() const noexcept { return alpha_; }

 private:
  double alpha_;
  std::size_t num_items_;
  std::uniform_int_distribution<std::uint32_t> uniform_;
  std::vector<std::uint32_t> candidates_;
  std::discrete_distribution<std::size_t> weighted_;
};

inline constexpr int kMaxNegativeRejections = 100;

/**
 * Draws n positives uniformly from the training pairs and one negative per
 * positive, resampling negatives that the user has interacted with. A
 * triple is dropped after kMaxNegativeRejections failed draws.
 */
template <typename Rng>
std::vector<BprTriple> sample_batch(const InteractionDataset& ds, std::size_t n, NegativeSampler& neg, Rng& rng) {
  if (n < 1) throw ArgumentError("sample_batch: n must be >= 1");
  if (ds.train.empty()) throw ArgumentError("sample_batch: empty training split");
  std::uniform_int_distribution<std::size_t> pick(0, ds.train.size() - 1);
  std::vector<BprTriple> out;
  out.reserve(n);
  std::size_t skipped = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto& pos = ds.train[pick(rng)];
    const auto& seen = ds.user_train_items[pos.user];
    bool found = false;
    std::uint32_t j = 0;
    for (int attempt = 0; attempt < kMaxNegativeRejections; ++attempt) {
      j = neg(rng);
      if (!std::binary_search(seen.begin(), seen.end(), j)) {
        found = true;
        break;
      }
    }
    if (!found) {
      ++skipped;
      continue;
    }
    out.push_back({pos.user, pos.item, j});
  }
  if (skipped > 0)
    log_warning("sample_batch: skipped " + std::to_string(skipped) + " positives without an admissible negative");
  return out;
}

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct BprGradient {
  double loss = 0.0;
  /// d(softplus term)/d(combined).
  DenseMatrix grad_combined;
  /// 2*lambda*E0 on the batch rows, zero elsewhere.
  DenseMatrix grad_l2_direct;
};

/**
 * loss = (1/|T|) sum softplus(y_uj - y_ui) + lambda * sum over distinct
 * batch rows of ||E0_row||^2.
 */
inline BprGradient bpr_loss_and_grad(std::span<const BprTriple> triples, const ForwardCache& cache,
                                     const EmbeddingTable& table, double l2_lambda) {
  if (triples.empty()) throw ArgumentError("bpr_loss_and_grad: empty batch");
  BprGradient out;
  out.grad_combined = DenseMatrix(cache.combined.rows(), cache.combined.cols());
  out.grad_l2_direct = DenseMatrix(table.E0.rows(), table.E0.cols());
  const double inv_n = 1.0 / double(triples.size());
  const std::size_t off = cache.num_users;
  const std::size_t width = cache.combined.cols();

  double sp = 0.0;
  for (const auto& t : triples) {
    auto eu = cache.combined.row(t.u);
    auto ei = cache.combined.row(off + t.i);
    auto ej = cache.combined.row(off + t.j);
    const double margin = dot(eu, ej) - dot(eu, ei);
    sp += softplus(margin);
    const double s = sigmoid(margin) * inv_n;
    auto gu = out.grad_combined.row(t.u);
    auto gi = out.grad_combined.row(off + t.i);
    auto gj = out.grad_combined.row(off + t.j);
    for (std::size_t k = 0; k < width; ++k) {
      gu[k] -= s * (ei[k] - ej[k]);
      gi[k] -= s * eu[k];
      gj[k] += s * eu[k];
    }
  }
  out.loss = sp * inv_n;

  std::vector<std::size_t> rows;
  rows.reserve(3 * triples.size());
  for (const auto& t : triples) {
    rows.push_back(t.u);
    rows.push_back(off + t.i);
    rows.push_back(off + t.j);
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  double reg = 0.0;
  for (auto a : rows) {
    auto e = table.E0.row(a);
    auto g = out.grad_l2_direct.row(a);
    for (std::size_t k = 0; k < e.size(); ++k) {
      reg += e[k] * e[k];
      g[k] = 2.0 * l2_lambda * e[k];
    }
  }
  out.loss += l2_lambda * reg;
  return out;
}

/// Softplus BPR objective and its full gradient with respect to E0.
inline std::pair<double, DenseMatrix> objective_and_gradient(const ModelSpec& spec, const NormalizedAdjacency& P,
                                                             const EmbeddingTable& table,
                                                             std::span<const BprTriple> triples, double l2_lambda) {
  const auto cache = forward(spec, P, table);
  auto g = bpr_loss_and_grad(triples, cache, table, l2_lambda);
  DenseMatrix total = backward(spec, P, cache, g.grad_combined);
  total += g.grad_l2_direct;
  return {g.loss, std::move(total)};
}

struct AdamState {
  DenseMatrix m;
  DenseMatrix v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t rows, std::size_t cols) : m(rows, cols), v(rows, cols) {}
};

/**
 * Bias-corrected Adam. Rows whose gradient is entirely zero are left alone
 * (moments and parameters), so sparse gradients only touch their rows.
 */
inline void adam_step(AdamState& st, EmbeddingTable& table, const DenseMatrix& grad, double lr) {
  if (!grad.same_shape(table.E0)) throw ArgumentError("adam_step: gradient shape differs from table");
  if (st.m.empty()) st = AdamState(grad.rows(), grad.cols());
  if (!grad.all_finite()) throw NumericalError("adam_step: non-finite gradient at optimizer step " + std::to_string(st.t + 1));
  ++st.t;
  const double bc1 = 1.0 - std::pow(st.beta1, double(st.t));
  const double bc2 = 1.0 - std::pow(st.beta2, double(st.t));
  const std::size_t d = grad.cols();
  for (std::size_t a = 0; a < grad.rows(); ++a) {
    auto g = grad.row(a);
    if (std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; })) continue;
    auto m = st.m.row(a);
    auto v = st.v.row(a);
    auto e = table.E0.row(a);
    for (std::size_t k = 0; k < d; ++k) {
      m[k] = st.beta1 * m[k] + (1.0 - st.beta1) * g[k];
      v[k] = st.beta2 * v[k] + (1.0 - st.beta2) * g[k] * g[k];
      e[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + st.eps);
    }
  }
}

struct TrainLogRow {
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> val_recall;
  double elapsed_ms = 0.0;
};

struct TrainResult {
  EmbeddingTable best;
  std::vector<TrainLogRow> log;
  std::size_t best_epoch = 0;
  double best_val_recall = -1.0;
  std::size_t evaluations = 0;
  bool early_stopped = false;
};

/// Validation score hook: (spec, full operator, table, epoch) -> score to maximize.
using Validator = std::function<double(const ModelSpec&, const NormalizedAdjacency&, const EmbeddingTable&, std::size_t)>;

inline constexpr std::size_t kValidationK = 20;

inline double validation_recall(const ModelSpec& spec, const NormalizedAdjacency& P, const EmbeddingTable& table,
                                const InteractionDataset& ds, std::size_t k = kValidationK) {
  const auto cache = forward(spec, P, table);
  RankOptions opt;
  opt.k = k;
  opt.target = SplitPart::val;
  return recall_at_k(rank_topk(cache.combined, ds, opt), ds);
}

/// Propagation operator for a spec over the training graph (empty for MF).
inline NormalizedAdjacency propagation_for(const ModelSpec& spec, const InteractionDataset& ds) {
  if (spec.layers == 0) return {};
  return normalize_r(build_adjacency(ds, spec.self_loops()), spec.r);
}

/**
 * Trains with Adam on softplus BPR; every eval_every epochs scores the
 * validation split and keeps the best snapshot, stopping after `patience`
 * evaluations without strict improvement. DegDrop resamples the graph once
 * per epoch; validation always uses the full graph.
 */
inline TrainResult train(const InteractionDataset& ds, const ModelSpec& spec, const TrainConfig& cfg,
                         const BaselineConfig& baseline = {}, Validator validator = {}) {
  spec.validate();
  cfg.validate();
  baseline.validate();
  if (ds.val.empty()) throw ConfigError("training needs a nonempty validation split");
  if (ds.train.empty()) throw ConfigError("training needs a nonempty training split");
  if (!validator) {
    validator = [&ds](const ModelSpec& s, const NormalizedAdjacency& P, const EmbeddingTable& t, std::size_t) {
      return validation_recall(s, P, t, ds);
    };
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };

  EmbeddingTable table = EmbeddingTable::xavier(ds.num_users, ds.num_items, spec.dim, cfg.seed);
  TrainResult res;
  res.best = table;

  const NormalizedAdjacency full = propagation_for(spec, ds);
  const bool degdrop = baseline.kind == BaselineKind::degdrop && baseline.alpha > 0.0 && spec.layers > 0;
  const CsrMatrix base_adj = degdrop ? build_adjacency(ds, false) : CsrMatrix{};
  const double neg_alpha = baseline.kind == BaselineKind::ns ? baseline.alpha : cfg.neg_alpha;
  NegativeSampler neg(ds, neg_alpha);
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 0x5851F42D4C957F2DULL);
  AdamState adam(table.E0.rows(), table.E0.cols());

  const std::size_t n_batches = (ds.train.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::size_t bad_evals = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    NormalizedAdjacency dropped;
    if (degdrop) {
      auto adj = drop_edges_degdrop(base_adj, ds.num_users, baseline.alpha, cfg.seed * 1000003ULL + epoch);
      if (spec.self_loops()) adj = add_self_loops(adj);
      dropped = normalize_r(adj, spec.r);
    }
    const NormalizedAdjacency& P = degdrop ? dropped : full;

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t n = std::min(cfg.batch_size, ds.train.size() - b * cfg.batch_size);
      const auto triples = sample_batch(ds, n, neg, rng);
      if (triples.empty()) continue;
      auto [loss, grad] = objective_and_gradient(spec, P, table, triples, cfg.l2_lambda);
      if (!std::isfinite(loss)) throw NumericalError("non-finite loss at epoch " + std::to_string(epoch));
      adam_step(adam, table, grad, cfg.learning_rate);
      loss_sum += loss;
      ++loss_count;
    }

    TrainLogRow row;
    row.epoch = epoch;
    row.loss = loss_count ? loss_sum / double(loss_count) : 0.0;
    if (epoch % cfg.eval_every == 0) {
      const double score = validator(spec, full, table, epoch);
      row.val_recall = score;
      ++res.evaluations;
      if (score > res.best_val_recall) {
        res.best_val_recall = score;
        res.best_epoch = epoch;
        res.best = table;
        bad_evals = 0;
      } else {
        ++bad_evals;
      }
    }
    row.elapsed_ms = elapsed_ms();
    res.log.push_back(row);
    if (bad_evals >= cfg.patience) {
      res.early_stopped = true;
      break;
    }
  }
  // the final epochs after the last scheduled evaluation still get a chance
  if (!res.early_stopped && !res.log.empty() && !res.log.back().val_recall) {
    const double score = validator(spec, full, table, res.log.back().epoch);
    res.log.back().val_recall = score;
    ++res.evaluations;
    if (score > res.best_val_recall) {
      res.best_val_recall = score;
      res.best_epoch = res.log.back().epoch;
      res.best = table;
    }
  }
  return res;
}

}  // namespace adjnorm
