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
 * @file theory.hpp
 *
 * Checks for the propagation limit of r-normalized adjacency with
 * self-loops on a connected graph:
 *
 *   lim_l (D~^-r A~ D~^-(1-r))^l (i,j) = (d_i+1)^(1-r) (d_j+1)^r / (2|E| + |V|)
 *
 * with d_i the degree without the self-loop. In the limit, node i's
 * dot product with j exceeds that with k (d_j > d_k) for r < 1, equals it
 * for r = 1 and falls below it for r > 1.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "adjnorm/common.hpp"
#include "adjnorm/dense.hpp"
#include "adjnorm/sparse.hpp"

namespace adjnorm {

inline constexpr std::size_t kDefaultDenseCap = 200;

inline bool is_connected(const CsrMatrix& adj) {
  const std::size_t n = adj.rows();
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto a = q.front();
    q.pop();
    for (auto b : adj.row_cols(a)) {
      if (!seen[b]) {
        seen[b] = 1;
        ++count;
        q.push(b);
      }
    }
  }
  return count == n;
}

inline bool has_symmetric_pattern(const CsrMatrix& adj) {
  if (!adj.square()) return false;
  for (std::size_t a = 0; a < adj.rows(); ++a)
    for (auto b : adj.row_cols(a))
      if (!adj.contains(b, a)) return false;
  return true;
}

/// Random connected simple graph: a random spanning tree plus extra edges with probability p.
template <typename Rng>
CsrMatrix random_connected_graph(std::size_t n, double extra_edge_prob, Rng& rng) {
  if (n < 2) throw ArgumentError("random_connected_graph: need at least two nodes");
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t k = 0; k < n; ++k) order[k] = k;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<char>> edge(n, std::vector<char>(n, 0));
  for (std::size_t k = 1; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    const auto a = order[k], b = order[pick(rng)];
    edge[a][b] = edge[b][a] = 1;
  }
  std::bernoulli_distribution extra(extra_edge_prob);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (!edge[a][b] && extra(rng)) edge[a][b] = edge[b][a] = 1;
  std::vector<Triplet> ts;
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b)
      if (edge[a][b]) ts.push_back({a, b, 1.0});
  return CsrMatrix::from_triplets(n, n, std::move(ts));
}

/// Random connected bipartite graph between `left` and `right` node sets.
template <typename Rng>
CsrMatrix random_connected_bipartite(std::size_t left, std::size_t right, double extra_edge_prob, Rng& rng) {
  if (left < 1 || right < 1) throw ArgumentError("random_connected_bipartite: both sides must be nonempty");
  const std::size_t n = left + right;
  std::vector<std::vector<char>> edge(n, std::vector<char>(n, 0));
  // grow a spanning tree by attaching each new node to a visited node of the other side
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t k = 0; k < n; ++k) order[k] = k;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint32_t> in_left, in_right;
  std::vector<std::uint32_t> pending;
  auto is_left = [left](std::uint32_t a) { return a < left; };
  (is_left(order[0]) ? in_left : in_right).push_back(order[0]);
  for (std::size_t k = 1; k < n; ++k) pending.push_back(order[k]);
  while (!pending.empty()) {
    bool progress = false;
    for (std::size_t k = 0; k < pending.size();) {
      const auto a = pending[k];
      auto& other = is_left(a) ? in_right : in_left;
      if (other.empty()) {
        ++k;
        continue;
      }
      std::uniform_int_distribution<std::size_t> pick(0, other.size() - 1);
      const auto b = other[pick(rng)];
      edge[a][b] = edge[b][a] = 1;
      (is_left(a) ? in_left : in_right).push_back(a);
      pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(k));
      progress = true;
    }
    if (!progress) throw ArgumentError("random_connected_bipartite: cannot connect");
  }
  std::bernoulli_distribution extra(extra_edge_prob);
  for (std::uint32_t a = 0; a < left; ++a)
    for (std::uint32_t b = static_cast<std::uint32_t>(left); b < n; ++b)
      if (!edge[a][b] && extra(rng)) edge[a][b] = edge[b][a] = 1;
  std::vector<Triplet> ts;
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b)
      if (edge[a][b]) ts.push_back({a, b, 1.0});
  return CsrMatrix::from_triplets(n, n, std::move(ts));
}

/// Closed-form propagation limit together with the quantities it is built from.
struct LimitMatrix {
  DenseMatrix values;
  double r = 0.0;
  double denominator = 0.0;  // 2|E| + |V|
  std::vector<std::size_t> degrees;
};

namespace detail {
inline void check_theory_graph(const CsrMatrix& adj, std::size_t cap) {
  if (!adj.square()) throw PreconditionError("graph adjacency must be square");
  if (adj.rows() > cap)
    throw PreconditionError("graph has " + std::to_string(adj.rows()) + " nodes, above the dense cap of " +
                            std::to_string(cap));
  for (std::size_t a = 0; a < adj.rows(); ++a)
    if (adj.contains(a, a)) throw PreconditionError("input graph must not carry self-loops");
  if (!has_symmetric_pattern(adj)) throw PreconditionError("graph adjacency must be symmetric");
  if (!is_connected(adj)) throw PreconditionError("graph must be connected");
}
}  // namespace detail

/// Limit matrix of the self-looped operator; adj must be loop-free, symmetric and connected.
inline LimitMatrix limit_matrix(const CsrMatrix& adj, double r, std::size_t cap = kDefaultDenseCap) {
  detail::check_theory_graph(adj, cap);
  const std::size_t n = adj.rows();
  LimitMatrix out;
  out.r = r;
  out.degrees.resize(n);
  for (std::size_t a = 0; a < n; ++a) out.degrees[a] = adj.row_nnz(a);
  const double edges = double(adj.nnz()) / 2.0;
  out.denominator = 2.0 * edges + double(n);
  out.values = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = std::pow(double(out.degrees[i] + 1), 1.0 - r);
    for (std::size_t j = 0; j < n; ++j)
      out.values(i, j) = left * std::pow(double(out.degrees[j] + 1), r) / out.denominator;
  }
  return out;
}

/// P^l by repeated dense multiplication; P^0 is the identity.
inline DenseMatrix power_iterate(const NormalizedAdjacency& P, std::size_t l, std::size_t cap = kDefaultDenseCap) {
  const std::size_t n = P.size();
  if (n > cap) throw PreconditionError("operator size exceeds the dense cap");
  const DenseMatrix dense = P.forward.to_dense();
  DenseMatrix acc = DenseMatrix::identity(n);
  for (std::size_t step = 0; step < l; ++step) acc = matmul(dense, acc);
  return acc;
}

struct ConvergenceResult {
  std::optional<std::size_t> l_star;  // empty when not converged
  double final_error = 0.0;
  bool converged() const noexcept { return l_star.has_value(); }
};

/**
 * Smallest l with max |P^l - limit| < tol, stepping P^l = P * P^(l-1) from
 * the identity, or not converged after l_max steps.
 */
inline ConvergenceResult convergence_check(const CsrMatrix& adj, double r, double tol, std::size_t l_max,
                                           std::size_t cap = kDefaultDenseCap) {
  const auto limit = limit_matrix(adj, r, cap);
  const auto P = normalize_r(add_self_loops(adj), r);
  DenseMatrix power = DenseMatrix::identity(adj.rows());
  DenseMatrix next;
  ConvergenceResult res;
  for (std::size_t l = 0;; ++l) {
    res.final_error = max_abs_diff(power, limit.values);
    if (res.final_error < tol) {
      res.l_star = l;
      return res;
    }
    if (l == l_max) return res;
    spmm_into(P.forward, power, next);
    std::swap(power, next);
  }
}

/// Limit embeddings H_inf = limit * H0.
inline DenseMatrix limit_embeddings(const LimitMatrix& limit, const DenseMatrix& h0) {
  return matmul(limit.values, h0);
}

/**
 * Dot product of limit embeddings i and j from the closed form
 * [(d_i+1)(d_j+1)]^(1-r) / (2|E|+|V|)^2 * ||sum_k (d_k+1)^r h0_k||^2.
 */
inline double limit_dot_closed_form(const LimitMatrix& limit, const DenseMatrix& h0, std::size_t i, std::size_t j) {
  std::vector<double> s(h0.cols(), 0.0);
  for (std::size_t k = 0; k < h0.rows(); ++k) {
    const double w = std::pow(double(limit.degrees[k] + 1), limit.r);
    auto row = h0.row(k);
    for (std::size_t c = 0; c < s.size(); ++c) s[c] += w * row[c];
  }
  const double sq = dot(s, s);
  const double scale =
      std::pow(double(limit.degrees[i] + 1) * double(limit.degrees[j] + 1), 1.0 - limit.r) /
      (limit.denominator * limit.denominator);
  return scale * sq;
}

enum class OrderingCase { prefers_high_degree = 1, degree_neutral = 2, prefers_low_degree = 3 };

inline OrderingCase expected_case(double r) {
  if (r < 1.0) return OrderingCase::prefers_high_degree;
  if (r == 1.0) return OrderingCase::degree_neutral;
  return OrderingCase::prefers_low_degree;
}

struct OrderingReport {
  double r = 0.0;
  OrderingCase expected = OrderingCase::prefers_high_degree;
  std::size_t triples = 0;
  std::size_t violations = 0;
  double max_abs_diff = 0.0;  // over all checked triples
  bool passed() const noexcept { return violations == 0; }
};

inline constexpr double kNeutralTolerance = 1e-12;

/**
 * For every ego i and every pair (j, k) with d_j > d_k, compares
 * h_i.h_j - h_i.h_k on the limit embeddings of a fixed random H0.
 */
inline OrderingReport ordering_check(const CsrMatrix& adj, double r, std::uint64_t seed = 7, std::size_t dim = 8,
                                     std::size_t cap = kDefaultDenseCap) {
  const auto limit = limit_matrix(adj, r, cap);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  DenseMatrix h0(adj.rows(), dim);
  for (double& x : h0.data()) x = unif(rng);
  const DenseMatrix h = limit_embeddings(limit, h0);

  const std::size_t n = adj.rows();
  DenseMatrix gram(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) gram(a, b) = dot(h.row(a), h.row(b));

  OrderingReport rep;
  rep.r = r;
  rep.expected = expected_case(r);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (limit.degrees[j] <= limit.degrees[k]) continue;
        const double diff = gram(i, j) - gram(i, k);
        ++rep.triples;
        rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(diff));
        bool ok = false;
        switch (rep.expected) {
          case OrderingCase::prefers_high_degree: ok = diff > 0.0; break;
          case OrderingCase::degree_neutral: ok = std::abs(diff) < kNeutralTolerance; break;
          case OrderingCase::prefers_low_degree: ok = diff < 0.0; break;
        }
        if (!ok) ++rep.violations;
      }
    }
  }
  return rep;
}

}  // namespace adjnorm
