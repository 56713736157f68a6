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
 * @file sparse.hpp
 *
 * CSR matrices, the user-item bipartite adjacency and the r-normalized
 * propagation operator D^-r A D^-(1-r).
 *
 * Node layout: users occupy rows [0, |U|), items rows [|U|, |U|+|I|).
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adjnorm/common.hpp"
#include "adjnorm/dataset.hpp"
#include "adjnorm/dense.hpp"

namespace adjnorm {

struct Triplet {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  double value = 0.0;
};

class CsrMatrix {
 public:
  CsrMatrix() : row_ptr_(1, 0) {}
  CsrMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr, std::vector<std::uint32_t> col_idx,
            std::vector<double> values)
      : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values)) {
    validate();
  }

  /// Builds from unsorted triplets; duplicate coordinates are summed.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> ts) {
    for (const auto& t : ts)
      if (t.row >= rows || t.col >= cols) throw ArgumentError("triplet out of range");
    std::sort(ts.begin(), ts.end(), [](const Triplet& a, const Triplet& b) {
      return a.row < b.row || (a.row == b.row && a.col < b.col);
    });
    CsrMatrix m(rows, cols);
    for (std::size_t k = 0; k < ts.size(); ++k) {
      if (k > 0 && ts[k].row == ts[k - 1].row && ts[k].col == ts[k - 1].col) {
        m.values_.back() += ts[k].value;
        continue;
      }
      m.col_idx_.push_back(ts[k].col);
      m.values_.push_back(ts[k].value);
      ++m.row_ptr_[ts[k].row + 1];
    }
    for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
  }

  static CsrMatrix identity(std::size_t n) {
    std::vector<Triplet> ts;
    for (std::uint32_t i = 0; i < n; ++i) ts.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(ts));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return col_idx_.size(); }
  bool square() const noexcept { return rows_ == cols_; }

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const noexcept { return col_idx_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& mutable_values() noexcept { return values_; }

  std::size_t row_nnz(std::size_t r) const { return row_ptr_[r + 1] - row_ptr_[r]; }

  std::span<const std::uint32_t> row_cols(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], row_nnz(r)};
  }
  std::span<const double> row_values(std::size_t r) const { return {values_.data() + row_ptr_[r], row_nnz(r)}; }

  /// Entry lookup by binary search; 0 when structurally absent.
  double at(std::size_t r, std::size_t c) const {
    auto cols = row_cols(r);
    auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(c));
    if (it == cols.end() || *it != c) return 0.0;
    return values_[row_ptr_[r] + static_cast<std::size_t>(it - cols.begin())];
  }

  bool contains(std::size_t r, std::size_t c) const {
    auto cols = row_cols(r);
    return std::binary_search(cols.begin(), cols.end(), static_cast<std::uint32_t>(c));
  }

  bool same_pattern(const CsrMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && row_ptr_ == o.row_ptr_ && col_idx_ == o.col_idx_;
  }

  /// Checks the CSR structural invariants; throws ArgumentError on violation.
  void validate() const {
    if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
        col_idx_.size() != values_.size())
      throw ArgumentError("CSR: inconsistent array lengths");
    for (std::size_t r = 0; r < rows_; ++r) {
      if (row_ptr_[r] > row_ptr_[r + 1]) throw ArgumentError("CSR: row_ptr decreasing");
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
        if (col_idx_[k] >= cols_) throw ArgumentError("CSR: column out of range");
        if (k > row_ptr_[r] && col_idx_[k] <= col_idx_[k - 1]) throw ArgumentError("CSR: columns not increasing");
      }
    }
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d(r, col_idx_[k]) = values_[k];
    return d;
  }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

inline CsrMatrix transpose(const CsrMatrix& m) {
  std::vector<std::size_t> ptr(m.cols() + 1, 0);
  for (auto c : m.col_idx()) ++ptr[c + 1];
  for (std::size_t c = 0; c < m.cols(); ++c) ptr[c + 1] += ptr[c];
  std::vector<std::uint32_t> idx(m.nnz());
  std::vector<double> val(m.nnz());
  std::vector<std::size_t> next(ptr.begin(), ptr.end() - 1);
  // rows visited in increasing order keep each output row sorted
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k) {
      const auto pos = next[m.col_idx()[k]]++;
      idx[pos] = static_cast<std::uint32_t>(r);
      val[pos] = m.values()[k];
    }
  }
  return CsrMatrix(m.cols(), m.rows(), std::move(ptr), std::move(idx), std::move(val));
}

/// out = m * dense. Each output row sums its nonzeros in column order.
inline void spmm_into(const CsrMatrix& m, const DenseMatrix& dense, DenseMatrix& out) {
  if (m.cols() != dense.rows()) throw ArgumentError("spmm: matrix has " + std::to_string(m.cols()) +
                                                    " columns but dense operand has " + std::to_string(dense.rows()) + " rows");
  if (out.rows() != m.rows() || out.cols() != dense.cols()) out = DenseMatrix(m.rows(), dense.cols());
  const std::size_t d = dense.cols();
  parallel_for(0, m.rows(), [&](std::size_t r) {
    auto dst = out.row(r);
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::size_t k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k) {
      const double w = m.values()[k];
      auto src = dense.row(m.col_idx()[k]);
      for (std::size_t j = 0; j < d; ++j) dst[j] += w * src[j];
    }
  }, 256);
}

inline DenseMatrix spmm(const CsrMatrix& m, const DenseMatrix& dense) {
  DenseMatrix out;
  spmm_into(m, dense, out);
  return out;
}

/**
 * Bipartite adjacency [[0,B],[B^T,0]] from the training split, with the
 * identity added when self_loops is set.
 */
inline CsrMatrix build_adjacency(const InteractionDataset& ds, bool self_loops) {
  const std::size_t n = ds.num_users + ds.num_items;
  std::vector<Triplet> ts;
  ts.reserve(2 * ds.train.size() + (self_loops ? n : 0));
  const auto offset = static_cast<std::uint32_t>(ds.num_users);
  for (const auto& x : ds.train) {
    ts.push_back({x.user, offset + x.item, 1.0});
    ts.push_back({offset + x.item, x.user, 1.0});
  }
  if (self_loops)
    for (std::uint32_t a = 0; a < n; ++a) ts.push_back({a, a, 1.0});
  return CsrMatrix::from_triplets(n, n, std::move(ts));
}

/// Adds missing unit diagonal entries.
inline CsrMatrix add_self_loops(const CsrMatrix& adj) {
  if (!adj.square()) throw ArgumentError("add_self_loops: matrix must be square");
  std::vector<Triplet> ts;
  ts.reserve(adj.nnz() + adj.rows());
  for (std::uint32_t r = 0; r < adj.rows(); ++r) {
    for (std::size_t k = adj.row_ptr()[r]; k < adj.row_ptr()[r + 1]; ++k)
      ts.push_back({r, adj.col_idx()[k], adj.values()[k]});
    if (!adj.contains(r, r)) ts.push_back({r, r, 1.0});
  }
  return CsrMatrix::from_triplets(adj.rows(), adj.cols(), std::move(ts));
}

/// Propagation operator and its transpose for the backward pass.
struct NormalizedAdjacency {
  CsrMatrix forward;
  CsrMatrix backward;
  double r = 0.5;
  bool self_loops = false;

  std::size_t size() const noexcept { return forward.rows(); }
};

/**
 * Replaces every nonzero (a,b) with deg(a)^-r * deg(b)^-(1-r), where deg is
 * the row nonzero count of adj (self-loops included). The pattern is kept;
 * zero-degree rows stay empty.
 */
inline NormalizedAdjacency normalize_r(const CsrMatrix& adj, double r) {
  if (!adj.square()) throw ArgumentError("normalize_r: adjacency must be square");
  const std::size_t n = adj.rows();
  std::vector<double> left(n, 0.0), right(n, 0.0);
  bool loops = n > 0;
  for (std::size_t a = 0; a < n; ++a) {
    const auto deg = static_cast<double>(adj.row_nnz(a));
    if (deg > 0) {
      left[a] = std::pow(deg, -r);
      right[a] = std::pow(deg, r - 1.0);
    }
    loops = loops && adj.contains(a, a);
  }
  NormalizedAdjacency out;
  out.r = r;
  out.self_loops = loops;
  std::vector<double> vals(adj.nnz());
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t k = adj.row_ptr()[a]; k < adj.row_ptr()[a + 1]; ++k) vals[k] = left[a] * right[adj.col_idx()[k]];
  out.forward = CsrMatrix(n, n, adj.row_ptr(), adj.col_idx(), std::move(vals));
  out.backward = transpose(out.forward);
  return out;
}

/**
 * DegDrop: removes each user-item edge with probability min(1, alpha/d_i),
 * d_i being the item's row degree in adj, together with its mirror entry.
 * Edges are visited user-major in column order, one uniform draw each.
 */
inline CsrMatrix drop_edges_degdrop(const CsrMatrix& adj, std::size_t num_users, double alpha, std::uint64_t seed) {
  if (alpha < 0.0 || alpha > 1.0) throw ArgumentError("drop_edges_degdrop: alpha must lie in [0, 1]");
  if (!adj.square() || num_users > adj.rows()) throw ArgumentError("drop_edges_degdrop: bad adjacency shape");
  if (alpha == 0.0) return adj;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Triplet> kept;
  kept.reserve(adj.nnz());
  for (std::uint32_t u = 0; u < num_users; ++u) {
    for (std::size_t k = adj.row_ptr()[u]; k < adj.row_ptr()[u + 1]; ++k) {
      const auto c = adj.col_idx()[k];
      if (c < num_users) {
        kept.push_back({u, c, adj.values()[k]});
        continue;
      }
      const double p = std::min(1.0, alpha / static_cast<double>(adj.row_nnz(c)));
      if (unif(rng) < p) continue;
      kept.push_back({u, c, adj.values()[k]});
      kept.push_back({c, u, adj.at(c, u)});
    }
  }
  // item-side entries that do not point at users (self-loops) are retained
  for (std::uint32_t a = static_cast<std::uint32_t>(num_users); a < adj.rows(); ++a)
    for (std::size_t k = adj.row_ptr()[a]; k < adj.row_ptr()[a + 1]; ++k)
      if (adj.col_idx()[k] >= num_users) kept.push_back({a, adj.col_idx()[k], adj.values()[k]});
  return CsrMatrix::from_triplets(adj.rows(), adj.cols(), std::move(kept));
}

/// Text dump: "rows cols nnz" header then one "row col value" line per entry.
inline void write_matrix_dump(std::ostream& out, const CsrMatrix& m) {
  out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k)
      out << r << ' ' << m.col_idx()[k] << ' ' << m.values()[k] << '\n';
}

inline CsrMatrix read_matrix_dump(std::istream& in) {
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz)) throw ParseError("matrix dump: bad header", 1);
  std::vector<Triplet> ts(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    if (!(in >> ts[k].row >> ts[k].col >> ts[k].value)) throw ParseError("matrix dump: bad entry", k + 2);
  }
  return CsrMatrix::from_triplets(rows, cols, std::move(ts));
}

}  // namespace adjnorm
