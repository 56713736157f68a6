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
 * @file models.hpp
 *
 * Backbones sharing one embedding table E0 of (|U|+|I|) x d:
 *
 *   MF        combined = E0
 *   LightGCN  E(l) = P E(l-1), combined = mean of E(0..L), P without self-loops
 *   LR-GCCF   E(l) = P E(l-1), combined = [E(0) | E(1) | ... | E(L)], P with self-loops
 *
 * The backward pass maps a gradient on the combined embeddings back onto E0
 * through the transposed operator.
 */

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adjnorm/common.hpp"
#include "adjnorm/dense.hpp"
#include "adjnorm/sparse.hpp"

namespace adjnorm {

enum class Backbone { mf, lightgcn, lrgccf };

inline std::string to_string(Backbone b) {
  switch (b) {
    case Backbone::mf: return "MF";
    case Backbone::lightgcn: return "LIGHTGCN";
    default: return "LRGCCF";
  }
}

inline Backbone parse_backbone(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s == "MF" || s == "MFBPR") return Backbone::mf;
  if (s == "LIGHTGCN") return Backbone::lightgcn;
  if (s == "LRGCCF" || s == "LR-GCCF") return Backbone::lrgccf;
  throw ConfigError("unknown backbone '" + s + "' (expected MF, LIGHTGCN or LRGCCF)");
}

struct ModelSpec {
  Backbone backbone = Backbone::lightgcn;
  std::size_t layers = 3;
  double r = 0.5;
  std::size_t dim = 64;

  /// LR-GCCF propagates over A+I, LightGCN over A.
  bool self_loops() const noexcept { return backbone == Backbone::lrgccf; }

  std::size_t combined_dim() const noexcept { return backbone == Backbone::lrgccf ? dim * (layers + 1) : dim; }

  void validate() const {
    if (dim == 0) throw ArgumentError("embedding dimension must be positive");
    if (backbone == Backbone::mf && layers != 0) throw ArgumentError("MF backbone requires layers = 0");
    if (!std::isfinite(r)) throw ArgumentError("normalization coefficient must be finite");
  }
};

struct EmbeddingTable {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  DenseMatrix E0;

  /// Xavier-uniform with fan_in = fan_out = d.
  static EmbeddingTable xavier(std::size_t num_users, std::size_t num_items, std::size_t dim, std::uint64_t seed) {
    EmbeddingTable t{num_users, num_items, DenseMatrix(num_users + num_items, dim)};
    const double bound = std::sqrt(6.0 / double(dim + dim));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-bound, bound);
    for (double& x : t.E0.data()) x = unif(rng);
    return t;
  }

  std::size_t num_nodes() const noexcept { return num_users + num_items; }
  std::size_t dim() const noexcept { return E0.cols(); }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

struct ForwardCache {
  std::size_t num_users = 0;
  std::vector<DenseMatrix> per_layer;
  DenseMatrix combined;

  std::span<const double> user_row(std::size_t u) const { return combined.row(u); }
  std::span<const double> item_row(std::size_t i) const { return combined.row(num_users + i); }
};

namespace detail {
inline void check_propagation(const ModelSpec& spec, const NormalizedAdjacency& P, const EmbeddingTable& table) {
  if (spec.layers == 0) return;
  if (P.size() != table.num_nodes())
    throw ArgumentError("propagation operator has " + std::to_string(P.size()) + " nodes, table has " +
                        std::to_string(table.num_nodes()));
}
}  // namespace detail

inline ForwardCache forward(const ModelSpec& spec, const NormalizedAdjacency& P, const EmbeddingTable& table) {
  spec.validate();
  if (table.dim() != spec.dim) throw ArgumentError("embedding table width differs from model dimension");
  detail::check_propagation(spec, P, table);

  ForwardCache cache;
  cache.num_users = table.num_users;
  cache.per_layer.reserve(spec.layers + 1);
  cache.per_layer.push_back(table.E0);
  for (std::size_t l = 1; l <= spec.layers; ++l) cache.per_layer.push_back(spmm(P.forward, cache.per_layer.back()));

  const std::size_t n = table.num_nodes();
  const std::size_t d = spec.dim;
  switch (spec.backbone) {
    case Backbone::mf:
      cache.combined = table.E0;
      break;
    case Backbone::lightgcn: {
      cache.combined = DenseMatrix(n, d);
      for (const auto& layer : cache.per_layer) cache.combined += layer;
      cache.combined *= 1.0 / double(spec.layers + 1);
      break;
    }
    case Backbone::lrgccf: {
      cache.combined = DenseMatrix(n, d * (spec.layers + 1));
      for (std::size_t a = 0; a < n; ++a) {
        auto dst = cache.combined.row(a);
        for (std::size_t l = 0; l <= spec.layers; ++l) {
          auto src = cache.per_layer[l].row(a);
          std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(l * d));
        }
      }
      break;
    }
  }
  return cache;
}

/// Dot product of the combined user and item rows.
inline double predict(const ForwardCache& cache, std::size_t u, std::size_t i) {
  if (u >= cache.num_users) throw ArgumentError("predict: user index out of range");
  if (cache.num_users + i >= cache.combined.rows()) throw ArgumentError("predict: item index out of range");
  return dot(cache.user_row(u), cache.item_row(i));
}

/**
 * Gradient on E0 given a gradient on the combined embeddings. Sums of
 * (P^T)^l G_l are evaluated Horner-style: acc = G_L; acc = G_l + P^T acc.
 */
inline DenseMatrix backward(const ModelSpec& spec, const NormalizedAdjacency& P, const ForwardCache& cache,
                            const DenseMatrix& grad_combined) {
  if (!grad_combined.same_shape(cache.combined)) throw ArgumentError("backward: gradient shape differs from combined");
  const std::size_t n = cache.combined.rows();
  const std::size_t d = spec.dim;
  if (spec.layers > 0 && P.size() != n) throw ArgumentError("backward: operator size mismatch");

  switch (spec.backbone) {
    case Backbone::mf:
      return grad_combined;
    case Backbone::lightgcn: {
      DenseMatrix acc = grad_combined;
      DenseMatrix tmp;
      for (std::size_t l = 0; l < spec.layers; ++l) {
        spmm_into(P.backward, acc, tmp);
        tmp += grad_combined;
        std::swap(acc, tmp);
      }
      acc *= 1.0 / double(spec.layers + 1);
      return acc;
    }
    default: {
      auto block = [&](std::size_t l) {
        DenseMatrix g(n, d);
        for (std::size_t a = 0; a < n; ++a) {
          auto src = grad_combined.row(a).subspan(l * d, d);
          std::copy(src.begin(), src.end(), g.row(a).begin());
        }
        return g;
      };
      DenseMatrix acc = block(spec.layers);
      DenseMatrix tmp;
      for (std::size_t l = spec.layers; l-- > 0;) {
        spmm_into(P.backward, acc, tmp);
        tmp += block(l);
        std::swap(acc, tmp);
      }
      return acc;
    }
  }
}

/**
 * Checkpoint layout: text header lines `key value` ending with `data`, then
 * rows*cols little-endian IEEE-754 doubles in row-major order.
 */
inline void save_checkpoint(const std::filesystem::path& path, const ModelSpec& spec, const EmbeddingTable& table,
                            std::uint64_t seed) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  std::ostringstream hdr;
  hdr.precision(17);
  hdr << "adjnorm-checkpoint 1\n"
      << "backbone " << to_string(spec.backbone) << '\n'
      << "layers " << spec.layers << '\n'
      << "r " << spec.r << '\n'
      << "dim " << spec.dim << '\n'
      << "seed " << seed << '\n'
      << "num_users " << table.num_users << '\n'
      << "num_items " << table.num_items << '\n'
      << "rows " << table.E0.rows() << '\n'
      << "cols " << table.E0.cols() << '\n'
      << "data\n";
  out << hdr.str();
  auto data = table.E0.data();
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
}

struct Checkpoint {
  ModelSpec spec;
  EmbeddingTable table;
  std::uint64_t seed = 0;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "adjnorm-checkpoint 1") throw DataError("not a checkpoint: " + path.string());
  Checkpoint ck;
  std::size_t rows = 0, cols = 0;
  while (std::getline(in, line) && line != "data") {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "backbone") {
      std::string v;
      ss >> v;
      ck.spec.backbone = parse_backbone(v);
    } else if (key == "layers") ss >> ck.spec.layers;
    else if (key == "r") ss >> ck.spec.r;
    else if (key == "dim") ss >> ck.spec.dim;
    else if (key == "seed") ss >> ck.seed;
    else if (key == "num_users") ss >> ck.table.num_users;
    else if (key == "num_items") ss >> ck.table.num_items;
    else if (key == "rows") ss >> rows;
    else if (key == "cols") ss >> cols;
  }
  if (line != "data" || rows != ck.table.num_users + ck.table.num_items || cols != ck.spec.dim)
    throw DataError("corrupt checkpoint header: " + path.string());
  ck.table.E0 = DenseMatrix(rows, cols);
  auto data = ck.table.E0.data();
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(data.size() * sizeof(double)))
    throw DataError("truncated checkpoint: " + path.string());
  return ck;
}

}  // namespace adjnorm
