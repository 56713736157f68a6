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

#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "adjnorm/dataset.hpp"
#include "adjnorm/dense.hpp"
#include "adjnorm/sparse.hpp"

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("adjnorm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline adjnorm::DenseMatrix random_dense(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> unif(lo, hi);
  adjnorm::DenseMatrix m(rows, cols);
  for (double& x : m.data()) x = unif(rng);
  return m;
}

inline adjnorm::CsrMatrix random_csr(std::size_t rows, std::size_t cols, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(density);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::vector<adjnorm::Triplet> ts;
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c)
      if (keep(rng)) ts.push_back({r, c, val(rng)});
  return adjnorm::CsrMatrix::from_triplets(rows, cols, std::move(ts));
}

/// Dataset built directly from dense-id train/val/test pairs.
inline adjnorm::InteractionDataset make_dataset(std::size_t users, std::size_t items,
                                                std::vector<adjnorm::Interaction> train,
                                                std::vector<adjnorm::Interaction> val = {},
                                                std::vector<adjnorm::Interaction> test = {}) {
  adjnorm::InteractionDataset ds;
  ds.num_users = users;
  ds.num_items = items;
  ds.train = std::move(train);
  ds.val = std::move(val);
  ds.test = std::move(test);
  for (std::size_t u = 0; u < users; ++u) ds.user_keys.push_back("u" + std::to_string(u));
  for (std::size_t i = 0; i < items; ++i) ds.item_keys.push_back("i" + std::to_string(i));
  ds.rebuild_indexes();
  return ds;
}

/// Random dataset where every user has >= 1 train item; each user-item pair lands in one part.
inline adjnorm::InteractionDataset random_dataset(std::size_t users, std::size_t items, double density,
                                                  std::mt19937_64& rng) {
  std::vector<adjnorm::Interaction> train, val, test;
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<int> part(0, 9);
  std::uniform_int_distribution<std::uint32_t> any_item(0, static_cast<std::uint32_t>(items - 1));
  for (std::uint32_t u = 0; u < users; ++u) {
    const std::uint32_t anchor = any_item(rng);
    train.push_back({u, anchor});
    for (std::uint32_t i = 0; i < items; ++i) {
      if (i == anchor || !keep(rng)) continue;
      const int p = part(rng);
      (p < 6 ? train : (p < 7 ? val : test)).push_back({u, i});
    }
  }
  return make_dataset(users, items, std::move(train), std::move(val), std::move(test));
}

}  // namespace testutil
