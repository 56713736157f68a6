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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>

#include "adjnorm/baselines.hpp"
#include "adjnorm/metrics.hpp"
#include "adjnorm/training.hpp"
#include "test_util.hpp"

using namespace adjnorm;

TEST(BaselineConfig, AlphaRanges) {
  EXPECT_NO_THROW((BaselineConfig{BaselineKind::ns, 1.0}.validate()));
  EXPECT_THROW((BaselineConfig{BaselineKind::ns, 1.5}.validate()), ConfigError);
  EXPECT_THROW((BaselineConfig{BaselineKind::degdrop, -0.1}.validate()), ConfigError);
  EXPECT_NO_THROW((BaselineConfig{BaselineKind::pc, 7.0}.validate()));
  EXPECT_THROW((BaselineConfig{BaselineKind::pc, -1.0}.validate()), ConfigError);
  EXPECT_EQ(parse_baseline_kind("degdrop"), BaselineKind::degdrop);
  EXPECT_THROW(parse_baseline_kind("macr"), ConfigError);
}

TEST(PcAdjust, AlphaZeroKeepsRanking) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(-3, 3);
  std::uniform_int_distribution<std::uint32_t> deg(1, 50);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(40);
    std::vector<std::uint32_t> d(40);
    for (auto& x : s) x = unif(rng);
    for (auto& x : d) x = deg(rng);
    auto adjusted = s;
    pc_adjust(adjusted, d, 50.0, 0.0);
    EXPECT_EQ(top_k(s, 40), top_k(adjusted, 40));
  }
}

TEST(PcAdjust, EqualScoresFavourLowDegree) {
  for (double alpha : {0.01, 0.5, 3.0}) {
    std::vector<double> s{2.0, 2.0};
    const std::vector<std::uint32_t> d{9, 1};
    pc_adjust(s, d, 9.0, alpha);
    EXPECT_EQ(top_k(s, 2), (std::vector<std::uint32_t>{1, 0}));
  }
}

TEST(PcAdjust, StandardizesAndBoundsCompensation) {
  std::vector<double> s{1.0, 2.0, 3.0, 4.0};
  const std::vector<std::uint32_t> d{4, 4, 2, 1};
  auto z = s;
  pc_adjust(z, std::vector<std::uint32_t>{4, 4, 4, 4}, 4.0, 1.0);
  double mean = 0, var = 0;
  for (double x : z) mean += x / 4.0;
  for (double x : z) var += (x - mean) * (x - mean) / 4.0;
  EXPECT_NEAR(mean, 0.0, 1e-15);
  EXPECT_NEAR(var, 1.0, 1e-15);
  auto adj = s;
  pc_adjust(adj, d, 4.0, 2.0);
  for (std::size_t k = 0; k < 4; ++k) {
    const double comp = adj[k] - z[k];
    EXPECT_GE(comp, -1e-15);
    EXPECT_LE(comp, 2.0 + 1e-15);
  }
  // max-degree items keep their relative gap
  EXPECT_NEAR(adj[1] - adj[0], z[1] - z[0], 1e-15);
}

TEST(PcAdjust, ConstantScoresOnlyGetCompensation) {
  std::vector<double> s{5.0, 5.0, 5.0};
  pc_adjust(s, std::vector<std::uint32_t>{2, 1, 2}, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(s[0], 5.0);
  EXPECT_DOUBLE_EQ(s[1], 5.5);
}

TEST(PcAdjust, RankTopKIntegrationAlphaZeroIdentical) {
  std::mt19937_64 rng(4);
  const auto ds = testutil::random_dataset(30, 60, 0.2, rng);
  const auto emb = testutil::random_dense(90, 4, rng);
  RankOptions plain, pc;
  pc.pc_alpha = 0.0;
  EXPECT_EQ(rank_topk(emb, ds, plain).lists, rank_topk(emb, ds, pc).lists);
  pc.pc_alpha = 2.0;
  const auto with = rank_topk(emb, ds, pc);
  EXPECT_GE(nov_at_k(with, ds), nov_at_k(rank_topk(emb, ds, plain), ds));
}

namespace {
InteractionDataset small_split(std::uint64_t seed) {
  SplitConfig sc;
  sc.kcore_min = 1;
  return split(synth_powerlaw(80, 50, 10, 1.0, seed), sc);
}

TrainConfig short_config() {
  TrainConfig cfg;
  cfg.max_epochs = 6;
  cfg.batch_size = 128;
  cfg.seed = 11;
  return cfg;
}
}  // namespace

TEST(BaselineContracts, NsAlphaZeroIsPlainTraining) {
  const auto ds = small_split(3);
  const ModelSpec spec{Backbone::lightgcn, 2, 0.5, 8};
  const auto plain = train(ds, spec, short_config());
  const auto ns = train(ds, spec, short_config(), BaselineConfig{BaselineKind::ns, 0.0});
  EXPECT_EQ(plain.best, ns.best);
}

TEST(BaselineContracts, DegDropAlphaZeroIsPlainTraining) {
  const auto ds = small_split(4);
  const ModelSpec spec{Backbone::lrgccf, 2, 0.7, 8};
  const auto plain = train(ds, spec, short_config());
  const auto dd = train(ds, spec, short_config(), BaselineConfig{BaselineKind::degdrop, 0.0});
  EXPECT_EQ(plain.best, dd.best);
  const auto adj = build_adjacency(ds, false);
  EXPECT_EQ(drop_edges_degdrop(adj, ds.num_users, 0.0, 1), adj);
}

TEST(BaselineContracts, DegDropPositiveChangesTraining) {
  const auto ds = small_split(4);
  const ModelSpec spec{Backbone::lightgcn, 2, 0.5, 8};
  EXPECT_NE(train(ds, spec, short_config()).best,
            train(ds, spec, short_config(), BaselineConfig{BaselineKind::degdrop, 0.5}).best);
}

TEST(BaselineContracts, NsSamplingLawGoodnessOfFit) {
  std::mt19937_64 rng(2);
  const auto ds = testutil::random_dataset(40, 12, 0.3, rng);
  for (double alpha : {0.25, 0.5, 1.0}) {
    NegativeSampler neg(ds, alpha);
    std::vector<double> counts(ds.num_items, 0.0);
    constexpr int draws = 100000;
    for (int k = 0; k < draws; ++k) counts[neg(rng)] += 1.0;
    double z = 0.0;
    for (auto d : ds.item_degree) z += d ? std::pow(double(d), alpha) : 0.0;
    double chi2 = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < ds.num_items; ++i) {
      if (ds.item_degree[i] == 0) {
        EXPECT_EQ(counts[i], 0.0);
        continue;
      }
      const double expected = draws * std::pow(double(ds.item_degree[i]), alpha) / z;
      chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
      ++cells;
    }
    const boost::math::chi_squared dist(cells - 1);
    EXPECT_LT(chi2, boost::math::quantile(dist, 0.99)) << "alpha " << alpha;
  }
}
