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
#include <map>
#include <random>

#include "adjnorm/training.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace adjnorm;

namespace {

InteractionDataset small_synthetic(std::size_t users, std::size_t items, std::uint64_t seed) {
  return split(synth_powerlaw(users, items, 10, 1.0, seed), SplitConfig{});
}

}  // namespace

TEST(SampleBatch, ForcedNegativeWithTwoItems) {
  const auto ds = testutil::make_dataset(1, 2, {{0, 0}});
  NegativeSampler neg(ds, 0.0);
  std::mt19937_64 rng(1);
  const auto batch = sample_batch(ds, 500, neg, rng);
  ASSERT_EQ(batch.size(), 500u);
  for (const auto& t : batch) {
    EXPECT_EQ(t.i, 0u);
    EXPECT_EQ(t.j, 1u);
  }
}

TEST(SampleBatch, PropertyTriplesRespectTrainMembership) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ds = testutil::random_dataset(20, 30, 0.2, rng);
    for (double alpha : {0.0, 0.5, 1.0}) {
      NegativeSampler neg(ds, alpha);
      const auto batch = sample_batch(ds, 300, neg, rng);
      for (const auto& t : batch) {
        const auto& seen = ds.user_train_items[t.u];
        EXPECT_TRUE(std::binary_search(seen.begin(), seen.end(), t.i));
        EXPECT_FALSE(std::binary_search(seen.begin(), seen.end(), t.j));
        if (alpha > 0.0) {
          EXPECT_GE(ds.item_degree[t.j], 1u);
        }
      }
    }
  }
}

TEST(SampleBatch, SaturatedUserIsSkipped) {
  const auto ds = testutil::make_dataset(1, 3, {{0, 0}, {0, 1}, {0, 2}});
  NegativeSampler neg(ds, 0.0);
  std::mt19937_64 rng(3);
  set_quiet(true);
  EXPECT_TRUE(sample_batch(ds, 10, neg, rng).empty());
  set_quiet(false);
}

TEST(SampleBatch, DeterministicUnderSeed) {
  std::mt19937_64 g(4);
  const auto ds = testutil::random_dataset(15, 20, 0.3, g);
  NegativeSampler n1(ds, 0.5), n2(ds, 0.5);
  std::mt19937_64 a(9), b(9);
  EXPECT_EQ(sample_batch(ds, 200, n1, a), sample_batch(ds, 200, n2, b));
}

TEST(NegativeSampler, PowerLawRatioOneToThree) {
  // item 0 has degree 1, item 1 has degree 3
  const auto ds = testutil::make_dataset(4, 2, {{0, 0}, {1, 1}, {2, 1}, {3, 1}});
  NegativeSampler neg(ds, 1.0);
  std::mt19937_64 rng(5);
  constexpr int draws = 100000;
  int ones = 0;
  for (int k = 0; k < draws; ++k) ones += neg(rng) == 1 ? 1 : 0;
  const double p1 = ones / double(draws);
  EXPECT_NEAR(p1 / 0.75, 1.0, 0.02);
  EXPECT_NEAR((1.0 - p1) / 0.25, 1.0, 0.02);
}

TEST(NegativeSampler, ColdItemsExcludedWhenAlphaPositive) {
  const auto ds = testutil::make_dataset(2, 3, {{0, 0}, {1, 1}});
  NegativeSampler pos(ds, 0.5), uni(ds, 0.0);
  std::mt19937_64 rng(6);
  bool uniform_hits_cold = false;
  for (int k = 0; k < 2000; ++k) {
    EXPECT_NE(pos(rng), 2u);
    uniform_hits_cold |= uni(rng) == 2u;
  }
  EXPECT_TRUE(uniform_hits_cold);
}

TEST(SampleBatch, UniformNegativesPassChiSquare) {
  // one user who has seen items 0 and 1 of 10
  const auto ds = testutil::make_dataset(1, 10, {{0, 0}, {0, 1}});
  NegativeSampler neg(ds, 0.0);
  std::mt19937_64 rng(7);
  const auto batch = sample_batch(ds, 100000, neg, rng);
  std::map<std::uint32_t, double> counts;
  for (const auto& t : batch) counts[t.j] += 1.0;
  ASSERT_EQ(counts.size(), 8u);
  const double expected = double(batch.size()) / 8.0;
  double chi2 = 0.0;
  for (auto& [item, c] : counts) {
    EXPECT_GE(item, 2u);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  EXPECT_LT(chi2, 18.475);  // 0.99 quantile, 7 degrees of freedom
}

TEST(Softplus, StableAtExtremes) {
  EXPECT_DOUBLE_EQ(softplus(0.0), std::log(2.0));
  EXPECT_NEAR(softplus(-40.0), std::exp(-40.0), 1e-30);
  EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
  EXPECT_TRUE(std::isfinite(softplus(-800.0)));
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_TRUE(std::isfinite(sigmoid(-800.0)));
}

namespace {
ForwardCache cache_1d(double user, double item_i, double item_j) {
  ForwardCache c;
  c.num_users = 1;
  c.combined = DenseMatrix(3, 1);
  c.combined(0, 0) = user;
  c.combined(1, 0) = item_i;
  c.combined(2, 0) = item_j;
  return c;
}
}  // namespace

TEST(BprLoss, EqualScoresGiveLnTwo) {
  const auto c = cache_1d(1.0, 0.5, 0.5);
  EmbeddingTable t{1, 2, c.combined};
  const std::vector<BprTriple> triples{{0, 0, 1}, {0, 0, 1}};
  EXPECT_NEAR(bpr_loss_and_grad(triples, c, t, 0.0).loss, 0.693147180559945, 1e-12);
}

TEST(BprLoss, LargeMarginDoesNotOverflow) {
  const auto c = cache_1d(1.0, 40.0, 0.0);
  EmbeddingTable t{1, 2, c.combined};
  const std::vector<BprTriple> triples{{0, 0, 1}};
  const auto g = bpr_loss_and_grad(triples, c, t, 0.0);
  EXPECT_NEAR(g.loss, 4.248354255291589e-18, 1e-30);
  EXPECT_TRUE(g.grad_combined.all_finite());
}

TEST(BprLoss, EmptyBatchThrows) {
  const auto c = cache_1d(1.0, 1.0, 1.0);
  EmbeddingTable t{1, 2, c.combined};
  EXPECT_THROW(bpr_loss_and_grad({}, c, t, 0.0), ArgumentError);
}

TEST(BprLoss, HandGradientCoefficients) {
  // u=2, i=1, j=3 in one dimension: margin = 2*3 - 2*1 = 4, s = sigmoid(4)
  const auto c = cache_1d(2.0, 1.0, 3.0);
  EmbeddingTable t{1, 2, c.combined};
  const std::vector<BprTriple> triples{{0, 0, 1}};
  const auto g = bpr_loss_and_grad(triples, c, t, 0.1);
  const double s = 1.0 / (1.0 + std::exp(-4.0));
  EXPECT_NEAR(g.grad_combined(0, 0), -s * (1.0 - 3.0), 1e-15);
  EXPECT_NEAR(g.grad_combined(1, 0), -s * 2.0, 1e-15);
  EXPECT_NEAR(g.grad_combined(2, 0), s * 2.0, 1e-15);
  EXPECT_NEAR(g.grad_l2_direct(0, 0), 0.4, 1e-15);
  EXPECT_NEAR(g.grad_l2_direct(2, 0), 0.6, 1e-15);
  EXPECT_NEAR(g.loss, std::log1p(std::exp(4.0)) + 0.1 * (4.0 + 1.0 + 9.0), 1e-12);
}

TEST(BprLoss, L2CountsDistinctRowsOnce) {
  const auto c = cache_1d(1.0, 1.0, 1.0);
  EmbeddingTable t{1, 2, c.combined};
  const std::vector<BprTriple> triples{{0, 0, 1}, {0, 0, 1}, {0, 0, 1}};
  EXPECT_NEAR(bpr_loss_and_grad(triples, c, t, 1.0).loss, std::log(2.0) + 3.0, 1e-12);
}

TEST(Objective, DirectionalFiniteDifference) {
  std::mt19937_64 rng(40);
  for (int trial = 0; trial < 6; ++trial) {
    const auto ds = testutil::random_dataset(4, 6, 0.4, rng);
    const ModelSpec spec{trial % 2 ? Backbone::lrgccf : Backbone::lightgcn, 2, 0.6 + 0.1 * trial, 3};
    const auto P = propagation_for(spec, ds);
    const auto table = EmbeddingTable::xavier(4, 6, 3, trial);
    NegativeSampler neg(ds, 0.0);
    const auto triples = sample_batch(ds, 6, neg, rng);
    const auto [loss, grad] = objective_and_gradient(spec, P, table, triples, 0.05);
    const auto delta = testutil::random_dense(10, 3, rng);
    constexpr double eps = 1e-5;
    EmbeddingTable up = table, down = table;
    for (std::size_t k = 0; k < delta.data().size(); ++k) {
      up.E0.data()[k] += eps * delta.data()[k];
      down.E0.data()[k] -= eps * delta.data()[k];
    }
    const double numeric = (objective_and_gradient(spec, P, up, triples, 0.05).first -
                            objective_and_gradient(spec, P, down, triples, 0.05).first) /
                           (2.0 * eps);
    const double analytic = dot(grad.data(), delta.data());
    EXPECT_NEAR(numeric, analytic, 1e-5 * std::max(1e-6, std::abs(analytic)));
  }
}

TEST(Objective, FullBatchDescentIsMonotone) {
  std::mt19937_64 rng(41);
  const auto ds = testutil::random_dataset(6, 9, 0.35, rng);
  const ModelSpec spec{Backbone::lightgcn, 2, 0.5, 4};
  const auto P = propagation_for(spec, ds);
  auto table = EmbeddingTable::xavier(6, 9, 4, 3);
  NegativeSampler neg(ds, 0.0);
  const auto triples = sample_batch(ds, 12, neg, rng);
  double prev = objective_and_gradient(spec, P, table, triples, 0.0).first;
  for (int step = 0; step < 100; ++step) {
    auto [loss, grad] = objective_and_gradient(spec, P, table, triples, 0.0);
    grad *= -0.01;
    table.E0 += grad;
    const double now = objective_and_gradient(spec, P, table, triples, 0.0).first;
    EXPECT_LE(now, prev + 1e-15);
    prev = now;
  }
}

TEST(Adam, ZeroGradientLeavesTableUnchanged) {
  std::mt19937_64 rng(1);
  EmbeddingTable t{2, 2, testutil::random_dense(4, 3, rng)};
  const auto before = t;
  AdamState st;
  adam_step(st, t, DenseMatrix(4, 3), 0.001);
  EXPECT_EQ(t, before);
}

TEST(Adam, FirstStepHandValue) {
  EmbeddingTable t{1, 0, DenseMatrix(1, 1)};
  AdamState st;
  DenseMatrix g(1, 1);
  g(0, 0) = 1.0;
  adam_step(st, t, g, 0.001);
  EXPECT_NEAR(t.E0(0, 0), -0.001 / (1.0 + 1e-8), 1e-18);
  EXPECT_NEAR(t.E0(0, 0), -0.000999999990, 1e-15);
  EXPECT_EQ(st.t, 1u);
}

TEST(Adam, MatchesScalarReferenceOverSteps) {
  EmbeddingTable t{1, 0, DenseMatrix(1, 1)};
  AdamState st;
  double x = 0.0, m = 0.0, v = 0.0;
  for (int step = 1; step <= 20; ++step) {
    const double grad = std::sin(step) + 0.3 * x;
    DenseMatrix g(1, 1);
    g(0, 0) = grad;
    adam_step(st, t, g, 0.01);
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad * grad;
    x -= 0.01 * (m / (1.0 - std::pow(0.9, step))) / (std::sqrt(v / (1.0 - std::pow(0.999, step))) + 1e-8);
    EXPECT_NEAR(t.E0(0, 0), x, 1e-15);
  }
}

TEST(Adam, NonFiniteGradientAborts) {
  EmbeddingTable t{1, 0, DenseMatrix(1, 2)};
  AdamState st;
  DenseMatrix g(1, 2);
  g(0, 1) = std::nan("");
  EXPECT_THROW(adam_step(st, t, g, 0.001), NumericalError);
}

TEST(Adam, PropertyMomentsFinite) {
  std::mt19937_64 rng(2);
  EmbeddingTable t{3, 3, testutil::random_dense(6, 4, rng)};
  AdamState st;
  for (int k = 0; k < 50; ++k) adam_step(st, t, testutil::random_dense(6, 4, rng, -10, 10), 0.01);
  EXPECT_TRUE(st.m.all_finite());
  for (double x : st.v.data()) EXPECT_GE(x, 0.0);
  EXPECT_TRUE(t.E0.all_finite());
}

TEST(Train, DeterministicForSameSeed) {
  const auto ds = small_synthetic(60, 40, 1);
  TrainConfig cfg;
  cfg.max_epochs = 10;
  cfg.batch_size = 64;
  cfg.seed = 3;
  const ModelSpec spec{Backbone::lightgcn, 2, 0.5, 8};
  EXPECT_EQ(train(ds, spec, cfg).best, train(ds, spec, cfg).best);
}

TEST(Train, StopsAfterPatienceAndReturnsArgBest) {
  const auto ds = small_synthetic(60, 40, 2);
  TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.eval_every = 1;
  cfg.patience = 1;
  cfg.batch_size = 64;
  cfg.seed = 5;
  const ModelSpec spec{Backbone::mf, 0, 0.5, 8};
  Validator decreasing = [](const ModelSpec&, const NormalizedAdjacency&, const EmbeddingTable&, std::size_t epoch) {
    return 1.0 / double(epoch);
  };
  const auto res = train(ds, spec, cfg, {}, decreasing);
  EXPECT_TRUE(res.early_stopped);
  EXPECT_EQ(res.evaluations, 2u);
  EXPECT_EQ(res.log.size(), 2u);
  EXPECT_EQ(res.best_epoch, 1u);

  TrainConfig one = cfg;
  one.max_epochs = 1;
  const auto first = train(ds, spec, one, {}, decreasing);
  EXPECT_EQ(res.best, first.best);
  EXPECT_NE(res.best, EmbeddingTable::xavier(ds.num_users, ds.num_items, 8, 5));
}

TEST(Train, ArgBestIsNotLast) {
  const auto ds = small_synthetic(60, 40, 3);
  TrainConfig cfg;
  cfg.max_epochs = 6;
  cfg.eval_every = 1;
  cfg.patience = 10;
  cfg.batch_size = 64;
  const ModelSpec spec{Backbone::mf, 0, 0.5, 8};
  Validator peak = [](const ModelSpec&, const NormalizedAdjacency&, const EmbeddingTable&, std::size_t epoch) {
    return epoch == 3 ? 1.0 : 0.0;
  };
  const auto res = train(ds, spec, cfg, {}, peak);
  TrainConfig three = cfg;
  three.max_epochs = 3;
  EXPECT_EQ(res.best_epoch, 3u);
  EXPECT_EQ(res.best, train(ds, spec, three, {}, peak).best);
}

TEST(Train, ZeroEpochsReturnsInitialTable) {
  const auto ds = small_synthetic(40, 30, 4);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  cfg.seed = 8;
  const auto res = train(ds, ModelSpec{Backbone::lightgcn, 1, 0.5, 4}, cfg);
  EXPECT_TRUE(res.log.empty());
  EXPECT_EQ(res.best, EmbeddingTable::xavier(ds.num_users, ds.num_items, 4, 8));
}

TEST(Train, EmptyValidationIsConfigError) {
  const auto ds = testutil::make_dataset(2, 2, {{0, 0}, {1, 1}});
  EXPECT_THROW(train(ds, ModelSpec{Backbone::mf, 0, 0.5, 4}, TrainConfig{}), ConfigError);
}

TEST(Train, SmokeImprovesValidationRecall) {
  const auto ds = small_synthetic(200, 100, 5);
  const ModelSpec spec{Backbone::lightgcn, 2, 0.5, 16};
  TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.batch_size = 256;
  cfg.learning_rate = 0.01;
  cfg.seed = 1;
  const auto init = EmbeddingTable::xavier(ds.num_users, ds.num_items, spec.dim, cfg.seed);
  const double before = validation_recall(spec, propagation_for(spec, ds), init, ds);
  const auto res = train(ds, spec, cfg);
  EXPECT_GT(res.best_val_recall, before);
  EXPECT_DOUBLE_EQ(validation_recall(spec, propagation_for(spec, ds), res.best, ds), res.best_val_recall);
}
