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
#include <sstream>

#include "adjnorm/experiments.hpp"
#include "adjnorm/theory.hpp"
#include "test_util.hpp"

using namespace adjnorm;

namespace {

CsrMatrix edge_list(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  std::vector<Triplet> ts;
  for (auto [a, b] : edges) {
    ts.push_back({a, b, 1.0});
    ts.push_back({b, a, 1.0});
  }
  return CsrMatrix::from_triplets(n, n, std::move(ts));
}

CsrMatrix two_node() { return edge_list(2, {{0, 1}}); }
CsrMatrix star3() { return edge_list(4, {{0, 1}, {0, 2}, {0, 3}}); }

}  // namespace

TEST(LimitMatrix, TwoNodeIsHalf) {
  for (double r : {0.0, 0.5, 1.0, 1.5}) {
    const auto lim = limit_matrix(two_node(), r);
    EXPECT_DOUBLE_EQ(lim.denominator, 4.0);
    for (double v : lim.values.data()) EXPECT_DOUBLE_EQ(v, 0.5);
  }
}

TEST(LimitMatrix, StarCenterLeafEntry) {
  const auto lim = limit_matrix(star3(), 0.5);
  EXPECT_NEAR(lim.values(0, 1), std::sqrt(8.0) / 10.0, 1e-15);
  EXPECT_NEAR(lim.values(1, 0), std::sqrt(8.0) / 10.0, 1e-15);
  EXPECT_NEAR(lim.values(0, 1), 0.2828, 1e-4);
}

TEST(LimitMatrix, PropertyClosedFormAndStructure) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto adj = random_connected_graph(5 + trial, 0.2, rng);
    std::vector<double> deg(adj.rows(), 0.0);
    double edges2 = 0.0;
    for (std::size_t a = 0; a < adj.rows(); ++a)
      for (std::size_t b = 0; b < adj.cols(); ++b)
        if (adj.at(a, b) != 0.0) {
          deg[a] += 1.0;
          edges2 += 1.0;
        }
    for (double r : {0.0, 0.5, 1.0, 1.25}) {
      const auto lim = limit_matrix(adj, r);
      const double denom = edges2 + double(adj.rows());
      for (std::size_t i = 0; i < adj.rows(); ++i)
        for (std::size_t j = 0; j < adj.rows(); ++j) {
          const double want = std::pow(deg[i] + 1, 1 - r) * std::pow(deg[j] + 1, r) / denom;
          EXPECT_NEAR(lim.values(i, j), want, 1e-15);
          EXPECT_GT(lim.values(i, j), 0.0);
          if (r == 1.0) {
            EXPECT_EQ(lim.values(i, j), lim.values(0, j));
          }
        }
      // fixed point of the self-looped operator
      const auto P = normalize_r(add_self_loops(adj), r);
      EXPECT_LE(max_abs_diff(matmul(P.forward.to_dense(), lim.values), lim.values), 1e-14);
    }
  }
}

TEST(LimitMatrix, Preconditions) {
  EXPECT_THROW(limit_matrix(edge_list(3, {{0, 1}}), 0.5), PreconditionError);
  EXPECT_THROW(limit_matrix(add_self_loops(two_node()), 0.5), PreconditionError);
  EXPECT_THROW(limit_matrix(CsrMatrix::from_triplets(2, 2, {{0, 1, 1.0}}), 0.5), PreconditionError);
  std::mt19937_64 rng(2);
  EXPECT_THROW(limit_matrix(random_connected_graph(12, 0.1, rng), 0.5, 10), PreconditionError);
}

TEST(PowerIterate, SmallPowers) {
  std::mt19937_64 rng(3);
  const auto P = normalize_r(add_self_loops(random_connected_graph(8, 0.3, rng)), 0.7);
  EXPECT_EQ(power_iterate(P, 0), DenseMatrix::identity(8));
  EXPECT_EQ(power_iterate(P, 1), P.forward.to_dense());
  const auto dense = P.forward.to_dense();
  EXPECT_LE(max_abs_diff(power_iterate(P, 3), matmul(dense, matmul(dense, dense))), 1e-15);
  const auto two = normalize_r(add_self_loops(two_node()), 0.3);
  EXPECT_LE(max_abs_diff(power_iterate(two, 1), limit_matrix(two_node(), 0.3).values), 1e-16);
  EXPECT_THROW(power_iterate(P, 2, 4), PreconditionError);
}

TEST(Convergence, TwoNodeAndVacuousTolerances) {
  const auto c = convergence_check(two_node(), 1.5, 1e-12, 100);
  ASSERT_TRUE(c.converged());
  EXPECT_EQ(*c.l_star, 1u);
  EXPECT_LT(c.final_error, 1e-15);
  const auto vac = convergence_check(star3(), 0.5, 2.0, 100);
  ASSERT_TRUE(vac.converged());
  EXPECT_EQ(*vac.l_star, 0u);
  std::mt19937_64 rng(4);
  EXPECT_FALSE(convergence_check(random_connected_graph(10, 0.3, rng), 0.5, 0.0, 200).converged());
}

TEST(Convergence, BipartiteThirtyNodes) {
  std::mt19937_64 rng(5);
  const auto adj = random_connected_bipartite(12, 18, 0.1, rng);
  EXPECT_TRUE(is_connected(adj));
  const auto c = convergence_check(adj, 0.5, 1e-8, 10000);
  ASSERT_TRUE(c.converged());
  EXPECT_LE(*c.l_star, 10000u);
}

TEST(Convergence, PropertyRandomGraphs) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto adj = random_connected_graph(10 + 3 * trial, 0.15, rng);
    EXPECT_TRUE(is_connected(adj));
    EXPECT_TRUE(has_symmetric_pattern(adj));
    for (double r : {0.0, 0.5, 1.0, 1.25}) EXPECT_TRUE(convergence_check(adj, r, 1e-8, 10000).converged());
  }
}

TEST(Ordering, StarGraphCases) {
  std::mt19937_64 rng(7);
  const auto h0 = testutil::random_dense(4, 6, rng);
  auto gram = [&](double r, std::size_t a, std::size_t b) {
    const auto h = limit_embeddings(limit_matrix(star3(), r), h0);
    return dot(h.row(a), h.row(b));
  };
  // ego leaf 1: center 0 versus another leaf 2
  EXPECT_GT(gram(0.5, 1, 0), gram(0.5, 1, 2));
  EXPECT_LT(gram(1.5, 1, 0), gram(1.5, 1, 2));
  EXPECT_NEAR(gram(1.0, 1, 0), gram(1.0, 1, 2), 1e-12);
}

TEST(Ordering, PropertyExpectedCasesHold) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto adj = random_connected_graph(6 + trial, 0.25, rng);
    for (double r : {0.0, 0.5, 0.9, 1.0, 1.1, 1.5}) {
      const auto rep = ordering_check(adj, r, trial);
      EXPECT_EQ(rep.expected, expected_case(r));
      EXPECT_GT(rep.triples, 0u);
      EXPECT_EQ(rep.violations, 0u) << "r=" << r;
      if (r == 1.0) {
        EXPECT_LT(rep.max_abs_diff, 1e-12);
      }
    }
  }
}

TEST(Ordering, SquaredSumFormMatchesDirectDot) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto adj = random_connected_graph(8 + trial, 0.2, rng);
    const auto h0 = testutil::random_dense(adj.rows(), 5, rng);
    for (double r : {0.0, 0.5, 1.0, 1.25}) {
      const auto lim = limit_matrix(adj, r);
      const auto h = limit_embeddings(lim, h0);
      for (std::size_t i = 0; i < adj.rows(); ++i)
        for (std::size_t j = 0; j < adj.rows(); ++j) {
          const double direct = dot(h.row(i), h.row(j));
          EXPECT_NEAR(limit_dot_closed_form(lim, h0, i, j), direct, 1e-10 * std::abs(direct));
        }
    }
  }
}

TEST(VerifyTheory, SmallRunPasses) {
  TheoryParams p;
  p.sizes = {6, 12};
  p.rs = {0.5, 1.0, 1.5};
  p.graphs_per_cell = 3;
  std::ostringstream out;
  const auto cells = run_verify_theory(p, out);
  ASSERT_EQ(cells.size(), 6u);
  for (const auto& c : cells) {
    EXPECT_TRUE(c.passed());
    if (c.r == 1.0) {
      EXPECT_LT(c.max_abs_diff, 1e-12);
    }
  }
  EXPECT_FALSE(out.str().empty());
}

TEST(VerifyTheory, ZeroToleranceNeverConverges) {
  TheoryParams p;
  p.sizes = {8};
  p.rs = {0.5};
  p.graphs_per_cell = 2;
  p.tol = 0.0;
  p.l_max = 300;
  std::ostringstream out;
  const auto cells = run_verify_theory(p, out);
  EXPECT_EQ(cells[0].converged, 0u);
  EXPECT_FALSE(cells[0].passed());
}
