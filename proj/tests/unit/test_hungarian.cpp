/*
 * Copyright 2026 The mvassoc Authors.
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

#include <random>
#include <set>

#include "mvassoc/hungarian.hpp"
#include "support/oracles.hpp"

namespace mvassoc {
namespace {

void expect_valid(const Assignment& a, const Eigen::MatrixXd& c) {
  ASSERT_EQ(a.size(), static_cast<std::size_t>(std::min(c.rows(), c.cols())));
  std::set<int> rows, cols;
  for (const auto& [r, col] : a) {
    EXPECT_TRUE(rows.insert(r).second);
    EXPECT_TRUE(cols.insert(col).second);
    EXPECT_GE(r, 0);
    EXPECT_LT(r, c.rows());
    EXPECT_GE(col, 0);
    EXPECT_LT(col, c.cols());
  }
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
}

TEST(KuhnMunkres, ZeroDiagonal) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Ones(3, 3);
  c.diagonal().setZero();
  const auto a = kuhn_munkres_assign(c);
  EXPECT_EQ(a, (Assignment{{0, 0}, {1, 1}, {2, 2}}));
  EXPECT_EQ(assignment_cost(c, a), 0.0);
}

TEST(KuhnMunkres, EmptySides) {
  EXPECT_TRUE(kuhn_munkres_assign(Eigen::MatrixXd(0, 4)).empty());
  EXPECT_TRUE(kuhn_munkres_assign(Eigen::MatrixXd(3, 0)).empty());
  EXPECT_TRUE(kuhn_munkres_assign(Eigen::MatrixXd(0, 0)).empty());
}

TEST(KuhnMunkres, RejectsBadCosts) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Ones(2, 2);
  c(0, 1) = -0.5;
  EXPECT_THROW(kuhn_munkres_assign(c), InvariantError);
  c(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(kuhn_munkres_assign(c), InvariantError);
}

TEST(KuhnMunkres, RandomSquareMatchesPermutationEnumeration) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    Eigen::MatrixXd c(4, 4);
    for (int i = 0; i < 16; ++i) c.data()[i] = u(rng);
    const auto a = kuhn_munkres_assign(c);
    expect_valid(a, c);
    EXPECT_NEAR(assignment_cost(c, a), oracle::brute_force_assignment(c), 1e-12);
  }
}

TEST(KuhnMunkres, RandomRectangularMatchesInjectionEnumeration) {
  std::mt19937_64 rng(103);
  std::uniform_int_distribution<int> u(0, 20);
  for (int k = 0; k < 300; ++k) {
    const int r = 1 + k % 6, cdim = 1 + (k / 6) % 6;
    Eigen::MatrixXd c(r, cdim);
    for (int i = 0; i < r * cdim; ++i) c.data()[i] = u(rng);
    const auto a = kuhn_munkres_assign(c);
    expect_valid(a, c);
    EXPECT_EQ(assignment_cost(c, a), oracle::brute_force_assignment(c));
  }
}

TEST(KuhnMunkres, TwoByThreeFixture) {
  Eigen::MatrixXd c(2, 3);
  c << 4, 1, 3,
       2, 0, 5;
  // Six injections; the best is (0,1)+(1,0) = 3.
  const auto a = kuhn_munkres_assign(c);
  EXPECT_EQ(a, (Assignment{{0, 1}, {1, 0}}));
  EXPECT_EQ(oracle::brute_force_assignment(c), 3.0);
}

TEST(KuhnMunkres, PaddingExceedsAnyRealAssignment) {
  Eigen::MatrixXd c(2, 3);
  c << 0.5, 2.0, 7.0,
       1.0, 3.0, 0.0;
  EXPECT_EQ(padding_cost(c), 80.0);
}

}  // namespace
}  // namespace mvassoc
