// Copyright 2026 The tvsq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "tvsq/order.hpp"

namespace tvsq {
namespace {

TEST(Regressor, Layout) {
  const Series st{1, 2, 3, 4};
  const Series tv{5, 6, 7, 8};
  EXPECT_EQ(regressor(st, tv, 0, 2), Series{3});
  // r = 1 at the second sample: (q_st[1], q_st[2], q_tv[1]) in 1-based terms.
  EXPECT_EQ(regressor(st, tv, 1, 1), (Series{1, 2, 5}));
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t t = r; t < 4; ++t) {
      EXPECT_EQ(regressor(st, tv, r, t).size(), 2 * r + 1);
    }
  }
  EXPECT_THROW(regressor(st, tv, 2, 1), ContractError);
  EXPECT_THROW(regressor(st, tv, 1, 4), ContractError);
}

TEST(Lipschitz, ConstantOutputIsZero) {
  SplitMix64 rng(1);
  const Series st = testing::random_series(rng, 30);
  EXPECT_EQ(lipschitz_quotient(st, Series(30, 50.0), 2), 0.0);
}

TEST(Lipschitz, ThreeSamplesByHand) {
  // Only pair (2, 3): |1 - 3| / |(1,2,0) - (2,4,1)| = 2 / sqrt(6).
  const Series st{1, 2, 4};
  const Series tv{0, 1, 3};
  EXPECT_NEAR(lipschitz_quotient(st, tv, 1), 2.0 / std::sqrt(6.0), 1e-15);
  EXPECT_THROW(lipschitz_quotient(st, tv, 2), ContractError);
}

TEST(Lipschitz, DuplicateRegressors) {
  const Series st{1, 1, 1, 1};
  EXPECT_EQ(lipschitz_quotient(st, Series{2, 2, 2, 2}, 1), 0.0);
  EXPECT_EQ(lipschitz_quotient(st, Series{2, 2, 2, 3}, 0),
            std::numeric_limits<double>::infinity());
}

double brute_force(const Series& st, const Series& tv, std::size_t r) {
  double best = 0.0;
  for (std::size_t a = r; a < st.size(); ++a) {
    for (std::size_t b = r; b < st.size(); ++b) {
      if (a == b) continue;
      const Series pa = regressor(st, tv, r, a);
      const Series pb = regressor(st, tv, r, b);
      double d = 0.0;
      for (std::size_t k = 0; k < pa.size(); ++k) d += (pa[k] - pb[k]) * (pa[k] - pb[k]);
      if (d > 0.0) best = std::max(best, std::abs(tv[a] - tv[b]) / std::sqrt(d));
    }
  }
  return best;
}

TEST(Lipschitz, MatchesBruteForceAndNonIncreasing) {
  SplitMix64 rng(2);
  for (int k = 0; k < 100; ++k) {
    const Series st = testing::random_series(rng, 25);
    const Series tv = testing::random_series(rng, 25);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r <= 6; ++r) {
      const double q = lipschitz_quotient(st, tv, r);
      EXPECT_NEAR(q, brute_force(st, tv, r), 1e-12);
      EXPECT_LE(q, prev);
      prev = q;
    }
  }
}

TEST(Lipschitz, DatasetTakesWorstTrace) {
  SplitMix64 rng(3);
  const auto data = testing::synthetic_dataset(
      testing::random_stable_params(rng, 2), 3, 40, 4);
  double worst = 0.0;
  for (const auto& item : data.items) {
    worst = std::max(worst, lipschitz_quotient(item.stsq, item.tvsq.values, 2));
  }
  EXPECT_EQ(lipschitz_quotient(data, 2), worst);
}

TEST(Lipschitz, DifferencesShrinkOnModelData) {
  SplitMix64 rng(4);
  HWParams g = initial_params(2);
  g.b = {0.2, 0.5, 0.3};
  g.f = {0.4, 0.1};
  const auto data = testing::synthetic_dataset(g, 2, 150, 8, 0.0);
  Series q;
  for (std::size_t r = 0; r <= 6; ++r) q.push_back(lipschitz_quotient(data, r));
  // Steep drop up to the true order, small changes afterwards.
  EXPECT_GT(q[0] - q[2], 10.0 * (q[4] - q[6]));
}

TEST(DescriptionLength, Values) {
  // 0.1 (1 + 25 ln 4320 / 4320)
  const double expected = 0.1 * (1.0 + 25.0 * std::log(4320.0) / 4320.0);
  EXPECT_DOUBLE_EQ(description_length(0.1, 12, 15, 300), expected);
  EXPECT_NEAR(description_length(0.1, 12, 15, 300), 0.104845, 1e-6);
  EXPECT_EQ(description_length(0.0, 3, 6, 300), 0.0);
  double prev = -1.0;
  for (double e = 0.0; e <= 1.0; e += 0.05) {
    const double l = description_length(e, 4, 6, 300);
    EXPECT_GT(l, prev);
    EXPECT_GE(l, e);
    prev = l;
  }
  EXPECT_THROW(description_length(1.5, 1, 1, 10), ContractError);
  EXPECT_THROW(description_length(0.1, 10, 1, 10), ContractError);
  EXPECT_THROW(description_length(0.1, 1, 0, 10), ContractError);
}

TEST(SelectOrder, ScreenOnlyAndSingleCandidate) {
  SplitMix64 rng(5);
  const auto data = testing::synthetic_dataset(
      testing::random_stable_params(rng, 1), 2, 80, 6);
  const auto screen = select_order(data, {1, 2, 3}, TrainConfig{}, false);
  EXPECT_EQ(screen.selected, 0u);
  ASSERT_EQ(screen.candidates.size(), 3u);
  for (const auto& c : screen.candidates) {
    EXPECT_FALSE(c.outage.has_value());
    EXPECT_EQ(c.lipschitz, lipschitz_quotient(data, c.order));
  }

  TrainConfig cfg;
  cfg.max_descent_iters = 50;
  const auto one = select_order(data, {2}, cfg);
  EXPECT_EQ(one.selected, 2u);
  ASSERT_TRUE(one.candidates[0].description_length.has_value());
  EXPECT_EQ(*one.candidates[0].description_length,
            description_length(*one.candidates[0].outage, 2, 2, 80));
  EXPECT_THROW(select_order(data, {}, cfg), ContractError);
  EXPECT_THROW(select_order(data, {79}, cfg), ContractError);
}

}  // namespace
}  // namespace tvsq
