// Copyright 2026 The nattr Authors.
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

#include "nattr/stats.hpp"
#include "test_util.hpp"

namespace nattr {
namespace {

TEST(RankSum, MatchesReferenceImplementation) {
  for (const auto& c : testing::oracles()["rank_sum"]) {
    const auto a = c["a"].get<std::vector<double>>();
    const auto b = c["b"].get<std::vector<double>>();
    const RankSumResult r = rank_sum_test(a, b);
    const double p = c["p"].get<double>();
    EXPECT_EQ(r.exact, c["method"] == "exact") << c.dump();
    EXPECT_NEAR(r.u_statistic, c["u"].get<double>(), 1e-12) << c.dump();
    EXPECT_NEAR(r.p_value, p, 1e-9 * std::max(p, 1e-300) + 1e-14) << c.dump();
  }
}

TEST(RankSum, SymmetricAndDegenerate) {
  const std::vector<double> a{0.3, 1.2, 5.0, 2.2, 0.1, 9.0, 4.4, 3.3, 7.7};
  const std::vector<double> b{1.0, 2.0, 8.0, 6.5, 0.2};
  const auto ab = rank_sum_test(a, b);
  const auto ba = rank_sum_test(b, a);
  EXPECT_NEAR(ab.p_value, ba.p_value, 1e-15);
  EXPECT_NEAR(ab.u_statistic + ba.u_statistic, static_cast<double>(a.size() * b.size()), 1e-12);
  const std::vector<double> same(10, 2.0);
  EXPECT_EQ(rank_sum_test(same, same).p_value, 1.0);
  EXPECT_THROW(rank_sum_test({}, b), std::invalid_argument);
}

TEST(Pearson, Values) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 6, 8, 10};
  const std::vector<double> z{5, 4, 3, 2, 1};
  const std::vector<double> flat{3, 3, 3, 3, 3};
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, z), -1.0, 1e-15);
  EXPECT_EQ(pearson(x, flat), 0.0);
  const std::vector<double> u{1, 2, 3, 4};
  const std::vector<double> v{1, 3, 2, 4};
  EXPECT_NEAR(pearson(u, v), 0.8, 1e-15);
  EXPECT_THROW(pearson(u, x), std::invalid_argument);
}

TEST(LeastSquares, Values) {
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> y{1, 3, 5, 7};
  const LinearFit f = least_squares(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
  const std::vector<double> noisy{1, 2, 2, 3};
  const LinearFit g = least_squares(x, noisy);
  EXPECT_NEAR(g.slope, 0.6, 1e-14);
  EXPECT_NEAR(g.intercept, 1.1, 1e-14);
  EXPECT_NEAR(g.r_squared, 0.9, 1e-14);
  EXPECT_THROW(least_squares(std::vector<double>{1, 1}, std::vector<double>{1, 2}), std::invalid_argument);
}

}  // namespace
}  // namespace nattr
