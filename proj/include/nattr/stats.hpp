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

#ifndef NATTR_STATS_HPP
#define NATTR_STATS_HPP

#include <span>

namespace nattr {

struct RankSumResult {
  double u_statistic = 0.0;  // U of the first sample
  double p_value = 1.0;      // two-sided
  bool exact = false;
};

/// Two-sided Mann-Whitney U test. Uses the exact null distribution when both
/// samples have fewer than 8 values and there are no ties, otherwise the
/// normal approximation with tie-corrected variance. Identical pooled values
/// give p = 1.
RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b);

/// Pearson correlation; 0 when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace nattr

#endif  // NATTR_STATS_HPP
