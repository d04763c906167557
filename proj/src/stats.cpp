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

#include "nattr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace nattr {
namespace {

constexpr std::size_t kExactLimit = 8;

// Number of size-m subsets of {1..N} for every rank sum, indexed by sum.
std::vector<double> rank_sum_counts(std::size_t n_total, std::size_t m) {
  const std::size_t max_sum = n_total * (n_total + 1) / 2;
  // ways[j][s]: subsets of size j with sum s.
  std::vector<std::vector<double>> ways(m + 1, std::vector<double>(max_sum + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t r = 1; r <= n_total; ++r) {
    for (std::size_t j = std::min(m, r); j >= 1; --j) {
      for (std::size_t s = max_sum; s >= r; --s) ways[j][s] += ways[j - 1][s - r];
    }
  }
  return ways[m];
}

}  // namespace

RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("rank_sum_test: both samples must be nonempty");
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(n);
  for (double v : a) pooled.emplace_back(v, 0);
  for (double v : b) pooled.emplace_back(v, 1);
  std::sort(pooled.begin(), pooled.end(), [](const auto& l, const auto& r) { return l.first < r.first; });

  // Midranks and the tie term sum(t^3 - t).
  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    const double t = static_cast<double>(j - i);
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second == 0) rank_sum_a += midrank;
    }
    tie_term += t * t * t - t;
    i = j;
  }

  RankSumResult result;
  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2), dn = static_cast<double>(n);
  result.u_statistic = rank_sum_a - dn1 * (dn1 + 1.0) / 2.0;
  const double mean_u = dn1 * dn2 / 2.0;

  if (n1 < kExactLimit && n2 < kExactLimit && tie_term == 0.0) {
    const auto counts = rank_sum_counts(n, n1);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const double u_low = std::min(result.u_statistic, dn1 * dn2 - result.u_statistic);
    const double offset = dn1 * (dn1 + 1.0) / 2.0;
    double tail = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (static_cast<double>(s) - offset <= u_low + 1e-9) tail += counts[s];
    }
    result.p_value = std::min(1.0, 2.0 * tail / total);
    result.exact = true;
    return result;
  }

  const double variance = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (variance <= 0.0) {
    result.p_value = 1.0;
    return result;
  }
  const double z = (result.u_statistic - mean_u) / std::sqrt(variance);
  result.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
  return result;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("pearson: samples must be equal length and nonempty");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: x has zero variance");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace nattr
