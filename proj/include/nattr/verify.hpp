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

// Self-checking property suites run on generated small networks.

#ifndef NATTR_VERIFY_HPP
#define NATTR_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nattr/network.hpp"

namespace nattr {

struct VerifyConfig {
  int networks = 20;
  std::uint64_t seed = 1;
  Index steps = 2000;
  Index size_cap = 64;
  /// Negative control: replaces the activation differences in the neuron
  /// path sum with plain activations.
  bool skip_differencing = false;
  int threads = 1;
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  double worst_error = 0.0;
  double tolerance = 0.0;
  Index cases = 0;
  std::string detail;  // where the worst error occurred
};

/// Relative error with the denominator floored at 1e-6.
double relative_error(double value, double reference);

/// Small MLP with 2..8 inputs and two ReLU hidden layers.
Network random_small_mlp(std::uint64_t seed);

/// Small conv net exercising every layer kind.
Network random_small_convnet(std::uint64_t seed);

/// Layer conductance integrated exactly along the straight path for networks
/// that are piecewise linear (ReLU, max-pool). Activation-pattern switch points
/// are located by bisection and each linear piece is integrated in closed
/// form. Returns slot_size x target columns.
Eigen::MatrixXd exact_piecewise_conductance(const Network& net, const Tensor& reference, const Tensor& input,
                                            Index slot, const Eigen::MatrixXd& target_weights);

/// Neuron path sums against the brute-force conductance oracle on every hidden
/// layer. Both are right-endpoint sums that differ by O(1/n) where a ReLU
/// switches inside a step, so the bound is 20/n of the layer's largest score.
/// The detail string also counts neurons above 1e-4 per-neuron relative error.
PropertyResult verify_equivalence(const VerifyConfig& config);
/// Sum of the exact piecewise conductance equals the target difference.
PropertyResult verify_path_limit(const VerifyConfig& config);
/// |sum of scores - target difference| over the L1 mass of the scores, 20/n.
PropertyResult verify_completeness(const VerifyConfig& config);
/// Layer-wise multiplier conservation for both rule sets, 1e-8.
PropertyResult verify_deeplift_conservation(const VerifyConfig& config);
/// Central differences with h = 1e-5 at inputs kept 1e-3 away from kinks:
/// every layer kind alone, the chained gradient, and the loss parameter
/// gradient. Vector relative error (2-norm), 1e-6.
PropertyResult verify_finite_differences(const VerifyConfig& config);
/// All methods agree on networks without nonlinearities, 1e-9.
PropertyResult verify_linear_collapse(const VerifyConfig& config);

std::vector<PropertyResult> run_verify(const VerifyConfig& config);

}  // namespace nattr

#endif  // NATTR_VERIFY_HPP
