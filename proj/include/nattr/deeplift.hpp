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

#ifndef NATTR_DEEPLIFT_HPP
#define NATTR_DEEPLIFT_HPP

#include <Eigen/Core>

#include <string_view>
#include <vector>

#include "nattr/attribution.hpp"
#include "nattr/network.hpp"

namespace nattr {

/// Which nonlinearity rule each ReLU uses.
///   kRescaleAll:   Rescale everywhere.
///   kDefaultMixed: Rescale on ReLUs fed by a convolution, RevealCancel on
///                  ReLUs fed by a dense layer.
enum class DeepLiftRules { kRescaleAll, kDefaultMixed };

/// Difference-from-reference of every slot, split into positive and negative
/// parts that sum to the full difference, together with the per-slot
/// multipliers of one target. Slots below `from_slot` carry no multipliers.
///
/// The split starts at the input (x - x' into its positive and negative
/// entries) and is carried forward: linear layers route each weighted term by
/// its sign, Rescale scales both parts by dy/da, RevealCancel averages the two
/// orderings of adding the parts.
struct MultiplierStack {
  Index from_slot = 0;
  std::vector<Eigen::VectorXd> delta_pos;
  std::vector<Eigen::VectorXd> delta_neg;
  std::vector<Eigen::VectorXd> mult_pos;
  std::vector<Eigen::VectorXd> mult_neg;
  double target_delta = 0.0;

  /// sum_j m+ d+ + m- d- at `slot`.
  double contribution_sum(Index slot) const;
  /// Largest |contribution_sum(s) - target_delta| over the populated slots.
  double max_conservation_error() const;
};

/// Forward delta decomposition and backward multipliers for one target.
MultiplierStack deeplift_multipliers(const Network& net, const ForwardTrace& reference_trace,
                                     const ForwardTrace& input_trace, Index from_slot,
                                     const Eigen::VectorXd& target_weights, DeepLiftRules rules);

/// Per-neuron scores m+ d+ + m- d- at `slot` for several targets
/// (output_dim x T weights, result slot_size x T).
Eigen::MatrixXd deeplift_scores(const Network& net, const ForwardTrace& reference_trace,
                                const ForwardTrace& input_trace, Index slot, const Eigen::MatrixXd& target_weights,
                                DeepLiftRules rules);

AttributionResult deeplift_attribute(const Network& net, const Tensor& reference, const Tensor& input,
                                     std::string_view layer, const TargetSpec& target, DeepLiftRules rules);

/// Below this |delta| a ratio multiplier falls back to the local derivative.
inline constexpr double kDeepLiftEpsilon = 1e-7;

}  // namespace nattr

#endif  // NATTR_DEEPLIFT_HPP
