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

#ifndef NATTR_ATTRIBUTION_HPP
#define NATTR_ATTRIBUTION_HPP

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nattr/network.hpp"
#include "nattr/target.hpp"
#include "nattr/tensor.hpp"

namespace nattr {

enum class QuadratureRule { kRightRiemann, kTrapezoid };

/// Straight-line path from `reference` to `input`, discretised into `steps`
/// intervals. Point i is reference + (i / steps) * (input - reference).
struct PathSpec {
  Tensor reference;
  Tensor input;
  Index steps = 50;
  QuadratureRule rule = QuadratureRule::kRightRiemann;
};

/// Point i of the path, 0 <= i <= steps. Endpoints are returned exactly.
Tensor interpolate(const PathSpec& path, Index i);

enum class Method {
  kIntegratedGradients,
  kNeuronIntegratedGradients,
  kConductanceDirect,
  kGradXDiff,
  kDeepLiftRescale,
  kDeepLiftDefault,
};

std::string_view method_name(Method method);
std::optional<Method> parse_method(std::string_view name);

/// Evaluations issued by one attribution call.
struct EvalCounts {
  Index forward_passes = 0;
  Index gradient_passes = 0;
  Index multiplier_passes = 0;
  Index tangent_passes = 0;

  EvalCounts& operator+=(const EvalCounts& o) {
    forward_passes += o.forward_passes;
    gradient_passes += o.gradient_passes;
    multiplier_passes += o.multiplier_passes;
    tangent_passes += o.tangent_passes;
    return *this;
  }
};

struct AttributionResult {
  Method method = Method::kNeuronIntegratedGradients;
  std::string layer;
  Tensor scores;
  /// Sum of scores minus (target(input) - target(reference)).
  double completeness_residual = 0.0;
  double target_delta = 0.0;
  Index steps = 0;
  double wall_seconds = 0.0;
  EvalCounts counts;
};

/// Neuron Integrated Gradients on the activations of `layer`:
///   score(y) = sum_{i=1..n} g_y(x_i) * (F_y(x_i) - F_y(x_{i-1}))
/// with g the gradient of the target with respect to the layer at point i
/// (right rule) or the mean of the gradients at points i-1 and i
/// (trapezoid). Costs n+1 forward passes and n (right) or n+1 (trapezoid)
/// gradient passes.
AttributionResult neuron_integrated_gradients(const Network& net, const PathSpec& path, std::string_view layer,
                                              const TargetSpec& target);

/// Integrated Gradients on the input: (x - x') * average gradient over the
/// same quadrature nodes as neuron_integrated_gradients.
AttributionResult integrated_gradients(const Network& net, const PathSpec& path, const TargetSpec& target);

/// Brute-force Total Conductance of every neuron in `layer`:
///   sum_i (x_i - x'_i) * sum_k w_k * [dF/dy * dy/dx_i](x_k)
/// with the Jacobian dy/dx built one input column at a time by forward-mode
/// tangents. Refuses inputs with more than `input_size_cap` entries.
AttributionResult total_conductance_direct(const Network& net, const PathSpec& path, std::string_view layer,
                                           const TargetSpec& target, Index input_size_cap = 64);

/// Gradient at the actual input times the activation difference.
AttributionResult grad_x_diff(const Network& net, const PathSpec& path, std::string_view layer,
                              const TargetSpec& target);

/// Subtracts the per-neuron mean over classes: out[c][j] = in[c][j] - mean_c in[.][j].
Tensor normalize_across_classes(const Tensor& per_class_scores);
Eigen::MatrixXd normalize_across_classes(const Eigen::MatrixXd& per_class_scores);

/// Scores for several linear targets at once. `target_weights` is
/// output_dim x T; the result is layer_size x T. `counts` accumulates the
/// evaluations issued (gradient and multiplier passes counted per target).
Eigen::MatrixXd attribute_targets(const Network& net, Method method, const PathSpec& path, Index slot,
                                  const Eigen::MatrixXd& target_weights, EvalCounts* counts = nullptr,
                                  Index input_size_cap = 64);

/// Weight matrix whose column c selects logit c (output_dim x output_dim).
Eigen::MatrixXd per_class_targets(const Network& net);

namespace detail {

/// Neuron Integrated Gradients with the activation differencing optionally
/// replaced by the raw activation at each point. Only the second form is
/// wrong; it exists as a negative control for the equivalence check.
Eigen::MatrixXd nig_scores(const Network& net, const PathSpec& path, Index slot,
                           const Eigen::MatrixXd& target_weights, EvalCounts* counts,
                           bool difference_activations = true);

}  // namespace detail

}  // namespace nattr

#endif  // NATTR_ATTRIBUTION_HPP
