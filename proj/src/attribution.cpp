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

#include "nattr/attribution.hpp"

#include <array>
#include <chrono>
#include <utility>

#include "nattr/deeplift.hpp"

namespace nattr {
namespace {

constexpr std::array<std::pair<Method, std::string_view>, 6> kMethodNames{{
    {Method::kIntegratedGradients, "ig"},
    {Method::kNeuronIntegratedGradients, "nig"},
    {Method::kConductanceDirect, "conductance"},
    {Method::kGradXDiff, "gradxdiff"},
    {Method::kDeepLiftRescale, "deeplift-rescale"},
    {Method::kDeepLiftDefault, "deeplift-default"},
}};

void validate_path(const Network& net, const PathSpec& path) {
  if (path.steps < 1) throw std::invalid_argument("path: steps must be >= 1, got " + std::to_string(path.steps));
  if (path.reference.shape() != net.input_shape() || path.input.shape() != net.input_shape()) {
    throw ShapeError("path: reference " + shape_string(path.reference.shape()) + " and input " +
                     shape_string(path.input.shape()) + " must both match network input " +
                     shape_string(net.input_shape()));
  }
}

// Quadrature weight of the gradient at node i (0..n).
double node_weight(QuadratureRule rule, Index i, Index n) {
  if (rule == QuadratureRule::kRightRiemann) return i == 0 ? 0.0 : 1.0 / static_cast<double>(n);
  return (i == 0 || i == n) ? 0.5 / static_cast<double>(n) : 1.0 / static_cast<double>(n);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Resolves the target on the actual input and fills the common result fields.
struct SingleTarget {
  Eigen::VectorXd weights;
  double delta = 0.0;
};

SingleTarget resolve(const Network& net, const PathSpec& path, const TargetSpec& target, EvalCounts& counts) {
  const ForwardTrace x = forward(net, path.input);
  const ForwardTrace ref = forward(net, path.reference);
  counts.forward_passes += 2;
  SingleTarget t;
  t.weights = target_weights(target, x.logits().values());
  t.delta = t.weights.dot(x.logits().values() - ref.logits().values());
  return t;
}

AttributionResult finish(Method method, std::string_view layer, const Network& net, Index slot,
                         const Eigen::MatrixXd& scores, const SingleTarget& t, Index steps, const EvalCounts& counts,
                         std::chrono::steady_clock::time_point start) {
  AttributionResult r;
  r.method = method;
  r.layer = std::string(layer);
  r.scores = Tensor(net.slot_shape(slot), scores.col(0));
  r.target_delta = t.delta;
  r.completeness_residual = scores.col(0).sum() - t.delta;
  r.steps = steps;
  r.counts = counts;
  r.wall_seconds = seconds_since(start);
  return r;
}

Eigen::MatrixXd ig_scores(const Network& net, const PathSpec& path, const Eigen::MatrixXd& w, EvalCounts* counts) {
  const Index n = path.steps;
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(net.slot_size(0), w.cols());
  for (Index i = 0; i <= n; ++i) {
    const double weight = node_weight(path.rule, i, n);
    if (weight == 0.0) continue;
    const ForwardTrace trace = forward(net, interpolate(path, i));
    if (counts) ++counts->forward_passes;
    avg += weight * backward_to(net, trace, 0, w);
    if (counts) counts->gradient_passes += w.cols();
  }
  const Eigen::VectorXd dx = path.input.values() - path.reference.values();
  return dx.asDiagonal() * avg;
}

Eigen::MatrixXd conductance_scores(const Network& net, const PathSpec& path, Index slot, const Eigen::MatrixXd& w,
                                   EvalCounts* counts, Index input_size_cap) {
  const Index inputs = net.slot_size(0);
  if (inputs > input_size_cap) {
    throw std::invalid_argument("total_conductance_direct: input has " + std::to_string(inputs) +
                                " entries, above the cap of " + std::to_string(input_size_cap));
  }
  if (slot == 0) throw std::invalid_argument("total_conductance_direct: layer must be a hidden layer");
  const Index n = path.steps;
  const Eigen::VectorXd dx = path.input.values() - path.reference.values();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(net.slot_size(slot), w.cols());
  for (Index k = 0; k <= n; ++k) {
    const double weight = node_weight(path.rule, k, n);
    if (weight == 0.0) continue;
    const ForwardTrace trace = forward(net, interpolate(path, k));
    const Eigen::MatrixXd grad = backward_to(net, trace, slot, w);
    if (counts) {
      ++counts->forward_passes;
      counts->gradient_passes += w.cols();
    }
    // Jacobian of the layer with respect to each input, one column at a time.
    for (Index i = 0; i < inputs; ++i) {
      if (dx[i] == 0.0) continue;
      Eigen::VectorXd e = Eigen::VectorXd::Zero(inputs);
      e[i] = 1.0;
      const auto tangents = forward_tangent(net, trace, 0, e);
      if (counts) ++counts->tangent_passes;
      const Eigen::VectorXd& column = tangents[static_cast<std::size_t>(slot)];
      out += (weight * dx[i]) * (column.asDiagonal() * grad);
    }
  }
  return out;
}

Eigen::MatrixXd grad_x_diff_scores(const Network& net, const PathSpec& path, Index slot, const Eigen::MatrixXd& w,
                                   EvalCounts* counts) {
  const ForwardTrace x = forward(net, path.input);
  const ForwardTrace ref = forward(net, path.reference);
  const Eigen::MatrixXd grad = backward_to(net, x, slot, w);
  if (counts) {
    counts->forward_passes += 2;
    counts->gradient_passes += w.cols();
  }
  const Eigen::VectorXd dy = x.at(slot).values() - ref.at(slot).values();
  return dy.asDiagonal() * grad;
}

}  // namespace

std::string_view method_name(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  return std::nullopt;
}

Tensor interpolate(const PathSpec& path, Index i) {
  if (path.steps < 1) throw std::invalid_argument("interpolate: steps must be >= 1");
  if (i < 0 || i > path.steps) {
    throw std::out_of_range("interpolate: step " + std::to_string(i) + " outside [0, " +
                            std::to_string(path.steps) + "]");
  }
  if (path.reference.shape() != path.input.shape()) {
    throw ShapeError("interpolate: reference " + shape_string(path.reference.shape()) + " vs input " +
                     shape_string(path.input.shape()));
  }
  if (i == 0) return path.reference;
  if (i == path.steps) return path.input;
  const double alpha = static_cast<double>(i) / static_cast<double>(path.steps);
  return Tensor(path.input.shape(), path.reference.values() + alpha * (path.input.values() - path.reference.values()));
}

namespace detail {

Eigen::MatrixXd nig_scores(const Network& net, const PathSpec& path, Index slot, const Eigen::MatrixXd& w,
                           EvalCounts* counts, bool difference_activations) {
  const Index n = path.steps;
  const bool trapezoid = path.rule == QuadratureRule::kTrapezoid;
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(net.slot_size(slot), w.cols());

  ForwardTrace prev = forward(net, path.reference);
  if (counts) ++counts->forward_passes;
  Eigen::MatrixXd prev_grad;
  if (trapezoid) {
    prev_grad = backward_to(net, prev, slot, w);
    if (counts) counts->gradient_passes += w.cols();
  }
  for (Index i = 1; i <= n; ++i) {
    ForwardTrace cur = forward(net, interpolate(path, i));
    Eigen::MatrixXd grad = backward_to(net, cur, slot, w);
    if (counts) {
      ++counts->forward_passes;
      counts->gradient_passes += w.cols();
    }
    const Eigen::VectorXd step = difference_activations ? Eigen::VectorXd(cur.at(slot).values() - prev.at(slot).values())
                                                        : cur.at(slot).values() / static_cast<double>(n);
    if (trapezoid) {
      scores += step.asDiagonal() * (0.5 * (prev_grad + grad));
      prev_grad = std::move(grad);
    } else {
      scores += step.asDiagonal() * grad;
    }
    prev = std::move(cur);
  }
  return scores;
}

}  // namespace detail

AttributionResult neuron_integrated_gradients(const Network& net, const PathSpec& path, std::string_view layer,
                                              const TargetSpec& target) {
  const auto start = std::chrono::steady_clock::now();
  validate_path(net, path);
  const Index slot = net.slot(layer);
  // Top-class resolution reads the logits at the input; that pass is not
  // part of the n+1 path evaluations.
  EvalCounts setup;
  const SingleTarget t = resolve(net, path, target, setup);
  EvalCounts counts;
  const Eigen::MatrixXd scores = detail::nig_scores(net, path, slot, t.weights, &counts);
  return finish(Method::kNeuronIntegratedGradients, layer, net, slot, scores, t, path.steps, counts, start);
}

AttributionResult integrated_gradients(const Network& net, const PathSpec& path, const TargetSpec& target) {
  const auto start = std::chrono::steady_clock::now();
  validate_path(net, path);
  EvalCounts setup;
  const SingleTarget t = resolve(net, path, target, setup);
  EvalCounts counts;
  const Eigen::MatrixXd scores = ig_scores(net, path, t.weights, &counts);
  return finish(Method::kIntegratedGradients, kInputLayerName, net, 0, scores, t, path.steps, counts, start);
}

AttributionResult total_conductance_direct(const Network& net, const PathSpec& path, std::string_view layer,
                                           const TargetSpec& target, Index input_size_cap) {
  const auto start = std::chrono::steady_clock::now();
  validate_path(net, path);
  const Index slot = net.slot(layer);
  EvalCounts setup;
  const SingleTarget t = resolve(net, path, target, setup);
  EvalCounts counts;
  const Eigen::MatrixXd scores = conductance_scores(net, path, slot, t.weights, &counts, input_size_cap);
  return finish(Method::kConductanceDirect, layer, net, slot, scores, t, path.steps, counts, start);
}

AttributionResult grad_x_diff(const Network& net, const PathSpec& path, std::string_view layer,
                              const TargetSpec& target) {
  const auto start = std::chrono::steady_clock::now();
  validate_path(net, path);
  const Index slot = net.slot(layer);
  EvalCounts setup;
  const SingleTarget t = resolve(net, path, target, setup);
  EvalCounts counts;
  const Eigen::MatrixXd scores = grad_x_diff_scores(net, path, slot, t.weights, &counts);
  return finish(Method::kGradXDiff, layer, net, slot, scores, t, 1, counts, start);
}

Eigen::MatrixXd normalize_across_classes(const Eigen::MatrixXd& per_class_scores) {
  if (per_class_scores.rows() < 2) {
    throw std::invalid_argument("normalize_across_classes: need at least 2 classes, got " +
                                std::to_string(per_class_scores.rows()));
  }
  return per_class_scores.rowwise() - per_class_scores.colwise().mean();
}

Tensor normalize_across_classes(const Tensor& per_class_scores) {
  if (per_class_scores.rank() != 2) {
    throw ShapeError("normalize_across_classes: expected classes x neurons, got " +
                     shape_string(per_class_scores.shape()));
  }
  const Index classes = per_class_scores.shape()[0];
  const Index neurons = per_class_scores.shape()[1];
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMatrix in = Eigen::Map<const RowMatrix>(per_class_scores.values().data(), classes, neurons);
  const RowMatrix out = normalize_across_classes(Eigen::MatrixXd(in));
  return Tensor(per_class_scores.shape(), Eigen::Map<const Eigen::VectorXd>(out.data(), out.size()));
}

Eigen::MatrixXd attribute_targets(const Network& net, Method method, const PathSpec& path, Index slot,
                                  const Eigen::MatrixXd& target_weights, EvalCounts* counts, Index input_size_cap) {
  validate_path(net, path);
  if (target_weights.rows() != net.output_dim()) {
    throw std::invalid_argument("attribute: target weights need " + std::to_string(net.output_dim()) + " rows");
  }
  switch (method) {
    case Method::kNeuronIntegratedGradients:
      return detail::nig_scores(net, path, slot, target_weights, counts);
    case Method::kIntegratedGradients:
      if (slot != 0) throw std::invalid_argument("ig attributes the input layer only");
      return ig_scores(net, path, target_weights, counts);
    case Method::kConductanceDirect:
      return conductance_scores(net, path, slot, target_weights, counts, input_size_cap);
    case Method::kGradXDiff:
      return grad_x_diff_scores(net, path, slot, target_weights, counts);
    case Method::kDeepLiftRescale:
    case Method::kDeepLiftDefault: {
      const ForwardTrace x = forward(net, path.input);
      const ForwardTrace ref = forward(net, path.reference);
      if (counts) {
        counts->forward_passes += 2;
        counts->multiplier_passes += target_weights.cols();
      }
      return deeplift_scores(net, ref, x, slot, target_weights,
                             method == Method::kDeepLiftRescale ? DeepLiftRules::kRescaleAll
                                                                : DeepLiftRules::kDefaultMixed);
    }
  }
  throw std::invalid_argument("unknown attribution method");
}

Eigen::MatrixXd per_class_targets(const Network& net) {
  return Eigen::MatrixXd::Identity(net.output_dim(), net.output_dim());
}

}  // namespace nattr
