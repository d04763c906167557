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

#include "nattr/network.hpp"

#include <set>

namespace nattr {

std::string_view kind_name(const LayerKind& kind) {
  static constexpr std::string_view kNames[] = {"dense", "conv2d", "relu", "maxpool", "flatten"};
  return kNames[kind.index()];
}

std::string to_string(const TargetSpec& target) {
  switch (target.kind) {
    case TargetSpec::Kind::kLogit: return "logit(" + std::to_string(target.cls) + ")";
    case TargetSpec::Kind::kTopLogitMinusMean: return "top_logit_minus_mean";
    case TargetSpec::Kind::kLogitMinusMean: return "logit_minus_mean(" + std::to_string(target.cls) + ")";
  }
  return "unknown";
}

Network::Network(Shape input_shape, std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  shapes_.push_back(input_shape);
  // Constructs a throwaway tensor to validate the extents.
  (void)Tensor(input_shape);
  std::set<std::string, std::less<>> names;
  for (const LayerSpec& layer : layers_) {
    if (layer.name.empty() || layer.name == kInputLayerName) {
      throw std::invalid_argument("layer name '" + layer.name + "' is reserved or empty");
    }
    if (!names.insert(layer.name).second) {
      throw std::invalid_argument("duplicate layer name '" + layer.name + "'");
    }
    shapes_.push_back(layers::output_shape(layer, shapes_.back()));
  }
  if (shapes_.back().size() != 1) {
    throw ShapeError("network output must be a vector of logits, got shape " +
                     shape_string(shapes_.back()));
  }
}

Index Network::slot(std::string_view name) const {
  if (name == kInputLayerName) return 0;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (layers_[k].name == name) return static_cast<Index>(k + 1);
  }
  std::string known;
  for (const auto& n : slot_names()) known += (known.empty() ? "" : ", ") + n;
  throw UnknownLayerError("unknown layer '" + std::string(name) + "' (known: " + known + ")");
}

std::string_view Network::slot_name(Index slot) const {
  if (slot == 0) return kInputLayerName;
  return layers_.at(static_cast<std::size_t>(slot - 1)).name;
}

std::vector<std::string> Network::slot_names() const {
  std::vector<std::string> names{std::string(kInputLayerName)};
  for (const auto& layer : layers_) names.push_back(layer.name);
  return names;
}

const Tensor& ForwardTrace::operator[](std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return activations_[i];
  }
  throw UnknownLayerError("trace has no layer '" + std::string(name) + "'");
}

ForwardTrace forward(const Network& net, const Tensor& x) {
  if (x.shape() != net.input_shape()) {
    throw ShapeError("forward: input shape " + shape_string(x.shape()) +
                     " does not match network input " + shape_string(net.input_shape()));
  }
  std::vector<Tensor> acts;
  acts.reserve(static_cast<std::size_t>(net.num_slots()));
  acts.push_back(x);
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const Index in = static_cast<Index>(k);
    acts.emplace_back(net.slot_shape(in + 1),
                      layers::forward(net.layers()[k].kind, net.slot_shape(in), net.slot_shape(in + 1),
                                      acts.back().values()));
  }
  return ForwardTrace(net.slot_names(), std::move(acts));
}

Eigen::VectorXd forward_from(const Network& net, Index slot, const Eigen::VectorXd& activation) {
  if (activation.size() != net.slot_size(slot)) {
    throw ShapeError("forward_from: activation of size " + std::to_string(activation.size()) +
                     " does not match slot shape " + shape_string(net.slot_shape(slot)));
  }
  Eigen::VectorXd a = activation;
  for (Index s = slot; s + 1 < net.num_slots(); ++s) {
    a = layers::forward(net.layers()[static_cast<std::size_t>(s)].kind, net.slot_shape(s),
                        net.slot_shape(s + 1), a);
  }
  return a;
}

Eigen::MatrixXd backward_to(const Network& net, const ForwardTrace& trace, Index slot,
                            const Eigen::MatrixXd& logit_cotangents) {
  if (logit_cotangents.rows() != net.output_dim()) {
    throw std::invalid_argument("target must be a scalar functional of the logits: expected " +
                                std::to_string(net.output_dim()) + " weights, got " +
                                std::to_string(logit_cotangents.rows()));
  }
  if (slot < 0 || slot >= net.num_slots()) throw std::out_of_range("backward_to: slot out of range");
  Eigen::MatrixXd cot = logit_cotangents;
  for (Index s = net.num_slots() - 1; s > slot; --s) {
    cot = layers::backward(net.layers()[static_cast<std::size_t>(s - 1)].kind, net.slot_shape(s - 1),
                           net.slot_shape(s), trace.at(s - 1).values(), cot);
  }
  return cot;
}

Tensor grad_wrt_layer(const Network& net, const ForwardTrace& trace, std::string_view layer,
                      const Eigen::VectorXd& target_weights) {
  const Index s = net.slot(layer);
  Eigen::MatrixXd g = backward_to(net, trace, s, target_weights);
  return Tensor(net.slot_shape(s), g.col(0));
}

Tensor grad_wrt_layer(const Network& net, const ForwardTrace& trace, std::string_view layer,
                      const TargetSpec& target) {
  return grad_wrt_layer(net, trace, layer, target_weights(target, trace.logits().values()));
}

std::vector<Eigen::VectorXd> forward_tangent(const Network& net, const ForwardTrace& trace,
                                             Index from, const Eigen::VectorXd& tangent) {
  std::vector<Eigen::VectorXd> out{tangent};
  for (Index s = from; s + 1 < net.num_slots(); ++s) {
    out.push_back(layers::tangent(net.layers()[static_cast<std::size_t>(s)].kind, net.slot_shape(s),
                                  net.slot_shape(s + 1), trace.at(s).values(), out.back()));
  }
  return out;
}

}  // namespace nattr
