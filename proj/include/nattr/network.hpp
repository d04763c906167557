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

#ifndef NATTR_NETWORK_HPP
#define NATTR_NETWORK_HPP

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nattr/target.hpp"
#include "nattr/tensor.hpp"

namespace nattr {

/// Fully connected layer, y = W a + b with W of shape out x in.
struct Dense {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

/// 2-D convolution over HWC activations. Kernels are out_ch x in_ch x kh x kw.
struct Conv2d {
  Tensor kernels;
  Eigen::VectorXd bias;
  Index stride = 1;
  Index padding = 0;

  Index out_channels() const { return kernels.shape()[0]; }
  Index in_channels() const { return kernels.shape()[1]; }
  Index kernel_h() const { return kernels.shape()[2]; }
  Index kernel_w() const { return kernels.shape()[3]; }
};

struct Relu {};

/// Max pooling over HWC activations, no padding.
struct MaxPool {
  Index window = 2;
  Index stride = 2;
};

struct Flatten {};

using LayerKind = std::variant<Dense, Conv2d, Relu, MaxPool, Flatten>;

struct LayerSpec {
  std::string name;
  LayerKind kind;
};

std::string_view kind_name(const LayerKind& kind);

/// Name of the activation slot holding the network input.
inline constexpr std::string_view kInputLayerName = "input";

class UnknownLayerError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered stack of layers with validated, composable shapes.
///
/// Activation slots are numbered 0..layers().size(): slot 0 is the input and
/// slot k+1 is the output of layer k. The last slot holds the logits.
class Network {
 public:
  Network() = default;
  Network(Shape input_shape, std::vector<LayerSpec> layers);

  const Shape& input_shape() const { return shapes_.front(); }
  Index output_dim() const { return shape_size(shapes_.back()); }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  Index num_slots() const { return static_cast<Index>(shapes_.size()); }

  /// Slot of a named activation ("input" or a layer name).
  Index slot(std::string_view name) const;
  std::string_view slot_name(Index slot) const;
  const Shape& slot_shape(Index slot) const { return shapes_.at(static_cast<std::size_t>(slot)); }
  Index slot_size(Index slot) const { return shape_size(slot_shape(slot)); }
  std::vector<std::string> slot_names() const;

  /// Parameter access for training. Replacement values must keep their shapes.
  LayerSpec& mutable_layer(std::size_t k) { return layers_.at(k); }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
};

/// Activations of every slot for one input.
class ForwardTrace {
 public:
  ForwardTrace() = default;
  ForwardTrace(std::vector<std::string> names, std::vector<Tensor> activations)
      : names_(std::move(names)), activations_(std::move(activations)) {}

  const Tensor& at(Index slot) const { return activations_.at(static_cast<std::size_t>(slot)); }
  const Tensor& operator[](std::string_view name) const;
  const Tensor& input() const { return activations_.front(); }
  const Tensor& logits() const { return activations_.back(); }
  Index num_slots() const { return static_cast<Index>(activations_.size()); }
  const std::vector<Tensor>& activations() const { return activations_; }

  friend bool operator==(const ForwardTrace&, const ForwardTrace&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> activations_;
};

ForwardTrace forward(const Network& net, const Tensor& x);

/// Runs layers from `slot` onward, starting from the given activation of that
/// slot. Returns the logits.
Eigen::VectorXd forward_from(const Network& net, Index slot, const Eigen::VectorXd& activation);

/// Reverse-mode accumulation of cotangents from the logits to `slot`.
/// `logit_cotangents` is output_dim x k (one column per scalar target); the
/// result is slot_size x k.
Eigen::MatrixXd backward_to(const Network& net, const ForwardTrace& trace, Index slot,
                            const Eigen::MatrixXd& logit_cotangents);

/// d(target)/d(activation of layer), same shape as that activation. The
/// target weights are a linear functional of the logits (output_dim long).
Tensor grad_wrt_layer(const Network& net, const ForwardTrace& trace, std::string_view layer,
                      const Eigen::VectorXd& target_weights);

/// Same, resolving the target against the trace's own logits.
Tensor grad_wrt_layer(const Network& net, const ForwardTrace& trace, std::string_view layer,
                      const TargetSpec& target);

/// Forward-mode directional derivative: the tangent of every slot from `from`
/// onward when the activation at `from` moves along `tangent`.
std::vector<Eigen::VectorXd> forward_tangent(const Network& net, const ForwardTrace& trace,
                                             Index from, const Eigen::VectorXd& tangent);

namespace layers {

Shape output_shape(const LayerSpec& layer, const Shape& in_shape);

Eigen::VectorXd forward(const LayerKind& kind, const Shape& in_shape, const Shape& out_shape,
                        const Eigen::VectorXd& in);

/// Cotangent of the layer input given the layer input activation and the
/// cotangent of its output (columns are independent targets).
Eigen::MatrixXd backward(const LayerKind& kind, const Shape& in_shape, const Shape& out_shape,
                         const Eigen::VectorXd& in, const Eigen::MatrixXd& out_cotangent);

/// Tangent of the layer output along an input tangent, at input `in`.
Eigen::VectorXd tangent(const LayerKind& kind, const Shape& in_shape, const Shape& out_shape,
                        const Eigen::VectorXd& in, const Eigen::VectorXd& in_tangent);

/// Flat input index selected by each pooled output (first maximum on ties).
std::vector<Index> maxpool_argmax(const MaxPool& pool, const Shape& in_shape,
                                  const Shape& out_shape, const Eigen::VectorXd& in);

/// Row-major im2col: one row per output pixel, columns ordered (ki, kj, c).
Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> im2col(
    const Conv2d& conv, const Shape& in_shape, const Shape& out_shape, const Eigen::VectorXd& in);

/// Kernels as an out_ch x (kh*kw*in_ch) matrix matching im2col columns.
Eigen::MatrixXd conv_weight_matrix(const Conv2d& conv);

}  // namespace layers

}  // namespace nattr

#endif  // NATTR_NETWORK_HPP
