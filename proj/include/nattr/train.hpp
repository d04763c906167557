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

#ifndef NATTR_TRAIN_HPP
#define NATTR_TRAIN_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nattr/dataset.hpp"
#include "nattr/network.hpp"

namespace nattr {

struct TrainConfig {
  int epochs = 3;
  double learning_rate = 0.05;
  Index batch_size = 32;
  std::uint64_t seed = 7;
};

/// Raised when the loss becomes non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch, Index batch)
      : std::runtime_error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  int epoch() const { return epoch_; }
  Index batch() const { return batch_; }

 private:
  int epoch_;
  Index batch_;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
};

/// Mini-batch SGD on softmax cross-entropy over the logits. Returns the
/// updated copy; the input network is untouched. Shuffling uses an Rng seeded
/// with `config.seed`.
Network train_sgd(const Network& net, const LabeledDataset& data, const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Fraction of examples whose argmax logit equals the label.
double accuracy(const Network& net, const LabeledDataset& data);

/// Softmax cross-entropy of one logit vector against a label.
double cross_entropy(const Eigen::VectorXd& logits, int label);

/// All trainable parameters, layer by layer: weight then bias. Dense weights
/// are row-major; conv kernels follow their out x in x kh x kw layout.
Eigen::VectorXd parameter_vector(const Network& net);
Network with_parameters(const Network& net, const Eigen::VectorXd& params);

/// Gradient of the cross-entropy loss on one example, ordered as
/// parameter_vector().
Eigen::VectorXd loss_parameter_gradient(const Network& net, const Tensor& x, int label);

// Architectures --------------------------------------------------------------

/// 28x28x1 -> conv1 3x3x8 -> relu1 -> conv2 3x3x16 -> relu2 -> pool 2x2/2 ->
/// flatten -> fc1 32 -> relu3 -> fc2 10 logits, Kaiming-uniform initialised.
Network reference_mnist_net(std::uint64_t seed);

/// Dense ReLU network with the given widths (first = inputs, last = logits),
/// layers named dense1, relu1, dense2, ... Weights Kaiming-uniform, biases
/// uniform in [-0.5, 0.5] so kinks fall inside typical paths.
Network random_mlp(const std::vector<Index>& widths, std::uint64_t seed);

/// Same topology with the ReLUs removed (purely affine network).
Network random_linear_net(const std::vector<Index>& widths, std::uint64_t seed);

}  // namespace nattr

#endif  // NATTR_TRAIN_HPP
