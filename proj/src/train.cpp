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

#include "nattr/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nattr/random.hpp"

namespace nattr {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Accumulated parameter gradients for one layer. Conv kernels are kept in
// im2col weight-matrix layout until the update.
struct ParamGrad {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

std::vector<ParamGrad> zero_grads(const Network& net) {
  std::vector<ParamGrad> grads(net.layers().size());
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const auto& kind = net.layers()[k].kind;
    if (const auto* d = std::get_if<Dense>(&kind)) {
      grads[k] = {Eigen::MatrixXd::Zero(d->weight.rows(), d->weight.cols()), Eigen::VectorXd::Zero(d->bias.size())};
    } else if (const auto* c = std::get_if<Conv2d>(&kind)) {
      grads[k] = {Eigen::MatrixXd::Zero(c->out_channels(), c->kernel_h() * c->kernel_w() * c->in_channels()),
                  Eigen::VectorXd::Zero(c->bias.size())};
    }
  }
  return grads;
}

// Adds the parameter gradients of one example and returns its loss.
double accumulate_example(const Network& net, const Tensor& x, int label, std::vector<ParamGrad>& grads,
                          bool* correct) {
  const ForwardTrace trace = forward(net, x);
  const Eigen::VectorXd& logits = trace.logits().values();
  *correct = argmax(logits) == label;
  Eigen::MatrixXd cot = softmax(logits);
  cot(label, 0) -= 1.0;

  // Index of the first layer with parameters; nothing below it needs a cotangent.
  std::size_t first_param = net.layers().size();
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    if (std::holds_alternative<Dense>(net.layers()[k].kind) || std::holds_alternative<Conv2d>(net.layers()[k].kind)) {
      first_param = k;
      break;
    }
  }

  for (std::size_t k = net.layers().size(); k-- > first_param;) {
    const Index s = static_cast<Index>(k);
    const auto& kind = net.layers()[k].kind;
    const Eigen::VectorXd& in = trace.at(s).values();
    if (std::holds_alternative<Dense>(kind)) {
      grads[k].weight.noalias() += cot.col(0) * in.transpose();
      grads[k].bias += cot.col(0);
    } else if (const auto* c = std::get_if<Conv2d>(&kind)) {
      const RowMatrix patches = layers::im2col(*c, net.slot_shape(s), net.slot_shape(s + 1), in);
      Eigen::Map<const RowMatrix> dy(cot.data(), patches.rows(), c->out_channels());
      grads[k].weight.noalias() += dy.transpose() * patches;
      grads[k].bias += dy.colwise().sum().transpose();
    }
    if (k > first_param) {
      cot = layers::backward(kind, net.slot_shape(s), net.slot_shape(s + 1), in, cot);
    }
  }
  return cross_entropy(logits, label);
}

void apply_update(Network& net, const std::vector<ParamGrad>& grads, double step) {
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    auto& kind = net.mutable_layer(k).kind;
    if (auto* d = std::get_if<Dense>(&kind)) {
      d->weight -= step * grads[k].weight;
      d->bias -= step * grads[k].bias;
    } else if (auto* c = std::get_if<Conv2d>(&kind)) {
      const Index ic = c->in_channels(), kh = c->kernel_h(), kw = c->kernel_w();
      for (Index o = 0; o < c->out_channels(); ++o)
        for (Index ch = 0; ch < ic; ++ch)
          for (Index ki = 0; ki < kh; ++ki)
            for (Index kj = 0; kj < kw; ++kj)
              c->kernels(o, ch, ki, kj) -= step * grads[k].weight(o, (ki * kw + kj) * ic + ch);
      c->bias -= step * grads[k].bias;
    }
  }
}

Eigen::MatrixXd kaiming_matrix(Rng& rng, Index rows, Index cols, Index fan_in) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Eigen::MatrixXd m(rows, cols);
  // Row-major fill order keeps the stream independent of Eigen's storage.
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

Conv2d kaiming_conv(Rng& rng, Index out_ch, Index in_ch, Index k) {
  Conv2d conv;
  conv.kernels = Tensor({out_ch, in_ch, k, k});
  const double bound = std::sqrt(6.0 / static_cast<double>(in_ch * k * k));
  for (Index i = 0; i < conv.kernels.size(); ++i) conv.kernels[i] = rng.uniform(-bound, bound);
  conv.bias = Eigen::VectorXd::Zero(out_ch);
  return conv;
}

std::vector<LayerSpec> mlp_layers(const std::vector<Index>& widths, std::uint64_t seed, bool with_relu) {
  if (widths.size() < 2) throw std::invalid_argument("an MLP needs at least input and output widths");
  Rng rng(seed);
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    Dense d;
    d.weight = kaiming_matrix(rng, widths[i + 1], widths[i], widths[i]);
    d.bias.resize(widths[i + 1]);
    for (Index j = 0; j < d.bias.size(); ++j) d.bias[j] = rng.uniform(-0.5, 0.5);
    layers.push_back({"dense" + std::to_string(i + 1), std::move(d)});
    if (with_relu && i + 2 < widths.size()) layers.push_back({"relu" + std::to_string(i + 1), Relu{}});
  }
  return layers;
}

}  // namespace

double cross_entropy(const Eigen::VectorXd& logits, int label) {
  const double m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum()) - logits[label];
}

Network train_sgd(const Network& net, const LabeledDataset& data, const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  if (data.empty()) throw std::invalid_argument("train_sgd: empty dataset");
  if (!(config.learning_rate >= 0.0)) throw std::invalid_argument("train_sgd: learning rate must be non-negative");
  if (config.batch_size <= 0 || config.epochs < 0) throw std::invalid_argument("train_sgd: bad batch size or epochs");
  for (int label : data.labels) {
    if (label < 0 || label >= net.output_dim()) {
      throw std::invalid_argument("train_sgd: label " + std::to_string(label) + " outside output_dim");
    }
  }

  Network model = net;
  Rng rng(config.seed);
  std::vector<Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    Index correct_count = 0;
    Index batch = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size), ++batch) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      auto grads = zero_grads(model);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < stop; ++i) {
        const auto n = static_cast<std::size_t>(order[i]);
        bool correct = false;
        batch_loss += accumulate_example(model, data.samples[n], data.labels[n], grads, &correct);
        correct_count += correct;
      }
      if (!std::isfinite(batch_loss)) throw DivergenceError(epoch, batch);
      apply_update(model, grads, config.learning_rate / static_cast<double>(stop - start));
      loss_sum += batch_loss;
    }
    if (on_epoch) {
      on_epoch({epoch, loss_sum / static_cast<double>(data.size()),
                static_cast<double>(correct_count) / static_cast<double>(data.size())});
    }
  }
  return model;
}

double accuracy(const Network& net, const LabeledDataset& data) {
  if (data.empty()) return 0.0;
  Index correct = 0;
  for (Index n = 0; n < data.size(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    correct += argmax(forward(net, data.samples[i]).logits().values()) == data.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

Eigen::VectorXd parameter_vector(const Network& net) {
  std::vector<double> out;
  for (const auto& layer : net.layers()) {
    if (const auto* d = std::get_if<Dense>(&layer.kind)) {
      for (Index r = 0; r < d->weight.rows(); ++r)
        for (Index c = 0; c < d->weight.cols(); ++c) out.push_back(d->weight(r, c));
      out.insert(out.end(), d->bias.data(), d->bias.data() + d->bias.size());
    } else if (const auto* c = std::get_if<Conv2d>(&layer.kind)) {
      out.insert(out.end(), c->kernels.values().data(), c->kernels.values().data() + c->kernels.size());
      out.insert(out.end(), c->bias.data(), c->bias.data() + c->bias.size());
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Index>(out.size()));
}

Network with_parameters(const Network& net, const Eigen::VectorXd& params) {
  Network model = net;
  Index pos = 0;
  auto take = [&](double* dst, Index count) {
    if (pos + count > params.size()) throw std::invalid_argument("with_parameters: parameter vector too short");
    std::copy(params.data() + pos, params.data() + pos + count, dst);
    pos += count;
  };
  for (std::size_t k = 0; k < model.layers().size(); ++k) {
    auto& kind = model.mutable_layer(k).kind;
    if (auto* d = std::get_if<Dense>(&kind)) {
      RowMatrix w(d->weight.rows(), d->weight.cols());
      take(w.data(), w.size());
      d->weight = w;
      take(d->bias.data(), d->bias.size());
    } else if (auto* c = std::get_if<Conv2d>(&kind)) {
      take(c->kernels.values().data(), c->kernels.size());
      take(c->bias.data(), c->bias.size());
    }
  }
  if (pos != params.size()) throw std::invalid_argument("with_parameters: parameter vector too long");
  return model;
}

Eigen::VectorXd loss_parameter_gradient(const Network& net, const Tensor& x, int label) {
  auto grads = zero_grads(net);
  bool correct = false;
  accumulate_example(net, x, label, grads, &correct);
  std::vector<double> out;
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const auto& kind = net.layers()[k].kind;
    if (std::holds_alternative<Dense>(kind)) {
      const auto& w = grads[k].weight;
      for (Index r = 0; r < w.rows(); ++r)
        for (Index c = 0; c < w.cols(); ++c) out.push_back(w(r, c));
    } else if (const auto* c = std::get_if<Conv2d>(&kind)) {
      const Index ic = c->in_channels(), kh = c->kernel_h(), kw = c->kernel_w();
      for (Index o = 0; o < c->out_channels(); ++o)
        for (Index ch = 0; ch < ic; ++ch)
          for (Index ki = 0; ki < kh; ++ki)
            for (Index kj = 0; kj < kw; ++kj) out.push_back(grads[k].weight(o, (ki * kw + kj) * ic + ch));
    } else {
      continue;
    }
    out.insert(out.end(), grads[k].bias.data(), grads[k].bias.data() + grads[k].bias.size());
  }
  return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Index>(out.size()));
}

Network reference_mnist_net(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LayerSpec> layers;
  layers.push_back({"conv1", kaiming_conv(rng, 8, 1, 3)});
  layers.push_back({"relu1", Relu{}});
  layers.push_back({"conv2", kaiming_conv(rng, 16, 8, 3)});
  layers.push_back({"relu2", Relu{}});
  layers.push_back({"pool", MaxPool{2, 2}});
  layers.push_back({"flatten", Flatten{}});
  Dense fc1{kaiming_matrix(rng, 32, 12 * 12 * 16, 12 * 12 * 16), Eigen::VectorXd::Zero(32)};
  layers.push_back({"fc1", std::move(fc1)});
  layers.push_back({"relu3", Relu{}});
  Dense fc2{kaiming_matrix(rng, 10, 32, 32), Eigen::VectorXd::Zero(10)};
  layers.push_back({"fc2", std::move(fc2)});
  return Network({28, 28, 1}, std::move(layers));
}

Network random_mlp(const std::vector<Index>& widths, std::uint64_t seed) {
  return Network({widths.front()}, mlp_layers(widths, seed, /*with_relu=*/true));
}

Network random_linear_net(const std::vector<Index>& widths, std::uint64_t seed) {
  return Network({widths.front()}, mlp_layers(widths, seed, /*with_relu=*/false));
}

}  // namespace nattr
