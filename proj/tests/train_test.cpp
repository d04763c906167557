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

#include <gtest/gtest.h>

#include "nattr/dataset.hpp"
#include "nattr/model_io.hpp"
#include "nattr/train.hpp"
#include "test_util.hpp"

namespace nattr {
namespace {

TEST(Train, LearnsBlobs) {
  const auto data = synth_blobs(1, 200, 4);
  const Network net = random_mlp({4, 16, 2}, 3);
  TrainConfig config;
  config.epochs = 50;
  config.learning_rate = 0.05;
  config.batch_size = 16;
  std::vector<EpochStats> history;
  const Network trained = train_sgd(net, data, config, [&](const EpochStats& s) { history.push_back(s); });
  ASSERT_EQ(history.size(), 50u);
  EXPECT_LT(history.back().mean_loss, history.front().mean_loss);
  EXPECT_GE(accuracy(trained, data), 0.99);
  EXPECT_GE(accuracy(trained, synth_blobs(2, 200, 4)), 0.99);
}

TEST(Train, ZeroLearningRateLeavesParametersUntouched) {
  const Network net = random_mlp({4, 8, 2}, 5);
  TrainConfig config;
  config.learning_rate = 0.0;
  const Network out = train_sgd(net, synth_blobs(1, 64, 4), config);
  EXPECT_EQ(save_model(out), save_model(net));
}

TEST(Train, SameSeedSameBytes) {
  const auto data = synth_blobs(4, 100, 3);
  TrainConfig config;
  config.epochs = 4;
  const Network a = train_sgd(random_mlp({3, 8, 2}, 1), data, config);
  const Network b = train_sgd(random_mlp({3, 8, 2}, 1), data, config);
  EXPECT_EQ(save_model(a), save_model(b));
  config.seed = 8;
  EXPECT_NE(save_model(train_sgd(random_mlp({3, 8, 2}, 1), data, config)), save_model(a));
}

TEST(Train, DivergenceIsReported) {
  TrainConfig config;
  config.epochs = 20;
  config.learning_rate = 1e150;
  // Without ReLUs nothing can die, so the logits overflow.
  try {
    train_sgd(random_linear_net({4, 16, 16, 2}, 2), synth_blobs(1, 64, 4), config);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.epoch(), 0);
    EXPECT_NE(std::string(e.what()).find("diverged"), std::string::npos);
  }
}

TEST(Train, RejectsNegativeLearningRate) {
  TrainConfig config;
  config.learning_rate = -1.0;
  EXPECT_THROW(train_sgd(random_mlp({4, 2}, 1), synth_blobs(1, 4, 4), config), std::invalid_argument);
}

TEST(Train, CrossEntropyValues) {
  Eigen::VectorXd z(3);
  z << 0, 0, 0;
  EXPECT_NEAR(cross_entropy(z, 1), std::log(3.0), 1e-15);
  z << 1000, 0, -1000;
  EXPECT_NEAR(cross_entropy(z, 0), 0.0, 1e-15);
  EXPECT_NEAR(cross_entropy(z, 1), 1000.0, 1e-9);
}

TEST(Train, ParameterVectorRoundTrip) {
  const Network net = reference_mnist_net(2);
  const Eigen::VectorXd p = parameter_vector(net);
  // conv1 8x1x3x3+8, conv2 16x8x3x3+16, fc1 32x(12*12*16)+32, fc2 10x32+10
  EXPECT_EQ(p.size(), 80 + 1168 + 73760 + 330);
  EXPECT_EQ(parameter_vector(with_parameters(net, p)), p);
  const Eigen::VectorXd shifted = p.array() + 1.0;
  EXPECT_EQ(parameter_vector(with_parameters(net, shifted)), shifted);
  EXPECT_THROW(with_parameters(net, p.head(10)), std::invalid_argument);
}

TEST(Train, ParameterGradientMatchesDifferences) {
  const Network net = random_mlp({3, 5, 4}, 6);
  Rng rng(1);
  const Tensor x = testing::random_tensor(rng, {3});
  const Eigen::VectorXd g = loss_parameter_gradient(net, x, 2);
  const Eigen::VectorXd p = parameter_vector(net);
  Eigen::VectorXd numeric(p.size());
  const double h = 1e-6;
  for (Index i = 0; i < p.size(); ++i) {
    Eigen::VectorXd pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    numeric[i] = (cross_entropy(forward(with_parameters(net, pp), x).logits().values(), 2) -
                  cross_entropy(forward(with_parameters(net, pm), x).logits().values(), 2)) /
                 (2 * h);
  }
  EXPECT_LE((g - numeric).norm() / std::max(g.norm(), 1e-6), 1e-6);
}

TEST(Train, ArchitecturesAreSeeded) {
  EXPECT_EQ(save_model(reference_mnist_net(4)), save_model(reference_mnist_net(4)));
  EXPECT_NE(save_model(reference_mnist_net(4)), save_model(reference_mnist_net(5)));
  const Network lin = random_linear_net({3, 4, 2}, 1);
  for (const auto& layer : lin.layers()) EXPECT_FALSE(std::holds_alternative<Relu>(layer.kind));
}

}  // namespace
}  // namespace nattr
