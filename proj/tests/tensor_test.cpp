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

#include "nattr/random.hpp"
#include "nattr/tensor.hpp"

namespace nattr {
namespace {

TEST(Tensor, RowMajorIndexing) {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t(0, 0), 1);
  EXPECT_EQ(t(0, 2), 3);
  EXPECT_EQ(t(1, 0), 4);
  EXPECT_EQ(t.flat_index({1, 2}), 5);
  t(1, 1) = -1;
  EXPECT_EQ(t[4], -1);
}

TEST(Tensor, IndexErrors) {
  Tensor t({2, 3});
  EXPECT_THROW(t(2, 0), std::out_of_range);
  EXPECT_THROW(t(0), std::out_of_range);
  EXPECT_THROW(t(0, -1), std::out_of_range);
}

TEST(Tensor, ShapeValidation) {
  EXPECT_THROW(Tensor({2, 0}), ShapeError);
  EXPECT_THROW(Tensor({2, -3}), ShapeError);
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_NO_THROW(Tensor(Shape{0}));
  EXPECT_TRUE(Tensor().empty());
}

TEST(Tensor, MismatchMessageNamesBothShapes) {
  const Tensor a({2, 3});
  const Tensor b({3, 2});
  try {
    add(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2,3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[3,2]"), std::string::npos) << msg;
  }
  EXPECT_THROW(sub(a, b), ShapeError);
  EXPECT_THROW(mul(a, b), ShapeError);
  EXPECT_THROW(elementwise(ElementwiseOp::kScale, a, a), std::invalid_argument);
}

TEST(Tensor, ElementwiseExamples) {
  const auto a = Tensor::vector({1, 2, 3});
  const auto b = Tensor::vector({4, -5, 0.5});
  EXPECT_EQ(add(a, b), Tensor::vector({5, -3, 3.5}));
  EXPECT_EQ(sub(a, b), Tensor::vector({-3, 7, 2.5}));
  EXPECT_EQ(mul(a, b), Tensor::vector({4, -10, 1.5}));
  EXPECT_EQ(scale(a, 2.0), Tensor::vector({2, 4, 6}));
  EXPECT_EQ(elementwise(ElementwiseOp::kAdd, a, 1.0), Tensor::vector({2, 3, 4}));
  EXPECT_EQ(elementwise(ElementwiseOp::kSub, a, 1.0), Tensor::vector({0, 1, 2}));
}

TEST(Tensor, Reductions) {
  const Tensor t({2, 3}, {1, 5, 2, 5, 0, -1});
  EXPECT_EQ(sum(t), 12);
  EXPECT_EQ(max(t), 5);
  EXPECT_EQ(mean(t), 2);
  EXPECT_EQ(argmax(t), 1);  // ties go to the lowest index

  EXPECT_EQ(reduce(ReduceOp::kSum, t, 0), Tensor::vector({6, 5, 1}));
  EXPECT_EQ(reduce(ReduceOp::kSum, t, 1), Tensor::vector({8, 4}));
  EXPECT_EQ(reduce(ReduceOp::kMax, t, 1), Tensor::vector({5, 5}));
  EXPECT_EQ(reduce(ReduceOp::kArgmax, t, 1), Tensor::vector({1, 0}));
  EXPECT_EQ(reduce(ReduceOp::kMean, t, 0), Tensor::vector({3, 2.5, 0.5}));
  EXPECT_THROW(reduce(ReduceOp::kSum, t, 2), std::out_of_range);
  EXPECT_THROW(sum(Tensor()), std::invalid_argument);
}

TEST(Tensor, Reshape) {
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor r = t.reshaped({3, 2});
  EXPECT_EQ(r(2, 1), 6);
  EXPECT_THROW(t.reshaped({4, 2}), ShapeError);
}

TEST(Tensor, FloatInstantiation) {
  using FTensor = BasicTensor<float>;
  const auto a = FTensor::vector({1.5f, 2.5f});
  EXPECT_FLOAT_EQ(sum(add(a, a)), 8.0f);
}

// Algebraic identities on random tensors of random shapes.
class TensorProperties : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(TensorProperties, Identities) {
  Rng rng(GetParam());
  Shape shape;
  const auto rank = 1 + rng.index(4);
  for (std::uint64_t d = 0; d < rank; ++d) shape.push_back(static_cast<Index>(1 + rng.index(5)));
  Tensor a(shape), b(shape), c(shape);
  for (Index i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform(-2, 2);
    b[i] = rng.uniform(-2, 2);
    c[i] = rng.uniform(-2, 2);
  }
  EXPECT_EQ(add(a, b), add(b, a));
  EXPECT_EQ(mul(a, b), mul(b, a));
  EXPECT_EQ(sub(a, a), Tensor::constant(shape, 0.0));
  const Tensor lhs = add(add(a, b), c);
  const Tensor rhs = add(a, add(b, c));
  EXPECT_LE((lhs.values() - rhs.values()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(sum(scale(a, 3.0)), 3.0 * sum(a), 1e-12);
  for (Index axis = 0; axis < a.rank(); ++axis) {
    EXPECT_NEAR(sum(reduce(ReduceOp::kSum, a, axis)), sum(a), 1e-12);
    EXPECT_EQ(max(reduce(ReduceOp::kMax, a, axis)), max(a));
  }
  EXPECT_EQ(a[argmax(a)], max(a));
}

INSTANTIATE_TEST_SUITE_P(Seeds, TensorProperties, ::testing::Range<std::uint64_t>(1, 51));

}  // namespace
}  // namespace nattr
