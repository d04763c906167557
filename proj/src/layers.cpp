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

#include <string>
#include <type_traits>
#include <variant>

#include "nattr/network.hpp"

namespace nattr {
namespace layers {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class>
inline constexpr bool kAlwaysFalse = false;

// Scatter-add of im2col rows back into an HWC buffer.
void col2im_add(const Conv2d& conv, const Shape& in_shape, const Shape& out_shape,
                const RowMatrix& cols, Eigen::Ref<Eigen::VectorXd> in) {
  const Index h = in_shape[0], w = in_shape[1], c = in_shape[2];
  const Index oh = out_shape[0], ow = out_shape[1];
  const Index kh = conv.kernel_h(), kw = conv.kernel_w();
  for (Index y = 0; y < oh; ++y) {
    for (Index x = 0; x < ow; ++x) {
      const Index row = y * ow + x;
      for (Index ki = 0; ki < kh; ++ki) {
        const Index iy = y * conv.stride + ki - conv.padding;
        if (iy < 0 || iy >= h) continue;
        for (Index kj = 0; kj < kw; ++kj) {
          const Index ix = x * conv.stride + kj - conv.padding;
          if (ix < 0 || ix >= w) continue;
          const Index col = (ki * kw + kj) * c;
          in.segment((iy * w + ix) * c, c) += cols.row(row).segment(col, c).transpose();
        }
      }
    }
  }
}

Eigen::VectorXd conv_forward(const Conv2d& conv, const Shape& in_shape, const Shape& out_shape,
                             const Eigen::VectorXd& in, bool with_bias) {
  const RowMatrix patches = im2col(conv, in_shape, out_shape, in);
  RowMatrix y = patches * conv_weight_matrix(conv).transpose();
  if (with_bias) y.rowwise() += conv.bias.transpose();
  return Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
}

}  // namespace

RowMatrix im2col(const Conv2d& conv, const Shape& in_shape, const Shape& out_shape,
                 const Eigen::VectorXd& in) {
  const Index h = in_shape[0], w = in_shape[1], c = in_shape[2];
  const Index oh = out_shape[0], ow = out_shape[1];
  const Index kh = conv.kernel_h(), kw = conv.kernel_w();
  RowMatrix patches = RowMatrix::Zero(oh * ow, kh * kw * c);
  for (Index y = 0; y < oh; ++y) {
    for (Index x = 0; x < ow; ++x) {
      const Index row = y * ow + x;
      for (Index ki = 0; ki < kh; ++ki) {
        const Index iy = y * conv.stride + ki - conv.padding;
        if (iy < 0 || iy >= h) continue;
        for (Index kj = 0; kj < kw; ++kj) {
          const Index ix = x * conv.stride + kj - conv.padding;
          if (ix < 0 || ix >= w) continue;
          patches.row(row).segment((ki * kw + kj) * c, c) =
              in.segment((iy * w + ix) * c, c).transpose();
        }
      }
    }
  }
  return patches;
}

Eigen::MatrixXd conv_weight_matrix(const Conv2d& conv) {
  const Index oc = conv.out_channels(), ic = conv.in_channels();
  const Index kh = conv.kernel_h(), kw = conv.kernel_w();
  Eigen::MatrixXd wm(oc, kh * kw * ic);
  for (Index o = 0; o < oc; ++o)
    for (Index c = 0; c < ic; ++c)
      for (Index ki = 0; ki < kh; ++ki)
        for (Index kj = 0; kj < kw; ++kj) wm(o, (ki * kw + kj) * ic + c) = conv.kernels(o, c, ki, kj);
  return wm;
}

std::vector<Index> maxpool_argmax(const MaxPool& pool, const Shape& in_shape,
                                  const Shape& out_shape, const Eigen::VectorXd& in) {
  const Index w = in_shape[1], c = in_shape[2];
  const Index oh = out_shape[0], ow = out_shape[1];
  std::vector<Index> chosen(static_cast<std::size_t>(oh * ow * c));
  for (Index y = 0; y < oh; ++y) {
    for (Index x = 0; x < ow; ++x) {
      for (Index ch = 0; ch < c; ++ch) {
        Index best = ((y * pool.stride) * w + x * pool.stride) * c + ch;
        for (Index ki = 0; ki < pool.window; ++ki) {
          for (Index kj = 0; kj < pool.window; ++kj) {
            const Index idx = ((y * pool.stride + ki) * w + x * pool.stride + kj) * c + ch;
            if (in[idx] > in[best]) best = idx;
          }
        }
        chosen[static_cast<std::size_t>((y * ow + x) * c + ch)] = best;
      }
    }
  }
  return chosen;
}

Shape output_shape(const LayerSpec& layer, const Shape& in) {
  auto fail = [&](const std::string& what) -> ShapeError {
    return ShapeError(std::string(kind_name(layer.kind)) + " layer '" + layer.name + "': " + what);
  };
  return std::visit(
      [&](const auto& k) -> Shape {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Dense>) {
          if (k.bias.size() != k.weight.rows()) {
            throw fail("bias length " + std::to_string(k.bias.size()) + " does not match weight shape [" +
                       std::to_string(k.weight.rows()) + "," + std::to_string(k.weight.cols()) + "]");
          }
          if (in.size() != 1 || in[0] != k.weight.cols()) {
            throw fail("weight shape [" + std::to_string(k.weight.rows()) + "," +
                       std::to_string(k.weight.cols()) + "] cannot take input of shape " +
                       shape_string(in));
          }
          return {k.weight.rows()};
        } else if constexpr (std::is_same_v<T, Conv2d>) {
          if (k.kernels.rank() != 4) throw fail("kernels must be rank 4, got " + shape_string(k.kernels.shape()));
          if (k.bias.size() != k.out_channels()) {
            throw fail("bias length " + std::to_string(k.bias.size()) + " does not match kernel shape " +
                       shape_string(k.kernels.shape()));
          }
          if (k.stride <= 0 || k.padding < 0) throw fail("stride must be positive and padding non-negative");
          if (in.size() != 3 || in[2] != k.in_channels()) {
            throw fail("kernel shape " + shape_string(k.kernels.shape()) + " cannot take HWC input of shape " +
                       shape_string(in));
          }
          const Index hp = in[0] + 2 * k.padding - k.kernel_h();
          const Index wp = in[1] + 2 * k.padding - k.kernel_w();
          if (hp < 0 || wp < 0) throw fail("kernel larger than padded input " + shape_string(in));
          return {hp / k.stride + 1, wp / k.stride + 1, k.out_channels()};
        } else if constexpr (std::is_same_v<T, MaxPool>) {
          if (k.window <= 0 || k.stride <= 0) throw fail("window and stride must be positive");
          if (in.size() != 3 || in[0] < k.window || in[1] < k.window) {
            throw fail("window " + std::to_string(k.window) + " cannot pool input of shape " + shape_string(in));
          }
          return {(in[0] - k.window) / k.stride + 1, (in[1] - k.window) / k.stride + 1, in[2]};
        } else if constexpr (std::is_same_v<T, Flatten>) {
          return {shape_size(in)};
        } else if constexpr (std::is_same_v<T, Relu>) {
          return in;
        } else {
          static_assert(kAlwaysFalse<T>);
        }
      },
      layer.kind);
}

Eigen::VectorXd forward(const LayerKind& kind, const Shape& in_shape, const Shape& out_shape,
                        const Eigen::VectorXd& in) {
  return std::visit(
      [&](const auto& k) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Dense>) {
          return k.weight * in + k.bias;
        } else if constexpr (std::is_same_v<T, Conv2d>) {
          return conv_forward(k, in_shape, out_shape, in, /*with_bias=*/true);
        } else if constexpr (std::is_same_v<T, Relu>) {
          return in.cwiseMax(0.0);
        } else if constexpr (std::is_same_v<T, MaxPool>) {
          const auto chosen = maxpool_argmax(k, in_shape, out_shape, in);
          Eigen::VectorXd out(static_cast<Index>(chosen.size()));
          for (std::size_t i = 0; i < chosen.size(); ++i) out[static_cast<Index>(i)] = in[chosen[i]];
          return out;
        } else {
          return in;
        }
      },
      kind);
}

Eigen::MatrixXd backward(const LayerKind& kind, const Shape& in_shape, const Shape& out_shape,
                         const Eigen::VectorXd& in, const Eigen::MatrixXd& out_cotangent) {
  return std::visit(
      [&](const auto& k) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Dense>) {
          return k.weight.transpose() * out_cotangent;
        } else if constexpr (std::is_same_v<T, Conv2d>) {
          const Eigen::MatrixXd wm = conv_weight_matrix(k);
          const Index pixels = out_shape[0] * out_shape[1];
          Eigen::MatrixXd result = Eigen::MatrixXd::Zero(shape_size(in_shape), out_cotangent.cols());
          for (Index col = 0; col < out_cotangent.cols(); ++col) {
            Eigen::Map<const RowMatrix> dy(out_cotangent.col(col).data(), pixels, k.out_channels());
            const RowMatrix dcols = dy * wm;
            col2im_add(k, in_shape, out_shape, dcols, result.col(col));
          }
          return result;
        } else if constexpr (std::is_same_v<T, Relu>) {
          // Subgradient at exactly zero is zero.
          const Eigen::VectorXd gate = (in.array() > 0.0).template cast<double>();
          return gate.asDiagonal() * out_cotangent;
        } else if constexpr (std::is_same_v<T, MaxPool>) {
          const auto chosen = maxpool_argmax(k, in_shape, out_shape, in);
          Eigen::MatrixXd result = Eigen::MatrixXd::Zero(shape_size(in_shape), out_cotangent.cols());
          for (std::size_t i = 0; i < chosen.size(); ++i) {
            result.row(chosen[i]) += out_cotangent.row(static_cast<Index>(i));
          }
          return result;
        } else {
          return out_cotangent;
        }
      },
      kind);
}

Eigen::VectorXd tangent(const LayerKind& kind, const Shape& in_shape, const Shape& out_shape,
                        const Eigen::VectorXd& in, const Eigen::VectorXd& in_tangent) {
  return std::visit(
      [&](const auto& k) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Dense>) {
          return k.weight * in_tangent;
        } else if constexpr (std::is_same_v<T, Conv2d>) {
          return conv_forward(k, in_shape, out_shape, in_tangent, /*with_bias=*/false);
        } else if constexpr (std::is_same_v<T, Relu>) {
          return (in.array() > 0.0).select(in_tangent, 0.0);
        } else if constexpr (std::is_same_v<T, MaxPool>) {
          const auto chosen = maxpool_argmax(k, in_shape, out_shape, in);
          Eigen::VectorXd out(static_cast<Index>(chosen.size()));
          for (std::size_t i = 0; i < chosen.size(); ++i) out[static_cast<Index>(i)] = in_tangent[chosen[i]];
          return out;
        } else {
          return in_tangent;
        }
      },
      kind);
}

}  // namespace layers
}  // namespace nattr
