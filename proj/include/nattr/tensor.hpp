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

#ifndef NATTR_TENSOR_HPP
#define NATTR_TENSOR_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nattr {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

/// Thrown when operand shapes do not agree. The message carries both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1},
                         std::multiplies<Index>());
}

/// Dense n-dimensional array stored flat in row-major order.
///
/// The flat buffer is an Eigen column vector so that whole-tensor arithmetic
/// can be written as Eigen expressions on `values()`. Every extent is
/// positive and `shape_size(shape()) == size()` always holds.
template <typename Scalar>
class BasicTensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicTensor() : shape_{0}, data_() {}

  explicit BasicTensor(Shape shape) : shape_(std::move(shape)) {
    check_extents();
    data_ = Vector::Zero(shape_size(shape_));
  }

  BasicTensor(Shape shape, Vector data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents();
    if (shape_size(shape_) != data_.size()) {
      throw ShapeError("tensor shape " + shape_string(shape_) + " holds " +
                       std::to_string(shape_size(shape_)) +
                       " values but buffer has " +
                       std::to_string(data_.size()));
    }
  }

  BasicTensor(Shape shape, std::initializer_list<Scalar> values)
      : BasicTensor(std::move(shape),
                    Eigen::Map<const Vector>(values.begin(),
                                             static_cast<Index>(values.size()))) {}

  /// Rank-1 tensor from a list of values.
  static BasicTensor vector(std::initializer_list<Scalar> values) {
    return BasicTensor({static_cast<Index>(values.size())}, values);
  }

  static BasicTensor constant(Shape shape, Scalar value) {
    BasicTensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  const Vector& values() const { return data_; }
  Vector& values() { return data_; }

  Scalar operator[](Index i) const { return data_[i]; }
  Scalar& operator[](Index i) { return data_[i]; }

  /// Multi-index access, row-major.
  template <typename... Ix>
  Scalar operator()(Ix... ix) const {
    return data_[flat_index({static_cast<Index>(ix)...})];
  }
  template <typename... Ix>
  Scalar& operator()(Ix... ix) {
    return data_[flat_index({static_cast<Index>(ix)...})];
  }

  Index flat_index(std::initializer_list<Index> ix) const {
    if (static_cast<Index>(ix.size()) != rank()) {
      throw std::out_of_range("index rank " + std::to_string(ix.size()) +
                              " does not match tensor rank " +
                              std::to_string(rank()));
    }
    Index flat = 0;
    std::size_t d = 0;
    for (Index i : ix) {
      if (i < 0 || i >= shape_[d]) {
        throw std::out_of_range("index " + std::to_string(i) +
                                " out of range for axis " + std::to_string(d) +
                                " of shape " + shape_string(shape_));
      }
      flat = flat * shape_[d] + i;
      ++d;
    }
    return flat;
  }

  /// Same buffer under a different shape of equal size.
  BasicTensor reshaped(Shape shape) const { return BasicTensor(std::move(shape), data_); }

  bool all_finite() const { return data_.allFinite(); }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void check_extents() const {
    for (Index e : shape_) {
      if (e <= 0 && !(shape_.size() == 1 && e == 0)) {
        throw ShapeError("tensor extents must be positive, got " +
                         shape_string(shape_));
      }
    }
  }

  Shape shape_;
  Vector data_;
};

using Tensor = BasicTensor<double>;

enum class ElementwiseOp { kAdd, kSub, kMul, kScale };
enum class ReduceOp { kSum, kMax, kArgmax, kMean };

namespace detail {

template <typename Scalar>
void require_same_shape(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b,
                        const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

}  // namespace detail

template <typename Scalar>
BasicTensor<Scalar> add(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  detail::require_same_shape(a, b, "add");
  return BasicTensor<Scalar>(a.shape(), a.values() + b.values());
}

template <typename Scalar>
BasicTensor<Scalar> sub(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  detail::require_same_shape(a, b, "sub");
  return BasicTensor<Scalar>(a.shape(), a.values() - b.values());
}

template <typename Scalar>
BasicTensor<Scalar> mul(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  detail::require_same_shape(a, b, "mul");
  return BasicTensor<Scalar>(a.shape(), a.values().cwiseProduct(b.values()));
}

template <typename Scalar>
BasicTensor<Scalar> scale(const BasicTensor<Scalar>& a, Scalar s) {
  return BasicTensor<Scalar>(a.shape(), a.values() * s);
}

template <typename Scalar>
BasicTensor<Scalar> elementwise(ElementwiseOp op, const BasicTensor<Scalar>& a,
                                const BasicTensor<Scalar>& b) {
  switch (op) {
    case ElementwiseOp::kAdd: return add(a, b);
    case ElementwiseOp::kSub: return sub(a, b);
    case ElementwiseOp::kMul: return mul(a, b);
    case ElementwiseOp::kScale:
      break;
  }
  throw std::invalid_argument("scale takes a scalar operand");
}

template <typename Scalar>
BasicTensor<Scalar> elementwise(ElementwiseOp op, const BasicTensor<Scalar>& a, Scalar b) {
  switch (op) {
    case ElementwiseOp::kAdd: return BasicTensor<Scalar>(a.shape(), a.values().array() + b);
    case ElementwiseOp::kSub: return BasicTensor<Scalar>(a.shape(), a.values().array() - b);
    case ElementwiseOp::kMul:
    case ElementwiseOp::kScale: return scale(a, b);
  }
  throw std::invalid_argument("unknown elementwise op");
}

/// Reduces over all entries. kArgmax returns the lowest flat index among ties.
template <typename Scalar>
Scalar reduce(ReduceOp op, const BasicTensor<Scalar>& a) {
  if (a.empty()) throw std::invalid_argument("reduce: empty tensor");
  const auto& v = a.values();
  switch (op) {
    case ReduceOp::kSum: return v.sum();
    case ReduceOp::kMax: return v.maxCoeff();
    case ReduceOp::kMean: return v.mean();
    case ReduceOp::kArgmax: {
      Index best = 0;
      for (Index i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
      }
      return static_cast<Scalar>(best);
    }
  }
  throw std::invalid_argument("unknown reduce op");
}

/// Reduces along one axis; the result drops that axis (a rank-1 input gives
/// a one-element tensor).
template <typename Scalar>
BasicTensor<Scalar> reduce(ReduceOp op, const BasicTensor<Scalar>& a, Index axis) {
  if (a.empty()) throw std::invalid_argument("reduce: empty tensor");
  if (axis < 0 || axis >= a.rank()) {
    throw std::out_of_range("reduce: axis " + std::to_string(axis) +
                            " outside rank " + std::to_string(a.rank()));
  }
  const Shape& shape = a.shape();
  Index outer = 1;
  Index inner = 1;
  for (Index d = 0; d < axis; ++d) outer *= shape[d];
  for (Index d = axis + 1; d < a.rank(); ++d) inner *= shape[d];
  const Index extent = shape[axis];

  Shape out_shape;
  for (Index d = 0; d < a.rank(); ++d) {
    if (d != axis) out_shape.push_back(shape[d]);
  }
  if (out_shape.empty()) out_shape.push_back(1);

  BasicTensor<Scalar> out(out_shape);
  for (Index o = 0; o < outer; ++o) {
    for (Index in = 0; in < inner; ++in) {
      Scalar acc = a[o * extent * inner + in];
      Index best = 0;
      for (Index k = 1; k < extent; ++k) {
        const Scalar v = a[(o * extent + k) * inner + in];
        switch (op) {
          case ReduceOp::kSum:
          case ReduceOp::kMean: acc += v; break;
          case ReduceOp::kMax: acc = std::max(acc, v); break;
          case ReduceOp::kArgmax:
            if (v > acc) {
              acc = v;
              best = k;
            }
            break;
        }
      }
      Scalar result = acc;
      if (op == ReduceOp::kMean) result = acc / static_cast<Scalar>(extent);
      if (op == ReduceOp::kArgmax) result = static_cast<Scalar>(best);
      out[o * inner + in] = result;
    }
  }
  return out;
}

template <typename Scalar>
Scalar sum(const BasicTensor<Scalar>& a) { return reduce(ReduceOp::kSum, a); }

template <typename Scalar>
Scalar max(const BasicTensor<Scalar>& a) { return reduce(ReduceOp::kMax, a); }

template <typename Scalar>
Scalar mean(const BasicTensor<Scalar>& a) { return reduce(ReduceOp::kMean, a); }

template <typename Scalar>
Index argmax(const BasicTensor<Scalar>& a) {
  return static_cast<Index>(reduce(ReduceOp::kArgmax, a));
}

/// Lowest index of the maximum of any dense Eigen vector expression.
template <typename Derived>
Index argmax(const Eigen::DenseBase<Derived>& v) {
  if (v.size() == 0) throw std::invalid_argument("argmax: empty vector");
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

}  // namespace nattr

#endif  // NATTR_TENSOR_HPP
