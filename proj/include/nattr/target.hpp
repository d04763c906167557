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

#ifndef NATTR_TARGET_HPP
#define NATTR_TARGET_HPP

#include <Eigen/Core>

#include <stdexcept>
#include <string>

#include "nattr/tensor.hpp"

namespace nattr {

/// Scalar output being explained. Always a linear functional of the logits.
struct TargetSpec {
  enum class Kind { kLogit, kTopLogitMinusMean, kLogitMinusMean };

  Kind kind = Kind::kTopLogitMinusMean;
  Index cls = 0;

  static TargetSpec logit(Index c) { return {Kind::kLogit, c}; }
  static TargetSpec top_logit_minus_mean() { return {Kind::kTopLogitMinusMean, 0}; }
  static TargetSpec logit_minus_mean(Index c) { return {Kind::kLogitMinusMean, c}; }
};

std::string to_string(const TargetSpec& target);

/// Weight vector w with target = w . logits. The top class is read from
/// `reference_logits`, which callers take from the actual input so the
/// functional stays fixed along an interpolation path.
inline Eigen::VectorXd target_weights(const TargetSpec& target,
                                      const Eigen::VectorXd& reference_logits) {
  const Index k = reference_logits.size();
  if (k == 0) throw std::invalid_argument("target: network has no outputs");
  Index cls = target.cls;
  if (target.kind == TargetSpec::Kind::kTopLogitMinusMean) cls = argmax(reference_logits);
  if (cls < 0 || cls >= k) {
    throw std::out_of_range("target class " + std::to_string(cls) + " outside output_dim " +
                            std::to_string(k));
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
  if (target.kind != TargetSpec::Kind::kLogit) w.setConstant(-1.0 / static_cast<double>(k));
  w[cls] += 1.0;
  return w;
}

}  // namespace nattr

#endif  // NATTR_TARGET_HPP
