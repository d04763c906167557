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

#ifndef NATTR_ABLATION_HPP
#define NATTR_ABLATION_HPP

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nattr/attribution.hpp"
#include "nattr/network.hpp"

namespace nattr {

struct AblationSpec {
  std::string layer;
  double fraction = 0.10;
  TargetSpec target = TargetSpec::top_logit_minus_mean();
};

/// One attribution method as run inside a study, e.g. NIG with 10 steps.
struct MethodConfig {
  Method method = Method::kNeuronIntegratedGradients;
  Index steps = 1;
  QuadratureRule rule = QuadratureRule::kRightRiemann;

  /// "nig-n10", "deeplift-default", ...
  std::string label() const;
};

/// Number of neurons a fraction selects from a layer (floor, at least 1 required).
Index selection_size(Index layer_size, double fraction);

/// floor(fraction * size) flat indices of the layer with the largest
/// |activation(x) - activation(x')|, ties to the lowest index. Returned in
/// ascending index order.
std::vector<Index> select_neurons(const ForwardTrace& input_trace, const ForwardTrace& reference_trace,
                                  std::string_view layer, double fraction);

/// Forward pass on x in which the listed entries of `layer` are overwritten
/// with the given values before later layers run. Returns the logits.
Eigen::VectorXd ablate_forward(const Network& net, const Tensor& x, std::string_view layer,
                               const std::map<Index, double>& clamped);

struct AblationRecord {
  Index example_id = 0;
  std::vector<double> predicted_delta;  // per method
  double actual_delta = 0.0;
  std::vector<double> abs_error;  // per method
  bool failed = false;
  std::string diagnostic;
};

struct PairwiseTest {
  std::string method_a;
  std::string method_b;
  double u_statistic = 0.0;
  double p_value = 1.0;
};

struct AblationReport {
  std::string layer;
  double fraction = 0.0;
  std::vector<std::string> methods;
  std::vector<AblationRecord> records;
  std::vector<double> mae;  // per method, over successful records
  Index count = 0;          // successful records
  Index failures = 0;
  std::vector<PairwiseTest> pairwise;
};

/// Mean absolute error per method and pairwise rank-sum tests, from records.
void fill_aggregates(AblationReport& report);

/// Clamps the selected neurons of every example to their reference
/// activations and compares the actual change of the target with the change
/// each method predicts (minus the sum of the class-normalised scores of the
/// selected neurons). Examples run on `threads` workers; records are stored
/// by example id.
AblationReport run_ablation_study(const Network& net, std::span<const Tensor> inputs, const Tensor& reference,
                                  const AblationSpec& spec, const std::vector<MethodConfig>& methods,
                                  int threads = 1);

}  // namespace nattr

#endif  // NATTR_ABLATION_HPP
