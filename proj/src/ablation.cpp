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

#include "nattr/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nattr/parallel.hpp"
#include "nattr/stats.hpp"

namespace nattr {

std::string MethodConfig::label() const {
  std::string name(method_name(method));
  switch (method) {
    case Method::kIntegratedGradients:
    case Method::kNeuronIntegratedGradients:
    case Method::kConductanceDirect:
      name += "-n" + std::to_string(steps);
      if (rule == QuadratureRule::kTrapezoid) name += "-trap";
      break;
    default:
      break;
  }
  return name;
}

Index selection_size(Index layer_size, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("ablation fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  const auto k = static_cast<Index>(std::floor(fraction * static_cast<double>(layer_size) + 1e-9));
  if (k < 1) {
    throw std::invalid_argument("ablation fraction " + std::to_string(fraction) + " selects no neurons of a " +
                                std::to_string(layer_size) + "-neuron layer");
  }
  return std::min(k, layer_size);
}

std::vector<Index> select_neurons(const ForwardTrace& input_trace, const ForwardTrace& reference_trace,
                                  std::string_view layer, double fraction) {
  const Tensor& ax = input_trace[layer];
  const Tensor& ar = reference_trace[layer];
  if (ax.shape() != ar.shape()) {
    throw ShapeError("select_neurons: traces disagree on layer shape " + shape_string(ax.shape()) + " vs " +
                     shape_string(ar.shape()));
  }
  const Index k = selection_size(ax.size(), fraction);
  const Eigen::VectorXd diff = (ax.values() - ar.values()).cwiseAbs();
  std::vector<Index> order(static_cast<std::size_t>(ax.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index l, Index r) { return diff[l] > diff[r]; });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

Eigen::VectorXd ablate_forward(const Network& net, const Tensor& x, std::string_view layer,
                               const std::map<Index, double>& clamped) {
  const Index slot = net.slot(layer);
  const ForwardTrace trace = forward(net, x);
  Eigen::VectorXd act = trace.at(slot).values();
  for (const auto& [index, value] : clamped) {
    if (index < 0 || index >= act.size()) {
      throw std::out_of_range("ablate_forward: neuron " + std::to_string(index) + " outside layer '" +
                              std::string(layer) + "' of size " + std::to_string(act.size()));
    }
    act[index] = value;
  }
  return forward_from(net, slot, act);
}

void fill_aggregates(AblationReport& report) {
  const std::size_t m = report.methods.size();
  report.mae.assign(m, 0.0);
  report.count = 0;
  report.failures = 0;
  std::vector<std::vector<double>> errors(m);
  for (const auto& rec : report.records) {
    if (rec.failed) {
      ++report.failures;
      continue;
    }
    ++report.count;
    for (std::size_t j = 0; j < m; ++j) errors[j].push_back(rec.abs_error[j]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (!errors[j].empty()) {
      report.mae[j] = std::accumulate(errors[j].begin(), errors[j].end(), 0.0) / static_cast<double>(errors[j].size());
    }
  }
  report.pairwise.clear();
  if (report.count == 0) return;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      const RankSumResult r = rank_sum_test(errors[a], errors[b]);
      report.pairwise.push_back({report.methods[a], report.methods[b], r.u_statistic, r.p_value});
    }
  }
}

AblationReport run_ablation_study(const Network& net, std::span<const Tensor> inputs, const Tensor& reference,
                                  const AblationSpec& spec, const std::vector<MethodConfig>& methods, int threads) {
  if (inputs.empty()) throw std::invalid_argument("run_ablation_study: no examples");
  if (methods.empty()) throw std::invalid_argument("run_ablation_study: no methods");
  const Index slot = net.slot(spec.layer);
  selection_size(net.slot_size(slot), spec.fraction);

  AblationReport report;
  report.layer = spec.layer;
  report.fraction = spec.fraction;
  for (const auto& m : methods) report.methods.push_back(m.label());
  report.records.resize(inputs.size());

  const ForwardTrace ref_trace = forward(net, reference);
  const Eigen::MatrixXd classes = per_class_targets(net);
  const bool normalized = spec.target.kind != TargetSpec::Kind::kLogit;

  parallel_for(
      static_cast<Index>(inputs.size()),
      [&](Index id) {
        AblationRecord& rec = report.records[static_cast<std::size_t>(id)];
        rec.example_id = id;
        try {
          const Tensor& x = inputs[static_cast<std::size_t>(id)];
          const ForwardTrace trace = forward(net, x);
          const Eigen::VectorXd w = target_weights(spec.target, trace.logits().values());
          const Index cls = argmax(w);

          const auto selected = select_neurons(trace, ref_trace, spec.layer, spec.fraction);
          std::map<Index, double> clamp;
          for (Index j : selected) clamp[j] = ref_trace.at(slot)[j];
          const Eigen::VectorXd ablated = ablate_forward(net, x, spec.layer, clamp);
          rec.actual_delta = w.dot(ablated - trace.logits().values());

          for (const auto& m : methods) {
            const PathSpec path{reference, x, m.steps, m.rule};
            const Eigen::MatrixXd per_class = attribute_targets(net, m.method, path, slot, classes);
            // Rows are classes after the transpose.
            const Eigen::MatrixXd by_class = per_class.transpose();
            const Eigen::MatrixXd scores = normalized ? normalize_across_classes(by_class) : by_class;
            double selected_sum = 0.0;
            for (Index j : selected) selected_sum += scores(cls, j);
            const double predicted = -selected_sum;
            if (!std::isfinite(predicted)) throw std::runtime_error(m.label() + " produced a non-finite score");
            rec.predicted_delta.push_back(predicted);
            rec.abs_error.push_back(std::abs(rec.actual_delta - predicted));
          }
        } catch (const std::exception& e) {
          rec.failed = true;
          rec.diagnostic = e.what();
          rec.predicted_delta.assign(methods.size(), 0.0);
          rec.abs_error.assign(methods.size(), 0.0);
        }
      },
      threads);

  fill_aggregates(report);
  return report;
}

}  // namespace nattr
