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

#include "nattr/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>

#include "nattr/attribution.hpp"
#include "nattr/deeplift.hpp"
#include "nattr/parallel.hpp"
#include "nattr/random.hpp"
#include "nattr/train.hpp"

namespace nattr {
namespace {

constexpr double kFdStep = 1e-5;
constexpr double kKinkMargin = 1e-3;
// Right-endpoint sums on piecewise-linear nets err by O(1/n) at kink crossings.
constexpr double kDiscretizationConstant = 20.0;

// Thread-safe running maximum with a description of where it occurred.
class WorstCase {
 public:
  void update(double error, const std::string& where) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++cases_;
    if (!(error <= worst_)) {  // NaN counts as worst
      if (std::isnan(worst_)) return;
      worst_ = error;
      where_ = where;
    }
  }
  PropertyResult result(std::string name, double tolerance) const {
    PropertyResult r;
    r.name = std::move(name);
    r.worst_error = worst_;
    r.tolerance = tolerance;
    r.cases = cases_;
    r.passed = cases_ > 0 && worst_ <= tolerance;
    r.detail = where_;
    return r;
  }

 private:
  std::mutex mutex_;
  double worst_ = 0.0;
  Index cases_ = 0;
  std::string where_;
};

std::uint64_t mix(std::uint64_t seed, std::uint64_t k) { return seed * 0x9E3779B97F4A7C15ULL + k * 7919ULL + 1ULL; }

Tensor random_input(Rng& rng, const Shape& shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

Eigen::VectorXd random_vector(Rng& rng, Index n) {
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

// True when no ReLU input sits near zero and no pooling window is near a tie,
// so a step of kFdStep stays on one linear piece.
bool away_from_kinks(const Network& net, const ForwardTrace& trace) {
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const auto s = static_cast<Index>(k);
    const auto& kind = net.layers()[k].kind;
    const Eigen::VectorXd& in = trace.at(s).values();
    if (std::holds_alternative<Relu>(kind)) {
      if (in.size() > 0 && in.cwiseAbs().minCoeff() < kKinkMargin) return false;
    } else if (const auto* pool = std::get_if<MaxPool>(&kind)) {
      const Shape& is = net.slot_shape(s);
      const Shape& os = net.slot_shape(s + 1);
      for (Index oi = 0; oi < os[0]; ++oi)
        for (Index oj = 0; oj < os[1]; ++oj)
          for (Index c = 0; c < os[2]; ++c) {
            double top = -INFINITY, second = -INFINITY;
            for (Index di = 0; di < pool->window; ++di)
              for (Index dj = 0; dj < pool->window; ++dj) {
                const double v = in[((oi * pool->stride + di) * is[1] + oj * pool->stride + dj) * is[2] + c];
                if (v > top) {
                  second = top;
                  top = v;
                } else if (v > second) {
                  second = v;
                }
              }
            if (top - second < kKinkMargin) return false;
          }
    }
  }
  return true;
}

Tensor jittered_input(const Network& net, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Tensor x = random_input(rng, net.input_shape());
    if (away_from_kinks(net, forward(net, x))) return x;
  }
  throw std::runtime_error("could not find an input away from activation kinks");
}

// Vector relative error; per-entry ratios on near-zero components measure
// only roundoff at h = 1e-5.
double fd_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  return (analytic - numeric).norm() / std::max({analytic.norm(), numeric.norm(), 1e-6});
}

Network small_linear_net(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Index> widths{2 + static_cast<Index>(rng.index(7))};
  widths.push_back(2 + static_cast<Index>(rng.index(6)));
  widths.push_back(2 + static_cast<Index>(rng.index(6)));
  widths.push_back(2 + static_cast<Index>(rng.index(3)));
  return random_linear_net(widths, rng.next());
}

// Which piece of a piecewise-linear network a point lies on.
std::vector<Index> activation_pattern(const Network& net, const ForwardTrace& trace) {
  std::vector<Index> pattern;
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const auto s = static_cast<Index>(k);
    const auto& kind = net.layers()[k].kind;
    if (std::holds_alternative<Relu>(kind)) {
      const Eigen::VectorXd& in = trace.at(s).values();
      for (Index i = 0; i < in.size(); ++i) pattern.push_back(in[i] > 0.0);
    } else if (const auto* pool = std::get_if<MaxPool>(&kind)) {
      const auto arg = layers::maxpool_argmax(*pool, net.slot_shape(s), net.slot_shape(s + 1), trace.at(s).values());
      pattern.insert(pattern.end(), arg.begin(), arg.end());
    }
  }
  return pattern;
}

Tensor path_point(const Tensor& reference, const Tensor& input, double alpha) {
  return Tensor(input.shape(), reference.values() + alpha * (input.values() - reference.values()));
}

}  // namespace

Eigen::MatrixXd exact_piecewise_conductance(const Network& net, const Tensor& reference, const Tensor& input,
                                            Index slot, const Eigen::MatrixXd& target_weights) {
  auto pattern_at = [&](double alpha) { return activation_pattern(net, forward(net, path_point(reference, input, alpha))); };
  std::vector<double> cuts{0.0, 1.0};
  // Recursive bisection between grid points whose patterns differ.
  std::function<void(double, double, const std::vector<Index>&, const std::vector<Index>&)> refine =
      [&](double lo, double hi, const std::vector<Index>& plo, const std::vector<Index>& phi) {
        if (plo == phi) return;
        if (hi - lo < 1e-15) {
          cuts.push_back(hi);
          return;
        }
        const double mid = 0.5 * (lo + hi);
        const auto pmid = pattern_at(mid);
        refine(lo, mid, plo, pmid);
        refine(mid, hi, pmid, phi);
      };
  constexpr int kGrid = 1024;
  auto prev = pattern_at(0.0);
  for (int g = 1; g <= kGrid; ++g) {
    const double lo = static_cast<double>(g - 1) / kGrid, hi = static_cast<double>(g) / kGrid;
    auto cur = pattern_at(hi);
    refine(lo, hi, prev, cur);
    prev = std::move(cur);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(net.slot_size(slot), target_weights.cols());
  Eigen::VectorXd y_prev = forward(net, reference).at(slot).values();
  for (std::size_t p = 1; p < cuts.size(); ++p) {
    const ForwardTrace mid = forward(net, path_point(reference, input, 0.5 * (cuts[p - 1] + cuts[p])));
    const Eigen::VectorXd y_next =
        p + 1 == cuts.size() ? forward(net, input).at(slot).values()
                             : forward(net, path_point(reference, input, cuts[p])).at(slot).values();
    out += (y_next - y_prev).asDiagonal() * backward_to(net, mid, slot, target_weights);
    y_prev = y_next;
  }
  return out;
}

double relative_error(double value, double reference) {
  return std::abs(value - reference) / std::max(std::abs(reference), 1e-6);
}

Network random_small_mlp(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Index> widths{2 + static_cast<Index>(rng.index(7))};
  widths.push_back(3 + static_cast<Index>(rng.index(6)));
  widths.push_back(3 + static_cast<Index>(rng.index(6)));
  widths.push_back(2 + static_cast<Index>(rng.index(3)));
  return random_mlp(widths, rng.next());
}

Network random_small_convnet(std::uint64_t seed) {
  Rng rng(seed);
  auto conv = [&](Index out, Index in, Index k, Index stride, Index pad) {
    Conv2d c;
    c.kernels = random_input(rng, {out, in, k, k}, -0.6, 0.6);
    c.bias = random_vector(rng, out) * 0.2;
    c.stride = stride;
    c.padding = pad;
    return c;
  };
  std::vector<LayerSpec> layers;
  layers.push_back({"conv1", conv(3, 2, 3, 1, 1)});
  layers.push_back({"relu1", Relu{}});
  layers.push_back({"pool", MaxPool{2, 2}});
  layers.push_back({"conv2", conv(4, 3, 2, 2, 1)});
  layers.push_back({"relu2", Relu{}});
  layers.push_back({"flatten", Flatten{}});
  Dense d;
  d.weight = Eigen::MatrixXd(3, 2 * 2 * 4);
  for (Index r = 0; r < d.weight.rows(); ++r)
    for (Index c = 0; c < d.weight.cols(); ++c) d.weight(r, c) = rng.uniform(-0.5, 0.5);
  d.bias = random_vector(rng, 3) * 0.1;
  layers.push_back({"dense", std::move(d)});
  return Network({6, 6, 2}, std::move(layers));
}

namespace {

double discretization_bound(Index steps) { return kDiscretizationConstant / static_cast<double>(steps); }

double layer_scaled_error(const Eigen::MatrixXd& value, const Eigen::MatrixXd& reference) {
  return (value - reference).cwiseAbs().maxCoeff() / std::max(reference.cwiseAbs().maxCoeff(), 1e-6);
}

}  // namespace

PropertyResult verify_equivalence(const VerifyConfig& config) {
  WorstCase worst;
  std::atomic<Index> strict_misses{0}, neurons{0};
  parallel_for(
      config.networks,
      [&](Index k) {
        const std::uint64_t seed = mix(config.seed, static_cast<std::uint64_t>(k));
        const Network net = random_small_mlp(seed);
        Rng rng(seed ^ 0xA5A5A5A5ULL);
        const PathSpec path{random_input(rng, net.input_shape()), random_input(rng, net.input_shape()), config.steps,
                            QuadratureRule::kRightRiemann};
        const Eigen::VectorXd w =
            target_weights(TargetSpec::top_logit_minus_mean(), forward(net, path.input).logits().values());
        for (Index slot = 1; slot + 1 < net.num_slots(); ++slot) {
          const Eigen::MatrixXd nig = detail::nig_scores(net, path, slot, w, nullptr, !config.skip_differencing);
          const Eigen::MatrixXd oracle = attribute_targets(net, Method::kConductanceDirect, path, slot, w, nullptr,
                                                           config.size_cap);
          for (Index j = 0; j < nig.rows(); ++j) {
            ++neurons;
            if (relative_error(nig(j, 0), oracle(j, 0)) > 1e-4) ++strict_misses;
          }
          worst.update(layer_scaled_error(nig, oracle),
                       "network " + std::to_string(k) + " layer " + std::string(net.slot_name(slot)));
        }
      },
      config.threads);
  PropertyResult r = worst.result("equivalence", discretization_bound(config.steps));
  r.detail += "; per-neuron relative error above 1e-4 on " + std::to_string(strict_misses.load()) + " of " +
              std::to_string(neurons.load()) + " neurons";
  return r;
}

PropertyResult verify_path_limit(const VerifyConfig& config) {
  WorstCase worst;
  parallel_for(
      config.networks,
      [&](Index k) {
        const std::uint64_t seed = mix(config.seed, static_cast<std::uint64_t>(k));
        const Network net = random_small_mlp(seed);
        Rng rng(seed ^ 0xA5A5A5A5ULL);
        const Tensor ref = random_input(rng, net.input_shape());
        const Tensor x = random_input(rng, net.input_shape());
        const Eigen::VectorXd w = target_weights(TargetSpec::top_logit_minus_mean(), forward(net, x).logits().values());
        const double delta = w.dot(forward(net, x).logits().values() - forward(net, ref).logits().values());
        for (Index slot = 0; slot + 1 < net.num_slots(); ++slot) {
          const Eigen::MatrixXd exact = exact_piecewise_conductance(net, ref, x, slot, w);
          worst.update(std::abs(exact.sum() - delta) / std::max(std::abs(delta), 1e-6),
                       "network " + std::to_string(k) + " layer " + std::string(net.slot_name(slot)));
        }
      },
      config.threads);
  return worst.result("exact-path-integral", 1e-9);
}

PropertyResult verify_completeness(const VerifyConfig& config) {
  WorstCase worst;
  parallel_for(
      config.networks,
      [&](Index k) {
        const std::uint64_t seed = mix(config.seed, static_cast<std::uint64_t>(k));
        const Network net = random_small_mlp(seed);
        Rng rng(seed ^ 0x5A5A5A5AULL);
        const PathSpec path{random_input(rng, net.input_shape()), random_input(rng, net.input_shape()), config.steps,
                            QuadratureRule::kRightRiemann};
        const Eigen::VectorXd w =
            target_weights(TargetSpec::top_logit_minus_mean(), forward(net, path.input).logits().values());
        const double delta =
            w.dot(forward(net, path.input).logits().values() - forward(net, path.reference).logits().values());
        for (Index slot = 0; slot + 1 < net.num_slots(); ++slot) {
          const Eigen::MatrixXd nig = detail::nig_scores(net, path, slot, w, nullptr, !config.skip_differencing);
          worst.update(std::abs(nig.sum() - delta) / std::max(nig.cwiseAbs().sum(), 1e-6),
                       "network " + std::to_string(k) + " layer " + std::string(net.slot_name(slot)));
        }
      },
      config.threads);
  return worst.result("completeness", discretization_bound(config.steps));
}

PropertyResult verify_deeplift_conservation(const VerifyConfig& config) {
  WorstCase worst;
  parallel_for(
      config.networks,
      [&](Index k) {
        const std::uint64_t seed = mix(config.seed, static_cast<std::uint64_t>(k));
        for (const Network& net : {random_small_mlp(seed), random_small_convnet(seed)}) {
          Rng rng(seed ^ 0x3C3C3C3CULL);
          const ForwardTrace ref = forward(net, random_input(rng, net.input_shape()));
          const ForwardTrace x = forward(net, random_input(rng, net.input_shape()));
          const Eigen::VectorXd w = target_weights(TargetSpec::top_logit_minus_mean(), x.logits().values());
          for (const auto rules : {DeepLiftRules::kRescaleAll, DeepLiftRules::kDefaultMixed}) {
            const MultiplierStack stack = deeplift_multipliers(net, ref, x, 0, w, rules);
            const double scale = std::max(1.0, std::abs(stack.target_delta));
            worst.update(stack.max_conservation_error() / scale,
                         "network " + std::to_string(k) + (net.layers().size() > 5 ? " (conv)" : " (mlp)") +
                             (rules == DeepLiftRules::kRescaleAll ? " rescale" : " default"));
          }
        }
      },
      config.threads);
  return worst.result("deeplift-conservation", 1e-8);
}

PropertyResult verify_finite_differences(const VerifyConfig& config) {
  WorstCase worst;
  std::mutex kinds_mutex;
  std::map<std::string, double> per_kind;
  auto record = [&](const std::string& kind, const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                    const std::string& where) {
    const double error = fd_error(analytic, numeric);
    worst.update(error, where);
    std::lock_guard<std::mutex> lock(kinds_mutex);
    per_kind[kind] = std::max(per_kind[kind], error);
  };
  // Central difference of g along coordinate j of `at`. Output vectors are
  // differenced before contraction so untouched entries cancel exactly.
  auto central = [](const Eigen::VectorXd& at, const auto& g) {
    Eigen::VectorXd out(at.size());
    for (Index j = 0; j < at.size(); ++j) {
      Eigen::VectorXd plus = at, minus = at;
      plus[j] += kFdStep;
      minus[j] -= kFdStep;
      out[j] = g(plus, minus) / (2.0 * kFdStep);
    }
    return out;
  };

  parallel_for(
      config.networks,
      [&](Index k) {
        const std::uint64_t seed = mix(config.seed, static_cast<std::uint64_t>(k));
        for (const Network& net : {random_small_mlp(seed), random_small_convnet(seed)}) {
          Rng rng(seed ^ 0x0F0F0F0FULL);
          const Tensor x = jittered_input(net, rng);
          const ForwardTrace trace = forward(net, x);
          const std::string tag = "network " + std::to_string(k) + " ";

          // Each layer on its own: vector-Jacobian product.
          for (std::size_t l = 0; l < net.layers().size(); ++l) {
            const auto s = static_cast<Index>(l);
            const auto& kind = net.layers()[l].kind;
            const Shape& is = net.slot_shape(s);
            const Shape& os = net.slot_shape(s + 1);
            const Eigen::VectorXd u = random_vector(rng, shape_size(os));
            const Eigen::VectorXd numeric = central(trace.at(s).values(), [&](const auto& p, const auto& m) {
              return u.dot(layers::forward(kind, is, os, p) - layers::forward(kind, is, os, m));
            });
            record(std::string(kind_name(kind)), layers::backward(kind, is, os, trace.at(s).values(), u).col(0),
                   numeric, tag + "layer " + net.layers()[l].name);
          }

          // End to end: target gradient at every activation slot.
          const Eigen::VectorXd w = random_vector(rng, net.output_dim());
          for (Index s = 0; s + 1 < net.num_slots(); ++s) {
            const Eigen::VectorXd numeric = central(trace.at(s).values(), [&](const auto& p, const auto& m) {
              return w.dot(forward_from(net, s, p) - forward_from(net, s, m));
            });
            record("chain", backward_to(net, trace, s, w).col(0), numeric,
                   tag + "gradient at " + std::string(net.slot_name(s)));
          }

          // Trainable parameters: the loss gradient is the logit Jacobian
          // contracted with softmax - onehot, checked in two parts.
          const int label = static_cast<int>(rng.index(static_cast<std::uint64_t>(net.output_dim())));
          const Eigen::VectorXd logits = trace.logits().values();
          Eigen::VectorXd cot = (logits.array() - logits.maxCoeff()).exp();
          cot /= cot.sum();
          cot[label] -= 1.0;
          record("loss", cot, central(logits, [&](const auto& p, const auto& m) {
                   return cross_entropy(p, label) - cross_entropy(m, label);
                 }),
                 tag + "loss");
          const Eigen::VectorXd numeric = central(parameter_vector(net), [&](const auto& p, const auto& m) {
            return cot.dot(forward(with_parameters(net, p), x).logits().values() -
                           forward(with_parameters(net, m), x).logits().values());
          });
          record("parameters", loss_parameter_gradient(net, x, label), numeric, tag + "parameters");
        }
      },
      config.threads);

  PropertyResult r = worst.result("finite-differences", 1e-6);
  std::ostringstream kinds;
  for (const auto& [kind, err] : per_kind) kinds << " " << kind << "=" << err;
  r.detail += ";" + kinds.str();
  return r;
}

PropertyResult verify_linear_collapse(const VerifyConfig& config) {
  WorstCase worst;
  parallel_for(
      config.networks,
      [&](Index k) {
        const std::uint64_t seed = mix(config.seed, static_cast<std::uint64_t>(k));
        const Network net = small_linear_net(seed);
        Rng rng(seed ^ 0x77777777ULL);
        const Index steps = 1 + static_cast<Index>(rng.index(20));
        const PathSpec path{random_input(rng, net.input_shape()), random_input(rng, net.input_shape()), steps,
                            QuadratureRule::kRightRiemann};
        const Eigen::VectorXd w =
            target_weights(TargetSpec::top_logit_minus_mean(), forward(net, path.input).logits().values());
        for (Index slot = 0; slot + 1 < net.num_slots(); ++slot) {
          const Eigen::MatrixXd nig = attribute_targets(net, Method::kNeuronIntegratedGradients, path, slot, w);
          std::vector<std::pair<Method, Eigen::MatrixXd>> others;
          others.emplace_back(Method::kGradXDiff, attribute_targets(net, Method::kGradXDiff, path, slot, w));
          others.emplace_back(Method::kDeepLiftRescale, attribute_targets(net, Method::kDeepLiftRescale, path, slot, w));
          others.emplace_back(Method::kDeepLiftDefault, attribute_targets(net, Method::kDeepLiftDefault, path, slot, w));
          const Method layer_integral = slot == 0 ? Method::kIntegratedGradients : Method::kConductanceDirect;
          others.emplace_back(layer_integral,
                              attribute_targets(net, layer_integral, path, slot, w, nullptr, config.size_cap));
          for (const auto& [method, scores] : others) {
            const double err = (scores - nig).cwiseAbs().maxCoeff() / std::max(1.0, nig.cwiseAbs().maxCoeff());
            worst.update(err, "network " + std::to_string(k) + " layer " + std::string(net.slot_name(slot)) + " " +
                                  std::string(method_name(method)));
          }
        }
      },
      config.threads);
  return worst.result("linear-collapse", 1e-9);
}

std::vector<PropertyResult> run_verify(const VerifyConfig& config) {
  return {verify_equivalence(config),         verify_path_limit(config),
          verify_completeness(config),        verify_deeplift_conservation(config),
          verify_finite_differences(config), verify_linear_collapse(config)};
}

}  // namespace nattr
