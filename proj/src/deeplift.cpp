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

#include "nattr/deeplift.hpp"

#include <chrono>
#include <cmath>
#include <optional>

namespace nattr {
namespace {

enum class ReluRule { kRescale, kRevealCancel };

ReluRule relu_rule(const Network& net, std::size_t k, DeepLiftRules rules) {
  if (rules == DeepLiftRules::kRescaleAll) return ReluRule::kRescale;
  for (std::size_t j = k; j-- > 0;) {
    const auto& kind = net.layers()[j].kind;
    if (std::holds_alternative<Dense>(kind)) return ReluRule::kRevealCancel;
    if (std::holds_alternative<Conv2d>(kind)) return ReluRule::kRescale;
  }
  return ReluRule::kRescale;
}

// Sign-split copies of a linear layer, without bias.
struct SignedParts {
  LayerKind pos;
  LayerKind neg;
};

// Forward-pass factors a layer needs in the multiplier pass.
struct LayerFactors {
  Eigen::VectorXd pos_ratio;  // relu: m+ scale; maxpool: ratio per output
  Eigen::VectorXd neg_ratio;  // relu: m- scale
  std::vector<Index> route;   // maxpool: input index per output
  std::optional<SignedParts> parts;
};

struct Decomposition {
  std::vector<Eigen::VectorXd> pos;
  std::vector<Eigen::VectorXd> neg;
  std::vector<LayerFactors> factors;
};

std::optional<SignedParts> signed_parts(const LayerKind& kind) {
  if (const auto* d = std::get_if<Dense>(&kind)) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d->bias.size());
    return SignedParts{Dense{d->weight.cwiseMax(0.0), zero}, Dense{d->weight.cwiseMin(0.0), zero}};
  }
  if (const auto* c = std::get_if<Conv2d>(&kind)) {
    Conv2d p = *c;
    Conv2d n = *c;
    p.kernels.values() = c->kernels.values().cwiseMax(0.0);
    n.kernels.values() = c->kernels.values().cwiseMin(0.0);
    p.bias.setZero();
    n.bias.setZero();
    return SignedParts{std::move(p), std::move(n)};
  }
  return std::nullopt;
}

double ratio_or_slope(double dy, double da, double slope) {
  return std::abs(da) > kDeepLiftEpsilon ? dy / da : slope;
}

double relu(double v) { return v > 0.0 ? v : 0.0; }

Decomposition decompose(const Network& net, const ForwardTrace& ref, const ForwardTrace& x, DeepLiftRules rules) {
  const Index slots = net.num_slots();
  Decomposition dec;
  dec.pos.resize(static_cast<std::size_t>(slots));
  dec.neg.resize(static_cast<std::size_t>(slots));
  dec.factors.resize(net.layers().size());

  const Eigen::VectorXd dx = x.input().values() - ref.input().values();
  dec.pos[0] = dx.cwiseMax(0.0);
  dec.neg[0] = dx.cwiseMin(0.0);

  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const Index s = static_cast<Index>(k);
    const auto& kind = net.layers()[k].kind;
    const Shape& in_shape = net.slot_shape(s);
    const Shape& out_shape = net.slot_shape(s + 1);
    const Eigen::VectorXd& p = dec.pos[k];
    const Eigen::VectorXd& n = dec.neg[k];
    LayerFactors& f = dec.factors[k];
    Eigen::VectorXd& out_p = dec.pos[k + 1];
    Eigen::VectorXd& out_n = dec.neg[k + 1];

    if (auto parts = signed_parts(kind)) {
      const Eigen::VectorXd& a = x.at(s).values();
      out_p = layers::tangent(parts->pos, in_shape, out_shape, a, p) + layers::tangent(parts->neg, in_shape, out_shape, a, n);
      out_n = layers::tangent(parts->pos, in_shape, out_shape, a, n) + layers::tangent(parts->neg, in_shape, out_shape, a, p);
      f.parts = std::move(parts);
    } else if (std::holds_alternative<Relu>(kind)) {
      const Eigen::VectorXd& a0 = ref.at(s).values();
      const Eigen::VectorXd& ax = x.at(s).values();
      const Index size = a0.size();
      f.pos_ratio.resize(size);
      f.neg_ratio.resize(size);
      out_p.resize(size);
      out_n.resize(size);
      if (relu_rule(net, k, rules) == ReluRule::kRescale) {
        const Eigen::VectorXd& y0 = ref.at(s + 1).values();
        const Eigen::VectorXd& yx = x.at(s + 1).values();
        for (Index j = 0; j < size; ++j) {
          const double r = ratio_or_slope(yx[j] - y0[j], ax[j] - a0[j], ax[j] > 0.0 ? 1.0 : 0.0);
          f.pos_ratio[j] = r;
          f.neg_ratio[j] = r;
          out_p[j] = r * p[j];
          out_n[j] = r * n[j];
        }
      } else {
        for (Index j = 0; j < size; ++j) {
          const double base = a0[j];
          const double both = relu(base + p[j] + n[j]);
          const double dy_pos = 0.5 * ((relu(base + p[j]) - relu(base)) + (both - relu(base + n[j])));
          const double dy_neg = 0.5 * ((relu(base + n[j]) - relu(base)) + (both - relu(base + p[j])));
          const double slope = ax[j] > 0.0 ? 1.0 : 0.0;
          f.pos_ratio[j] = ratio_or_slope(dy_pos, p[j], slope);
          f.neg_ratio[j] = ratio_or_slope(dy_neg, n[j], slope);
          out_p[j] = dy_pos;
          out_n[j] = dy_neg;
        }
      }
    } else if (const auto* pool = std::get_if<MaxPool>(&kind)) {
      const Eigen::VectorXd& in0 = ref.at(s).values();
      const Eigen::VectorXd& inx = x.at(s).values();
      const Eigen::VectorXd dout = x.at(s + 1).values() - ref.at(s + 1).values();
      f.route = layers::maxpool_argmax(*pool, in_shape, out_shape, inx);
      const Index w = in_shape[1], c = in_shape[2], ow = out_shape[1];
      const Index size = dout.size();
      f.pos_ratio.resize(size);
      out_p.resize(size);
      out_n.resize(size);
      for (Index o = 0; o < size; ++o) {
        Index k_in = f.route[static_cast<std::size_t>(o)];
        double din = inx[k_in] - in0[k_in];
        double r = 1.0;
        if (std::abs(din) > kDeepLiftEpsilon) {
          r = dout[o] / din;
        } else {
          // The actual argmax barely moved; route through the window entry
          // with the largest change instead so the delta is still conserved.
          const Index ch = o % c, oy = (o / c) / ow, ox = (o / c) % ow;
          Index best = -1;
          for (Index ki = 0; ki < pool->window; ++ki) {
            for (Index kj = 0; kj < pool->window; ++kj) {
              const Index idx = ((oy * pool->stride + ki) * w + ox * pool->stride + kj) * c + ch;
              if (std::abs(inx[idx] - in0[idx]) > kDeepLiftEpsilon &&
                  (best < 0 || std::abs(inx[idx] - in0[idx]) > std::abs(inx[best] - in0[best]))) {
                best = idx;
              }
            }
          }
          if (best >= 0) {
            k_in = best;
            f.route[static_cast<std::size_t>(o)] = best;
            r = dout[o] / (inx[best] - in0[best]);
          }
        }
        f.pos_ratio[o] = r;
        if (r >= 0.0) {
          out_p[o] = r * p[k_in];
          out_n[o] = r * n[k_in];
        } else {
          out_p[o] = r * n[k_in];
          out_n[o] = r * p[k_in];
        }
      }
    } else {
      out_p = p;
      out_n = n;
    }
  }
  return dec;
}

// One multiplier step from slot s+1 to slot s for layer k = s.
void multiplier_step(const Network& net, const Decomposition& dec, std::size_t k, Eigen::MatrixXd& mp,
                     Eigen::MatrixXd& mn) {
  const Index s = static_cast<Index>(k);
  const auto& kind = net.layers()[k].kind;
  const LayerFactors& f = dec.factors[k];
  const Shape& in_shape = net.slot_shape(s);
  const Shape& out_shape = net.slot_shape(s + 1);
  const Eigen::VectorXd unused;
  if (f.parts) {
    Eigen::MatrixXd np = layers::backward(f.parts->pos, in_shape, out_shape, unused, mp) +
                         layers::backward(f.parts->neg, in_shape, out_shape, unused, mn);
    Eigen::MatrixXd nn = layers::backward(f.parts->pos, in_shape, out_shape, unused, mn) +
                         layers::backward(f.parts->neg, in_shape, out_shape, unused, mp);
    mp = std::move(np);
    mn = std::move(nn);
  } else if (std::holds_alternative<Relu>(kind)) {
    mp = f.pos_ratio.asDiagonal() * mp;
    mn = f.neg_ratio.asDiagonal() * mn;
  } else if (std::holds_alternative<MaxPool>(kind)) {
    const Index in_size = shape_size(in_shape);
    Eigen::MatrixXd np = Eigen::MatrixXd::Zero(in_size, mp.cols());
    Eigen::MatrixXd nn = Eigen::MatrixXd::Zero(in_size, mp.cols());
    for (std::size_t o = 0; o < f.route.size(); ++o) {
      const Index oi = static_cast<Index>(o);
      const Index k_in = f.route[o];
      const double r = f.pos_ratio[oi];
      if (r >= 0.0) {
        np.row(k_in) += r * mp.row(oi);
        nn.row(k_in) += r * mn.row(oi);
      } else {
        np.row(k_in) += r * mn.row(oi);
        nn.row(k_in) += r * mp.row(oi);
      }
    }
    mp = std::move(np);
    mn = std::move(nn);
  }
}

void require_same_net(const Network& net, const ForwardTrace& ref, const ForwardTrace& x) {
  if (ref.num_slots() != net.num_slots() || x.num_slots() != net.num_slots()) {
    throw std::invalid_argument("deeplift: traces do not come from this network");
  }
}

}  // namespace

double MultiplierStack::contribution_sum(Index slot) const {
  const auto s = static_cast<std::size_t>(slot);
  return mult_pos.at(s).dot(delta_pos.at(s)) + mult_neg.at(s).dot(delta_neg.at(s));
}

double MultiplierStack::max_conservation_error() const {
  double worst = 0.0;
  for (Index s = from_slot; s < static_cast<Index>(mult_pos.size()); ++s) {
    worst = std::max(worst, std::abs(contribution_sum(s) - target_delta));
  }
  return worst;
}

MultiplierStack deeplift_multipliers(const Network& net, const ForwardTrace& reference_trace,
                                     const ForwardTrace& input_trace, Index from_slot,
                                     const Eigen::VectorXd& target_weights, DeepLiftRules rules) {
  require_same_net(net, reference_trace, input_trace);
  if (target_weights.size() != net.output_dim()) {
    throw std::invalid_argument("deeplift: target weights must have output_dim entries");
  }
  Decomposition dec = decompose(net, reference_trace, input_trace, rules);
  MultiplierStack stack;
  stack.from_slot = from_slot;
  const auto slots = static_cast<std::size_t>(net.num_slots());
  stack.mult_pos.resize(slots);
  stack.mult_neg.resize(slots);
  stack.target_delta = target_weights.dot(input_trace.logits().values() - reference_trace.logits().values());

  Eigen::MatrixXd mp = target_weights;
  Eigen::MatrixXd mn = target_weights;
  stack.mult_pos[slots - 1] = mp.col(0);
  stack.mult_neg[slots - 1] = mn.col(0);
  for (std::size_t k = slots - 1; k-- > static_cast<std::size_t>(from_slot);) {
    multiplier_step(net, dec, k, mp, mn);
    stack.mult_pos[k] = mp.col(0);
    stack.mult_neg[k] = mn.col(0);
  }
  stack.delta_pos = std::move(dec.pos);
  stack.delta_neg = std::move(dec.neg);
  return stack;
}

Eigen::MatrixXd deeplift_scores(const Network& net, const ForwardTrace& reference_trace,
                                const ForwardTrace& input_trace, Index slot, const Eigen::MatrixXd& target_weights,
                                DeepLiftRules rules) {
  require_same_net(net, reference_trace, input_trace);
  if (target_weights.rows() != net.output_dim()) {
    throw std::invalid_argument("deeplift: target weights must have output_dim rows");
  }
  const Decomposition dec = decompose(net, reference_trace, input_trace, rules);
  Eigen::MatrixXd mp = target_weights;
  Eigen::MatrixXd mn = target_weights;
  for (std::size_t k = static_cast<std::size_t>(net.num_slots()) - 1; k-- > static_cast<std::size_t>(slot);) {
    multiplier_step(net, dec, k, mp, mn);
  }
  const auto s = static_cast<std::size_t>(slot);
  return dec.pos[s].asDiagonal() * mp + dec.neg[s].asDiagonal() * mn;
}

AttributionResult deeplift_attribute(const Network& net, const Tensor& reference, const Tensor& input,
                                     std::string_view layer, const TargetSpec& target, DeepLiftRules rules) {
  const auto start = std::chrono::steady_clock::now();
  const Index slot = net.slot(layer);
  const ForwardTrace ref = forward(net, reference);
  const ForwardTrace x = forward(net, input);
  const Eigen::VectorXd w = target_weights(target, x.logits().values());
  const Eigen::MatrixXd scores = deeplift_scores(net, ref, x, slot, w, rules);

  AttributionResult result;
  result.method = rules == DeepLiftRules::kRescaleAll ? Method::kDeepLiftRescale : Method::kDeepLiftDefault;
  result.layer = std::string(layer);
  result.scores = Tensor(net.slot_shape(slot), scores.col(0));
  result.target_delta = w.dot(x.logits().values() - ref.logits().values());
  result.completeness_residual = scores.sum() - result.target_delta;
  result.counts = {2, 0, 1, 0};
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace nattr
