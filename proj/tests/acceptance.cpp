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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion on
// stdout (progress goes to stderr) and exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nattr/ablation.hpp"
#include "nattr/attribution.hpp"
#include "nattr/dataset.hpp"
#include "nattr/deeplift.hpp"
#include "nattr/parallel.hpp"
#include "nattr/random.hpp"
#include "nattr/stats.hpp"
#include "nattr/train.hpp"
#include "nattr/verify.hpp"

namespace {

using namespace nattr;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void progress(const std::string& msg) {
  std::fprintf(stderr, "... %s\n", msg.c_str());
  std::fflush(stderr);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// 1: per-neuron agreement of the path sum with the brute-force oracle.
void equivalence() {
  const auto start = Clock::now();
  constexpr Index kSteps = 2000;
  Index neurons = 0, misses = 0, misses_vs_exact = 0, oracle_misses_vs_exact = 0;
  double worst = 0.0;
  for (std::uint64_t k = 1; k <= 20; ++k) {
    const Network net = random_small_mlp(k);
    Rng rng(1000 + k);
    Tensor ref(net.input_shape()), x(net.input_shape());
    for (Index i = 0; i < ref.size(); ++i) ref[i] = rng.uniform(-1, 1);
    for (Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1, 1);
    const PathSpec path{ref, x, kSteps, QuadratureRule::kRightRiemann};
    const Eigen::VectorXd w = target_weights(TargetSpec::top_logit_minus_mean(), forward(net, x).logits().values());
    for (Index slot = 1; slot + 1 < net.num_slots(); ++slot) {
      const Eigen::MatrixXd nig = attribute_targets(net, Method::kNeuronIntegratedGradients, path, slot, w);
      const Eigen::MatrixXd cond = attribute_targets(net, Method::kConductanceDirect, path, slot, w);
      const Eigen::MatrixXd exact = exact_piecewise_conductance(net, ref, x, slot, w);
      for (Index j = 0; j < nig.rows(); ++j) {
        ++neurons;
        const double e = relative_error(nig(j, 0), cond(j, 0));
        worst = std::max(worst, e);
        misses += e > 1e-4;
        misses_vs_exact += relative_error(nig(j, 0), exact(j, 0)) > 1e-4;
        oracle_misses_vs_exact += relative_error(cond(j, 0), exact(j, 0)) > 1e-4;
      }
    }
  }
  VerifyConfig vc;
  vc.steps = kSteps;
  vc.threads = worker_count();
  const PropertyResult scaled = verify_equivalence(vc);
  report(1, "equivalence", misses == 0,
         fmt("%ld of %ld neurons above 1e-4 relative error (worst %.3g); against the exact piecewise integral the "
             "path sum misses on %ld and the oracle on %ld; layer-scaled error %.3g (bound %.3g, %s); %.1f s",
             static_cast<long>(misses), static_cast<long>(neurons), worst, static_cast<long>(misses_vs_exact),
             static_cast<long>(oracle_misses_vs_exact), scaled.worst_error, scaled.tolerance,
             scaled.passed ? "within" : "exceeded", seconds_since(start)));
}

// Completeness residual relative to |target delta| for one image and layer.
double nig_relative_residual(const Network& net, const Tensor& ref, const Tensor& x, const std::string& layer,
                             Index steps, QuadratureRule rule = QuadratureRule::kRightRiemann) {
  const auto r =
      neuron_integrated_gradients(net, PathSpec{ref, x, steps, rule}, layer, TargetSpec::top_logit_minus_mean());
  return std::abs(r.completeness_residual) / std::max(std::abs(r.target_delta), 1e-12);
}

// 2: completeness on the trained model.
void completeness(const Network& net, const std::vector<Tensor>& images) {
  const auto start = Clock::now();
  const Tensor ref(net.input_shape());
  const std::size_t n = std::min<std::size_t>(100, images.size());
  std::string detail;
  bool pass = true;
  for (const std::string layer : {"conv1", "conv2"}) {
    std::vector<double> nig(n), trap(n), dl_default(n), dl_rescale(n);
    parallel_for(static_cast<Index>(n), [&](Index i) {
      const Tensor& x = images[static_cast<std::size_t>(i)];
      nig[static_cast<std::size_t>(i)] = nig_relative_residual(net, ref, x, layer, 500);
      // Informational only: the verdict uses the default right rule.
      trap[static_cast<std::size_t>(i)] = nig_relative_residual(net, ref, x, layer, 500, QuadratureRule::kTrapezoid);
      for (auto [rules, out] : {std::pair{DeepLiftRules::kDefaultMixed, &dl_default},
                                std::pair{DeepLiftRules::kRescaleAll, &dl_rescale}}) {
        const auto r = deeplift_attribute(net, ref, x, layer, TargetSpec::top_logit_minus_mean(), rules);
        (*out)[static_cast<std::size_t>(i)] =
            std::abs(r.completeness_residual) / std::max(std::abs(r.target_delta), 1e-12);
      }
    });
    const auto within = std::count_if(nig.begin(), nig.end(), [](double e) { return e <= 1e-3; });
    const auto trap_within = std::count_if(trap.begin(), trap.end(), [](double e) { return e <= 1e-3; });
    const double dl_worst = std::max(*std::max_element(dl_default.begin(), dl_default.end()),
                                     *std::max_element(dl_rescale.begin(), dl_rescale.end()));
    const bool ok = within >= 95 * static_cast<long>(n) / 100 && dl_worst <= 1e-8;
    pass = pass && ok;
    detail += fmt("%s nig n=500 %ld/%zu within 1e-3 (worst %.3g; trapezoid rule %ld/%zu), deeplift worst %.3g; ",
                  layer.c_str(), static_cast<long>(within), n, *std::max_element(nig.begin(), nig.end()),
                  static_cast<long>(trap_within), n, dl_worst);
  }
  report(2, "completeness", pass, detail + fmt("%.1f s", seconds_since(start)));
}

// 3: mean residual shrinks as n grows.
void convergence(const Network& net, const std::vector<Tensor>& images) {
  const auto start = Clock::now();
  const Tensor ref(net.input_shape());
  const std::vector<Index> steps{10, 50, 250, 1250};
  const std::size_t n = std::min<std::size_t>(50, images.size());
  std::string detail;
  bool pass = true;
  for (const std::string layer : {"conv1", "conv2"}) {
    std::vector<std::vector<double>> residual(steps.size(), std::vector<double>(n));
    parallel_for(static_cast<Index>(n), [&](Index i) {
      for (std::size_t s = 0; s < steps.size(); ++s) {
        residual[s][static_cast<std::size_t>(i)] =
            nig_relative_residual(net, ref, images[static_cast<std::size_t>(i)], layer, steps[s]);
      }
    });
    detail += layer + " mean residual";
    double prev = 0.0;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const double m = mean(residual[s]);
      if (s > 0 && m > 1.1 * prev) pass = false;
      detail += fmt(" n=%ld:%.3g", static_cast<long>(steps[s]), m);
      prev = m;
    }
    detail += "; ";
  }
  report(3, "convergence", pass, detail + fmt("%.1f s", seconds_since(start)));
}

void property(int id, const char* name, PropertyResult (*fn)(const VerifyConfig&)) {
  const auto start = Clock::now();
  VerifyConfig vc;
  vc.threads = worker_count();
  const PropertyResult r = fn(vc);
  report(id, name, r.passed,
         fmt("worst %.3g, tolerance %.1g over %ld cases [%s]; %.1f s", r.worst_error, r.tolerance,
             static_cast<long>(r.cases), r.detail.c_str(), seconds_since(start)));
}

// 6: Rescale against the path sum at conv2.
void correlation(const Network& net, const std::vector<Tensor>& images) {
  const auto start = Clock::now();
  const Tensor ref(net.input_shape());
  const std::size_t n = std::min<std::size_t>(50, images.size());
  std::vector<double> rho(n);
  parallel_for(static_cast<Index>(n), [&](Index i) {
    const Tensor& x = images[static_cast<std::size_t>(i)];
    const auto target = TargetSpec::top_logit_minus_mean();
    const auto nig =
        neuron_integrated_gradients(net, PathSpec{ref, x, 100, QuadratureRule::kRightRiemann}, "conv2", target);
    const auto dl = deeplift_attribute(net, ref, x, "conv2", target, DeepLiftRules::kRescaleAll);
    const auto& a = nig.scores.values();
    const auto& b = dl.scores.values();
    rho[static_cast<std::size_t>(i)] = pearson(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                                               std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
  });
  const double avg = mean(rho);
  report(6, "rescale-correlation", avg >= 0.95,
         fmt("mean Pearson %.4f over %zu images (min %.4f); %.1f s", avg, n, *std::min_element(rho.begin(), rho.end()),
             seconds_since(start)));
}

// 7: the ablation study.
void ablation(const Network& net, const std::vector<Tensor>& images) {
  const auto start = Clock::now();
  const std::size_t n = std::min<std::size_t>(200, images.size());
  const std::span<const Tensor> inputs(images.data(), n);
  const std::vector<MethodConfig> methods = {
      {Method::kNeuronIntegratedGradients, 10, QuadratureRule::kRightRiemann},
      {Method::kNeuronIntegratedGradients, 100, QuadratureRule::kRightRiemann},
      {Method::kDeepLiftDefault, 1, QuadratureRule::kRightRiemann},
      {Method::kDeepLiftRescale, 1, QuadratureRule::kRightRiemann},
      {Method::kGradXDiff, 1, QuadratureRule::kRightRiemann},
  };
  bool a = true, b = true, c = true;
  std::string detail;
  for (const std::string layer : {"conv1", "conv2"}) {
    const AblationReport r =
        run_ablation_study(net, inputs, Tensor(net.input_shape()), {layer, 0.10, {}}, methods, worker_count());
    a = a && r.failures == 0 && r.count == static_cast<Index>(n);
    const double n10 = r.mae[0], n100 = r.mae[1], gxd = r.mae[4];
    const bool lb = std::abs(n10 - n100) <= 0.05 * n100;
    const bool lc = std::abs(gxd - n100) <= 0.05 * n100;
    b = b && lb;
    c = c && lc;
    detail += fmt("%s MAE nig-n10 %.4g nig-n100 %.4g deeplift-default %.4g deeplift-rescale %.4g gradxdiff %.4g "
                  "(failures %ld, b %s, c %s); ",
                  layer.c_str(), n10, n100, r.mae[2], r.mae[3], gxd, static_cast<long>(r.failures),
                  lb ? "ok" : "miss", lc ? "ok" : "miss");
  }
  report(7, "ablation-study", a && b && c,
         fmt("(a) %s (b) %s (c) %s; ", a ? "pass" : "fail", b ? "pass" : "fail", c ? "pass" : "fail") + detail +
             fmt("%zu images, %.1f s", n, seconds_since(start)));
}

// 8: evaluation counts and wall time linear in n.
void cost(const Network& net, const std::vector<Tensor>& images) {
  const auto start = Clock::now();
  const Tensor ref(net.input_shape());
  const std::vector<Index> steps{10, 20, 50, 100};
  constexpr int kImages = 5, kRepeats = 5;
  bool counts_ok = true;
  std::vector<std::vector<double>> times(steps.size());
  std::vector<EvalCounts> dl_counts;
  for (int rep = 0; rep < kRepeats; ++rep) {
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const auto t0 = Clock::now();
      for (int i = 0; i < kImages; ++i) {
        const auto r = neuron_integrated_gradients(
            net, PathSpec{ref, images[static_cast<std::size_t>(i)], steps[s], QuadratureRule::kRightRiemann}, "conv2",
            TargetSpec::top_logit_minus_mean());
        counts_ok = counts_ok && r.counts.forward_passes == steps[s] + 1 && r.counts.gradient_passes == steps[s] &&
                    r.counts.multiplier_passes == 0 && r.counts.tangent_passes == 0;
      }
      times[s].push_back(seconds_since(t0) / kImages);
      if (rep == 0) {
        EvalCounts total;
        for (int i = 0; i < kImages; ++i) {
          for (auto rules : {DeepLiftRules::kDefaultMixed, DeepLiftRules::kRescaleAll}) {
            total += deeplift_attribute(net, ref, images[static_cast<std::size_t>(i)], "conv2",
                                        TargetSpec::top_logit_minus_mean(), rules)
                         .counts;
          }
        }
        dl_counts.push_back(total);
      }
    }
  }
  std::vector<double> x, y;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    std::sort(times[s].begin(), times[s].end());
    x.push_back(static_cast<double>(steps[s]));
    y.push_back(times[s][kRepeats / 2]);
  }
  const LinearFit fit = least_squares(x, y);
  bool dl_ok = true;
  for (const auto& c : dl_counts) {
    dl_ok = dl_ok && c.forward_passes == dl_counts[0].forward_passes &&
            c.multiplier_passes == dl_counts[0].multiplier_passes && c.gradient_passes == 0;
  }
  report(8, "cost-linearity", counts_ok && dl_ok && fit.r_squared >= 0.98,
         fmt("nig counts %s; median s/example n=10..100: %.4g %.4g %.4g %.4g, R^2 %.5f, slope %.3g s/step; deeplift "
             "%ld forwards + %ld multiplier passes for %d images at every n (%s); %.1f s",
             counts_ok ? "exact" : "WRONG", y[0], y[1], y[2], y[3], fit.r_squared, fit.slope,
             static_cast<long>(dl_counts[0].forward_passes), static_cast<long>(dl_counts[0].multiplier_passes),
             2 * kImages, dl_ok ? "constant" : "VARIES", seconds_since(start)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nattr acceptance run"};
  std::string data = NATTR_MNIST_DIR;
  app.add_option("--data", data, "Directory with the MNIST IDX files")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  LabeledDataset train, test;
  try {
    train = load_idx(data + "/train-images-idx3-ubyte", data + "/train-labels-idx1-ubyte").head(5000);
    test = load_idx(data + "/t10k-images-idx3-ubyte", data + "/t10k-labels-idx1-ubyte").head(1000);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cannot load MNIST from %s: %s\n", data.c_str(), e.what());
    return 3;
  }

  // 9 first: every model-based criterion uses the trained network.
  progress("training the reference network on " + std::to_string(train.size()) + " images");
  const auto t0 = Clock::now();
  const Network net = train_sgd(reference_mnist_net(7), train, TrainConfig{});
  const double train_seconds = seconds_since(t0);
  const double acc = accuracy(net, test);

  progress("equivalence");
  equivalence();
  progress("completeness");
  completeness(net, test.samples);
  progress("convergence");
  convergence(net, test.samples);
  progress("finite differences");
  property(4, "finite-differences", verify_finite_differences);
  progress("linear collapse");
  property(5, "linear-collapse", verify_linear_collapse);
  progress("rescale correlation");
  correlation(net, test.samples);
  progress("ablation study");
  ablation(net, test.samples);
  progress("cost");
  cost(net, test.samples);
  report(9, "trainer", acc >= 0.90 && train_seconds <= 300.0,
         fmt("test accuracy %.4f on %ld images after %.1f s of training on %ld", acc, static_cast<long>(test.size()),
             train_seconds, static_cast<long>(train.size())));

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
