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

// nattr: train, attribute, ablate, bench and verify from the command line.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nattr/ablation.hpp"
#include "nattr/attribution.hpp"
#include "nattr/dataset.hpp"
#include "nattr/deeplift.hpp"
#include "nattr/model_io.hpp"
#include "nattr/parallel.hpp"
#include "nattr/report_io.hpp"
#include "nattr/stats.hpp"
#include "nattr/train.hpp"
#include "nattr/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace nattr;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kNumeric = 4,
};

// Failure carrying its exit class.
struct CliError : std::runtime_error {
  CliError(ExitCode code, const std::string& what) : std::runtime_error(what), code(code) {}
  ExitCode code;
};

struct RunConfig {
  std::string subcommand;
  std::string model;
  std::string data;
  std::vector<std::string> layers;
  std::vector<std::string> methods{"nig"};
  std::vector<Index> steps{50};
  std::string rule = "right";
  std::string target = "top";
  std::uint64_t seed = 7;
  std::string out = "nattr-out";
  Index size_cap = 64;
  Index examples = 1;
  Index offset = 0;
  double fraction = 0.10;
  bool batch_examples = false;
  std::string format = "csv";
  // train
  int epochs = 3;
  double learning_rate = 0.05;
  Index batch_size = 32;
  Index train_count = 5000;
  Index test_count = 1000;
  // verify
  int networks = 20;
  std::string inject_bug;
};

json echo(const RunConfig& c) {
  json j{{"subcommand", c.subcommand}, {"out", c.out}, {"seed", c.seed}};
  if (c.subcommand == "train") {
    j.update({{"data", c.data},
              {"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"train_count", c.train_count},
              {"test_count", c.test_count},
              {"model", c.model}});
  } else if (c.subcommand == "verify") {
    j.update({{"networks", c.networks}, {"steps", c.steps}, {"size_cap", c.size_cap}, {"inject_bug", c.inject_bug}});
  } else {
    j.update({{"model", c.model},
              {"data", c.data},
              {"layers", c.layers},
              {"methods", c.methods},
              {"steps", c.steps},
              {"rule", c.rule},
              {"target", c.target},
              {"examples", c.examples},
              {"offset", c.offset},
              {"size_cap", c.size_cap},
              {"batch_examples", c.batch_examples},
              {"format", c.format},
              {"reference", "zero"}});
    if (c.subcommand == "ablate") j["fraction"] = c.fraction;
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw CliError(kIo, "cannot write '" + path.string() + "'");
}

fs::path prepare_out(const RunConfig& c) {
  const fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw CliError(kIo, "cannot create output directory '" + c.out + "'");
  write_text(out / "config-echo.json", echo(c).dump(2) + "\n");
  return out;
}

QuadratureRule parse_rule(const std::string& rule) {
  return rule == "trapezoid" ? QuadratureRule::kTrapezoid : QuadratureRule::kRightRiemann;
}

TargetSpec parse_target(const std::string& text, Index output_dim) {
  if (text == "top") return TargetSpec::top_logit_minus_mean();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string kind = text.substr(0, colon);
    Index cls = -1;
    try {
      cls = std::stol(text.substr(colon + 1));
    } catch (const std::exception&) {
    }
    if (cls < 0 || cls >= output_dim) {
      throw CliError(kUsage, "target class must lie in [0, " + std::to_string(output_dim) + "): '" + text + "'");
    }
    if (kind == "logit") return TargetSpec::logit(cls);
    if (kind == "logit-mean") return TargetSpec::logit_minus_mean(cls);
  }
  throw CliError(kUsage, "unknown target '" + text + "'; expected top, logit:<class> or logit-mean:<class>");
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  static const std::vector<std::string> kAll{"nig", "ig", "deeplift-default", "deeplift-rescale", "gradxdiff"};
  std::vector<Method> out;
  auto add = [&](Method m) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  };
  for (const auto& name : names) {
    if (name == "all") {
      for (const auto& n : kAll) add(*parse_method(n));
      continue;
    }
    const auto m = parse_method(name);
    if (!m) {
      throw CliError(kUsage, "unknown method '" + name +
                                 "'; known methods: all, nig, ig, conductance, gradxdiff, deeplift-rescale, "
                                 "deeplift-default");
    }
    add(*m);
  }
  return out;
}

bool integrates(Method m) {
  return m == Method::kNeuronIntegratedGradients || m == Method::kIntegratedGradients ||
         m == Method::kConductanceDirect;
}

// Every (method, steps) pair; methods without a path use one entry.
std::vector<MethodConfig> method_configs(const RunConfig& c, const std::vector<Method>& methods) {
  std::vector<MethodConfig> out;
  for (Method m : methods) {
    if (integrates(m)) {
      for (Index n : c.steps) out.push_back({m, n, parse_rule(c.rule)});
    } else {
      out.push_back({m, 1, parse_rule(c.rule)});
    }
  }
  return out;
}

Network load_network(const RunConfig& c) {
  if (c.model.empty()) throw CliError(kUsage, "--model is required");
  try {
    return load_model_file(c.model);
  } catch (const ModelIoError& e) {
    throw CliError(kIo, e.what());
  } catch (const ModelFormatError& e) {
    throw CliError(kIo, std::string("invalid model file: ") + e.what());
  }
}

LabeledDataset load_split(const std::string& dir, bool train) {
  if (dir.empty()) throw CliError(kUsage, "--data is required");
  const fs::path base(dir);
  const std::string prefix = train ? "train" : "t10k";
  try {
    return load_idx(base / (prefix + "-images-idx3-ubyte"), base / (prefix + "-labels-idx1-ubyte"));
  } catch (const IdxFormatError& e) {
    throw CliError(kIo, std::string("dataset: ") + e.what());
  }
}

std::vector<Tensor> select_examples(const RunConfig& c, const LabeledDataset& data) {
  if (c.offset < 0 || c.examples < 1 || c.offset + c.examples > data.size()) {
    throw CliError(kUsage, "examples [" + std::to_string(c.offset) + ", " + std::to_string(c.offset + c.examples) +
                               ") are outside the " + std::to_string(data.size()) + "-image test split");
  }
  return std::vector<Tensor>(data.samples.begin() + c.offset, data.samples.begin() + c.offset + c.examples);
}

void check_layers(const Network& net, const std::vector<std::string>& layers) {
  for (const auto& l : layers) net.slot(l);  // throws with the known names
}

int threads_for(const RunConfig& c) { return c.batch_examples ? worker_count() : 1; }

// ---------------------------------------------------------------- train

int cmd_train(const RunConfig& c) {
  const fs::path out = prepare_out(c);
  // Both splits load before anything is written besides the config echo.
  const LabeledDataset train = load_split(c.data, true).head(c.train_count);
  const LabeledDataset test = load_split(c.data, false).head(c.test_count);
  if (train.empty()) throw CliError(kIo, "training split is empty");

  TrainConfig tc;
  tc.epochs = c.epochs;
  tc.learning_rate = c.learning_rate;
  tc.batch_size = c.batch_size;
  tc.seed = c.seed;
  json epochs = json::array();
  const auto start = std::chrono::steady_clock::now();
  Network model;
  try {
    model = train_sgd(reference_mnist_net(c.seed), train, tc, [&](const EpochStats& s) {
      std::fprintf(stderr, "epoch %d: loss %.4f train accuracy %.4f\n", s.epoch + 1, s.mean_loss, s.train_accuracy);
      epochs.push_back({{"epoch", s.epoch + 1}, {"mean_loss", s.mean_loss}, {"train_accuracy", s.train_accuracy}});
    });
  } catch (const DivergenceError& e) {
    throw CliError(kNumeric, e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double test_acc = accuracy(model, test);

  const fs::path model_path = c.model.empty() ? out / "model.nattr" : fs::path(c.model);
  try {
    save_model_file(model, model_path);
  } catch (const ModelIoError& e) {
    throw CliError(kIo, e.what());
  }
  json metrics{{"train_examples", train.size()},
               {"test_examples", test.size()},
               {"test_accuracy", test_acc},
               {"train_seconds", seconds},
               {"epochs", epochs},
               {"model", model_path.string()}};
  write_text(out / "metrics.json", metrics.dump(2) + "\n");
  std::printf("test accuracy %.4f on %ld images (%.1f s); model written to %s\n", test_acc,
              static_cast<long>(test.size()), seconds, model_path.string().c_str());
  return kOk;
}

// ------------------------------------------------------------ attribute

int cmd_attribute(const RunConfig& c) {
  const Network net = load_network(c);
  if (c.layers.empty()) throw CliError(kUsage, "--layer is required");
  check_layers(net, c.layers);
  const auto configs = method_configs(c, parse_methods(c.methods));
  const TargetSpec target = parse_target(c.target, net.output_dim());
  const fs::path out = prepare_out(c);
  const auto inputs = select_examples(c, load_split(c.data, false));
  const Tensor reference(net.input_shape());

  // Rows per example, merged in example order.
  std::vector<std::vector<ScoreRow>> rows(inputs.size());
  parallel_for(
      static_cast<Index>(inputs.size()),
      [&](Index e) {
        const Tensor& x = inputs[static_cast<std::size_t>(e)];
        for (const auto& mc : configs) {
          for (const auto& layer : c.layers) {
            if (mc.method == Method::kIntegratedGradients && &layer != &c.layers.front()) continue;
            const PathSpec path{reference, x, mc.steps, mc.rule};
            AttributionResult r;
            switch (mc.method) {
              case Method::kNeuronIntegratedGradients:
                r = neuron_integrated_gradients(net, path, layer, target);
                break;
              case Method::kIntegratedGradients:
                r = integrated_gradients(net, path, target);
                break;
              case Method::kConductanceDirect:
                r = total_conductance_direct(net, path, layer, target, c.size_cap);
                break;
              case Method::kGradXDiff:
                r = grad_x_diff(net, path, layer, target);
                break;
              case Method::kDeepLiftRescale:
              case Method::kDeepLiftDefault:
                r = deeplift_attribute(net, reference, x, layer, target,
                                       mc.method == Method::kDeepLiftRescale ? DeepLiftRules::kRescaleAll
                                                                             : DeepLiftRules::kDefaultMixed);
                break;
            }
            if (!r.scores.all_finite()) throw CliError(kNumeric, mc.label() + " produced non-finite scores");
            auto batch = score_rows(r, c.offset + e);
            for (auto& row : batch) row.method = mc.label();
            auto& dst = rows[static_cast<std::size_t>(e)];
            dst.insert(dst.end(), batch.begin(), batch.end());
          }
        }
      },
      threads_for(c));

  std::vector<ScoreRow> all;
  for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
  const bool as_json = c.format == "json";
  const fs::path file = out / (as_json ? "scores.json" : "scores.csv");
  try {
    write_scores(all, file, as_json ? OutputFormat::kJson : OutputFormat::kCsv);
  } catch (const OutputError& e) {
    throw CliError(kIo, e.what());
  }
  std::printf("wrote %zu scores to %s\n", all.size(), file.string().c_str());
  return kOk;
}

// --------------------------------------------------------------- ablate

int cmd_ablate(const RunConfig& c) {
  const Network net = load_network(c);
  const std::vector<std::string> layers = c.layers.empty() ? std::vector<std::string>{"conv1", "conv2"} : c.layers;
  check_layers(net, layers);
  std::vector<Method> methods;
  for (Method m : parse_methods(c.methods)) {
    if (m == Method::kIntegratedGradients) {
      std::fprintf(stderr, "note: ig attributes input pixels, not layer neurons; left out of the ablation study\n");
      continue;
    }
    methods.push_back(m);
  }
  if (methods.empty()) throw CliError(kUsage, "no layer-level method selected");
  const auto configs = method_configs(c, methods);
  AblationSpec spec;
  spec.fraction = c.fraction;
  spec.target = parse_target(c.target, net.output_dim());
  try {
    for (const auto& l : layers) selection_size(net.slot_size(net.slot(l)), c.fraction);
  } catch (const std::invalid_argument& e) {
    throw CliError(kUsage, e.what());
  }
  const fs::path out = prepare_out(c);
  const auto inputs = select_examples(c, load_split(c.data, false));
  const Tensor reference(net.input_shape());

  json studies = json::array();
  std::string mae_csv = "layer,method,mae,count,failures\n";
  Index failures = 0;
  std::string first_failure;
  for (const auto& layer : layers) {
    spec.layer = layer;
    AblationReport report = run_ablation_study(net, inputs, reference, spec, configs, threads_for(c));
    for (auto& rec : report.records) rec.example_id += c.offset;
    for (const auto& rec : report.records) {
      if (rec.failed && first_failure.empty()) {
        first_failure = layer + " example " + std::to_string(rec.example_id) + ": " + rec.diagnostic;
      }
    }
    failures += report.failures;
    studies.push_back(json::parse(report_json(report)));
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
      mae_csv += layer + "," + report.methods[m] + "," + format_real(report.mae[m]) + "," +
                 std::to_string(report.count) + "," + std::to_string(report.failures) + "\n";
      std::printf("%-8s %-20s MAE %.6g  (n=%ld, failed=%ld)\n", layer.c_str(), report.methods[m].c_str(),
                  report.mae[m], static_cast<long>(report.count), static_cast<long>(report.failures));
    }
    try {
      write_report(report, out / ("report-" + layer + ".csv"), OutputFormat::kCsv);
    } catch (const OutputError& e) {
      throw CliError(kIo, e.what());
    }
  }
  write_text(out / "report.json", json{{"studies", studies}}.dump(1) + "\n");
  write_text(out / "mae.csv", mae_csv);
  if (failures > 0) {
    throw CliError(kNumeric, std::to_string(failures) + " example(s) failed; first: " + first_failure);
  }
  return kOk;
}

// ---------------------------------------------------------------- bench

int cmd_bench(const RunConfig& c) {
  const Network net = load_network(c);
  const std::string layer = c.layers.empty() ? "conv2" : c.layers.front();
  check_layers(net, {layer});
  const std::vector<Method> methods = parse_methods(c.methods);
  const TargetSpec target = parse_target(c.target, net.output_dim());
  const fs::path out = prepare_out(c);
  const auto inputs = select_examples(c, load_split(c.data, false));
  const Tensor reference(net.input_shape());

  std::string csv = "method,steps,examples,forward_passes,gradient_passes,multiplier_passes,tangent_passes,"
                    "wall_seconds,seconds_per_example\n";
  std::vector<double> nig_steps, nig_seconds;
  for (Method m : methods) {
    const std::vector<Index> steps = integrates(m) ? c.steps : std::vector<Index>{1};
    for (Index n : steps) {
      EvalCounts counts;
      const auto start = std::chrono::steady_clock::now();
      for (const Tensor& x : inputs) {
        const PathSpec path{reference, x, n, parse_rule(c.rule)};
        AttributionResult r;
        switch (m) {
          case Method::kNeuronIntegratedGradients:
            r = neuron_integrated_gradients(net, path, layer, target);
            break;
          case Method::kIntegratedGradients:
            r = integrated_gradients(net, path, target);
            break;
          case Method::kConductanceDirect:
            r = total_conductance_direct(net, path, layer, target, c.size_cap);
            break;
          case Method::kGradXDiff:
            r = grad_x_diff(net, path, layer, target);
            break;
          case Method::kDeepLiftRescale:
          case Method::kDeepLiftDefault:
            r = deeplift_attribute(net, reference, x, layer, target,
                                   m == Method::kDeepLiftRescale ? DeepLiftRules::kRescaleAll
                                                                 : DeepLiftRules::kDefaultMixed);
            break;
        }
        counts += r.counts;
      }
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const auto count = static_cast<double>(inputs.size());
      csv += std::string(method_name(m)) + "," + std::to_string(integrates(m) ? n : 0) + "," +
             std::to_string(inputs.size()) + "," + std::to_string(counts.forward_passes) + "," +
             std::to_string(counts.gradient_passes) + "," + std::to_string(counts.multiplier_passes) + "," +
             std::to_string(counts.tangent_passes) + "," + format_real(seconds) + "," +
             format_real(seconds / count) + "\n";
      std::printf("%-18s n=%-5ld forwards %-7ld gradients %-7ld multipliers %-4ld  %.4f s/example\n",
                  std::string(method_name(m)).c_str(), static_cast<long>(integrates(m) ? n : 0),
                  static_cast<long>(counts.forward_passes), static_cast<long>(counts.gradient_passes),
                  static_cast<long>(counts.multiplier_passes), seconds / count);
      if (m == Method::kNeuronIntegratedGradients) {
        nig_steps.push_back(static_cast<double>(n));
        nig_seconds.push_back(seconds / count);
      }
    }
  }
  write_text(out / "bench.csv", csv);
  if (nig_steps.size() >= 2) {
    try {
      const LinearFit fit = least_squares(nig_steps, nig_seconds);
      std::printf("nig time vs n: slope %.6g s/step, intercept %.6g s, R^2 %.6f\n", fit.slope, fit.intercept,
                  fit.r_squared);
      write_text(out / "bench-fit.json",
                 json{{"method", "nig"}, {"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}}
                         .dump(2) +
                     "\n");
    } catch (const std::invalid_argument&) {
    }
  }
  return kOk;
}

// --------------------------------------------------------------- verify

int cmd_verify(const RunConfig& c) {
  if (!c.inject_bug.empty() && c.inject_bug != "skip-differencing") {
    throw CliError(kUsage, "unknown injected bug '" + c.inject_bug + "'; known: skip-differencing");
  }
  const fs::path out = prepare_out(c);
  VerifyConfig vc;
  vc.networks = c.networks;
  vc.seed = c.seed;
  vc.steps = c.steps.front();
  vc.size_cap = c.size_cap;
  vc.skip_differencing = !c.inject_bug.empty();
  vc.threads = worker_count();
  const auto results = run_verify(vc);
  json j = json::array();
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-22s %s  worst %.3e  tolerance %.1e  cases %ld  [%s]\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                r.worst_error, r.tolerance, static_cast<long>(r.cases), r.detail.c_str());
    j.push_back({{"property", r.name},
                 {"passed", r.passed},
                 {"worst_error", r.worst_error},
                 {"tolerance", r.tolerance},
                 {"cases", r.cases},
                 {"detail", r.detail}});
    ok = ok && r.passed;
  }
  write_text(out / "verify.json", j.dump(2) + "\n");
  if (!ok) throw CliError(kNumeric, "one or more properties failed");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nattr: neuron attribution toolkit"};
  app.require_subcommand(1);
  RunConfig c;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", c.model, "Model file");
    sub->add_option("--data", c.data, "Directory with the MNIST IDX files");
    sub->add_option("--layer", c.layers, "Layer name(s)")->delimiter(',');
    sub->add_option("--method", c.methods, "Method(s) or 'all'")->delimiter(',')->capture_default_str();
    sub->add_option("--steps", c.steps, "Interpolation steps (comma list)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--rule", c.rule, "Quadrature rule")->check(CLI::IsMember({"right", "trapezoid"}))->capture_default_str();
    sub->add_option("--target", c.target, "top | logit:<c> | logit-mean:<c>")->capture_default_str();
    sub->add_option("--examples", c.examples, "Number of test images")->capture_default_str();
    sub->add_option("--offset", c.offset, "First test image")->capture_default_str();
    sub->add_option("--size-cap", c.size_cap, "Input-size cap for the conductance oracle")->capture_default_str();
    sub->add_flag("--batch-examples", c.batch_examples, "Spread examples over NATTR_THREADS workers");
    add_common(sub);
  };

  auto* train = app.add_subcommand("train", "Train the reference MNIST network");
  train->add_option("--data", c.data, "Directory with the MNIST IDX files")->required();
  train->add_option("--model", c.model, "Model output path (default <out>/model.nattr)");
  train->add_option("--epochs", c.epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--lr", c.learning_rate)->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--batch-size", c.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--train-count", c.train_count)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--test-count", c.test_count)->check(CLI::PositiveNumber)->capture_default_str();
  add_common(train);

  auto* attribute = app.add_subcommand("attribute", "Write per-neuron attribution scores");
  add_model(attribute);
  attribute->add_option("--format", c.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "Run the neuron ablation study");
  add_model(ablate);
  ablate->add_option("--fraction", c.fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Time methods across step counts");
  add_model(bench);

  auto* verify = app.add_subcommand("verify", "Run the property suites on generated networks");
  verify->add_option("--networks", c.networks)->check(CLI::PositiveNumber)->capture_default_str();
  verify->add_option("--steps", c.steps, "Interpolation steps")->check(CLI::PositiveNumber);
  verify->add_option("--size-cap", c.size_cap)->capture_default_str();
  verify->add_option("--inject-bug", c.inject_bug, "Negative control: skip-differencing");
  add_common(verify);

  // Defaults that differ per subcommand.
  ablate->preparse_callback([&](std::size_t) {
    c.methods = {"nig", "deeplift-default", "deeplift-rescale", "gradxdiff"};
    c.steps = {10, 100};
    c.examples = 200;
  });
  bench->preparse_callback([&](std::size_t) {
    c.methods = {"nig", "deeplift-default", "deeplift-rescale", "gradxdiff"};
    c.steps = {10, 20, 50, 100};
    c.examples = 3;
  });
  verify->preparse_callback([&](std::size_t) {
    c.steps = {2000};
    c.seed = 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  for (auto* sub : app.get_subcommands()) c.subcommand = sub->get_name();
  if (c.steps.empty()) c.steps = {50};

  try {
    if (c.subcommand == "train") return cmd_train(c);
    if (c.subcommand == "attribute") return cmd_attribute(c);
    if (c.subcommand == "ablate") return cmd_ablate(c);
    if (c.subcommand == "bench") return cmd_bench(c);
    if (c.subcommand == "verify") return cmd_verify(c);
  } catch (const CliError& e) {
    std::fprintf(stderr, "nattr %s: %s\n", c.subcommand.c_str(), e.what());
    return e.code;
  } catch (const UnknownLayerError& e) {
    std::fprintf(stderr, "nattr %s: %s\n", c.subcommand.c_str(), e.what());
    return kUsage;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "nattr %s: %s\n", c.subcommand.c_str(), e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "nattr %s: %s\n", c.subcommand.c_str(), e.what());
    return kNumeric;
  }
  return kUsage;
}
