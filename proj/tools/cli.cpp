// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qfs/builder.hpp"
#include "qfs/modelio.hpp"
#include "qfs/random.hpp"
#include "qfs/sqnr.hpp"

namespace qfs::cli {

namespace {

struct BuildArgs {
  std::string arch = "mobilenet-v1";
  std::string variant = "c";
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::int64_t> num_classes;
  std::optional<std::int64_t> input_size;
  std::int64_t channels = 10;
  bool dead_channels = false;
};

struct QuantizeArgs {
  std::string model;
  std::string calib;
  std::optional<std::size_t> seeded;
  std::uint64_t seed = 0;
  int bits = kDefaultBits;
  bool no_fold_bn = false;
  bool remediate = false;
  bool remediate_all_bn = false;
  float threshold = kDefaultZeroVarianceThreshold;
  std::string out;
};

struct InferArgs {
  std::string model;
  std::string input;
  std::optional<std::uint64_t> seeded_input;
  std::string pipeline;
  std::size_t top_k = 5;
};

struct ProfileArgs {
  std::string float_model;
  std::string quant_model;
  std::string inputs;
  std::optional<std::size_t> seeded;
  std::uint64_t seed = 0;
  std::string csv;
  std::string json;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<FloatTensor> dataset(const std::string& dir,
                                 std::optional<std::size_t> seeded,
                                 std::uint64_t seed, const Shape& shape) {
  if (!dir.empty()) return load_input_dir(dir);
  return seeded_inputs(shape, *seeded, seed);
}

int cmd_build(const BuildArgs& a, std::ostream& out) {
  GraphSpec g;
  if (a.arch == "identity") {
    g = build_identity_net(a.channels);
  } else {
    const auto variant = parse_variant(a.variant);
    auto opts = a.arch == "desk" ? desk_net_options(variant)
                                 : mobilenet_v1_options(variant);
    opts.seed = a.seed;
    opts.dead_channels = a.dead_channels;
    if (a.num_classes) opts.num_classes = *a.num_classes;
    if (a.input_size) opts.input_size = *a.input_size;
    g = build_separable_net(opts);
  }
  save_model(g, a.out);
  out << "wrote " << g.name << " (" << g.layers.size() << " layers) to "
      << a.out << "\n";
  return kExitOk;
}

int cmd_quantize(const QuantizeArgs& a, std::ostream& out) {
  const auto g = load_float_model(a.model);
  const auto calib = dataset(a.calib, a.seeded, a.seed, g.input_shape);
  if (calib.empty()) throw std::invalid_argument("calibration set is empty");
  QuantizeOptions opts;
  opts.bits = a.bits;
  opts.fold_bn = !a.no_fold_bn;
  opts.remediate = a.remediate || a.remediate_all_bn;
  opts.remediate_all_bn = a.remediate_all_bn;
  opts.threshold = a.threshold;
  const auto qm = quantize_graph(g, calib, opts);
  save_model(qm, a.out);
  for (const auto& line : summarize(qm)) out << line << "\n";
  return kExitOk;
}

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const auto model = load_model(a.model);
  const bool is_float = std::holds_alternative<GraphSpec>(model);
  const std::string pipeline =
      a.pipeline.empty() ? (is_float ? "float" : "quant") : a.pipeline;
  if ((pipeline == "float") != is_float) {
    throw std::invalid_argument("pipeline '" + pipeline +
                                "' does not match the " +
                                (is_float ? "float" : "quantized") +
                                " model in '" + a.model + "'");
  }
  const Shape shape = is_float ? std::get<GraphSpec>(model).input_shape
                               : std::get<QuantModel>(model).input_shape;
  const FloatTensor x = a.input.empty()
                            ? seeded_inputs(shape, 1, *a.seeded_input)[0]
                            : load_tensor(a.input);
  const FloatTensor y = is_float
                            ? run_float(std::get<GraphSpec>(model), x).output()
                            : run_quant(std::get<QuantModel>(model), x).output;
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return y[i] > y[j]; });
  const auto k = std::min(a.top_k, order.size());
  for (std::size_t r = 0; r < k; ++r) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu %.9g", order[r], y[order[r]]);
    out << buf << "\n";
  }
  return kExitOk;
}

int cmd_profile(const ProfileArgs& a, std::ostream& out) {
  const auto g = load_float_model(a.float_model);
  const auto qm = load_quant_model(a.quant_model);
  std::optional<std::size_t> seeded = a.seeded;
  if (a.inputs.empty() && !seeded) seeded = 1000;
  const auto inputs = dataset(a.inputs, seeded, a.seed, g.input_shape);
  const auto report = profile_per_layer(g, qm, inputs);
  const auto csv = report.to_csv();
  if (!a.csv.empty()) write_text(a.csv, csv);
  if (!a.json.empty()) write_text(a.json, report.to_json());
  out << csv;
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Fixed-point inference and quantization-noise profiling",
               "qfsc"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Write a seeded random-weight model");
  b->add_option("--arch", build.arch, "Network: mobilenet-v1, desk or identity")
      ->check(CLI::IsMember({"mobilenet-v1", "desk", "identity"}))
      ->capture_default_str();
  b->add_option("--variant", build.variant,
                "Core layer: a (standard), b (separable), c (quant-friendly)")
      ->check(CLI::IsMember({"a", "b", "c"}))
      ->capture_default_str();
  b->add_option("--seed", build.seed, "Parameter seed")->capture_default_str();
  b->add_option("--out", build.out, "Output model directory")->required();
  b->add_option("--num-classes", build.num_classes, "Classifier outputs")
      ->check(CLI::PositiveNumber);
  b->add_option("--input-size", build.input_size, "Input height and width")
      ->check(CLI::PositiveNumber);
  b->add_option("--channels", build.channels, "Width of the identity net")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  b->add_flag("--dead-channels", build.dead_channels,
              "Kill one channel feeding every depthwise conv");

  QuantizeArgs quant;
  auto* q = app.add_subcommand("quantize", "Quantize a float model");
  q->add_option("--model", quant.model, "Float model directory")->required();
  auto* calib = q->add_option("--calib", quant.calib,
                              "Directory of calibration tensor blobs");
  auto* qseeded = q->add_option("--seeded", quant.seeded,
                                "Calibrate on N seeded random inputs")
                      ->check(CLI::PositiveNumber);
  calib->excludes(qseeded);
  q->add_option("--seed", quant.seed, "Seed for --seeded")->capture_default_str();
  q->add_option("--bits", quant.bits, "Bit-width")
      ->check(CLI::Range(kMinBits, kMaxBits))
      ->capture_default_str();
  q->add_flag("--no-fold-bn", quant.no_fold_bn, "Keep batch-norm unfolded");
  q->add_flag("--remediate-zero-variance", quant.remediate,
              "Replace zero variances after depthwise convs by the donor mean");
  q->add_flag("--remediate-all-bn", quant.remediate_all_bn,
              "Remediate every batch-norm layer");
  q->add_option("--threshold", quant.threshold, "Zero-variance threshold")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  q->add_option("--out", quant.out, "Output model directory")->required();

  InferArgs infer;
  auto* i = app.add_subcommand("infer", "Classify one input");
  i->add_option("--model", infer.model, "Model directory")->required();
  auto* input = i->add_option("--input", infer.input, "Input tensor blob");
  auto* seeded_input = i->add_option("--seeded-input", infer.seeded_input,
                                     "Use the seeded random input with this seed");
  input->excludes(seeded_input);
  i->add_option("--pipeline", infer.pipeline,
                "float or quant (default: the model's own)")
      ->check(CLI::IsMember({"float", "quant"}));
  i->add_option("--top-k", infer.top_k, "Number of classes to print")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  ProfileArgs prof;
  auto* p = app.add_subcommand("profile-sqnr", "Per-layer SQNR report");
  p->add_option("--float-model", prof.float_model, "Float model directory")
      ->required();
  p->add_option("--quant-model", prof.quant_model, "Quantized model directory")
      ->required();
  auto* inputs = p->add_option("--inputs", prof.inputs,
                               "Directory of input tensor blobs");
  auto* pseeded = p->add_option("--seeded", prof.seeded,
                                "Use N seeded random inputs (default 1000)")
                     ->check(CLI::PositiveNumber);
  inputs->excludes(pseeded);
  p->add_option("--seed", prof.seed, "Seed for --seeded")->capture_default_str();
  p->add_option("--csv", prof.csv, "CSV report path");
  p->add_option("--json", prof.json, "JSON report path");

  try {
    app.parse(argc, argv);
    if (q->parsed() && quant.calib.empty() && !quant.seeded) {
      throw CLI::RequiredError("--calib or --seeded");
    }
    if (i->parsed() && infer.input.empty() && !infer.seeded_input) {
      throw CLI::RequiredError("--input or --seeded-input");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (b->parsed()) return cmd_build(build, out);
    if (q->parsed()) return cmd_quantize(quant, out);
    if (i->parsed()) return cmd_infer(infer, out);
    return cmd_profile(prof, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace qfs::cli
