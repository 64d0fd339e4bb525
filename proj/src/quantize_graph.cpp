// SPDX-License-Identifier: Apache-2.0
#include "qfs/qgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace qfs {

std::string_view to_string(StepKind k) {
  switch (k) {
    case StepKind::conv2d: return "conv2d";
    case StepKind::depthwise_conv2d: return "depthwise_conv2d";
    case StepKind::activation: return "activation";
    case StepKind::avg_pool: return "avg_pool";
  }
  return "conv2d";
}

StepKind parse_step_kind(std::string_view s) {
  for (auto k : {StepKind::conv2d, StepKind::depthwise_conv2d,
                 StepKind::activation, StepKind::avg_pool}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown step kind '" + std::string(s) + "'");
}

Calibration calibrate(const GraphSpec& g,
                      std::span<const FloatTensor> inputs) {
  if (inputs.empty()) {
    throw std::invalid_argument("calibration set is empty");
  }
  Calibration cal;
  cal.layers.resize(g.layers.size());
  for (const auto& x : inputs) {
    cal.input = cal.input.observe(x);
    const auto run = run_float(g, x);
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
      cal.layers[i] = cal.layers[i].observe(run.activations[i]);
    }
  }
  return cal;
}

namespace {

QuantParams weight_params(const FloatTensor& w, int bits) {
  const auto d = w.data();
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  return params_for_range(*lo, *hi, bits);
}

}  // namespace

QuantModel quantize_graph(const GraphSpec& graph,
                          std::span<const FloatTensor> calibration,
                          const QuantizeOptions& opts) {
  if (calibration.empty()) {
    throw std::invalid_argument("calibration set is empty");
  }
  const GraphSpec g =
      opts.remediate
          ? remediate_graph(graph, opts.threshold, opts.remediate_all_bn)
          : graph;
  g.infer_shapes();
  const Calibration cal = calibrate(g, calibration);

  QuantModel m;
  m.name = g.name;
  m.input_shape = g.input_shape;
  m.bits = opts.bits;
  m.input_params = cal.input.params(opts.bits);

  QuantParams current = m.input_params;
  const auto& layers = g.layers;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    QuantStep step;
    step.name = l.name;
    switch (l.kind) {
      case LayerKind::conv2d:
      case LayerKind::pointwise_conv2d:
      case LayerKind::depthwise_conv2d: {
        step.kind = l.kind == LayerKind::depthwise_conv2d
                        ? StepKind::depthwise_conv2d
                        : StepKind::conv2d;
        step.conv = l.conv;
        FloatTensor w = *l.weights;
        std::vector<float> bias = l.bias;
        std::size_t last = i;
        if (last + 1 < layers.size() &&
            layers[last + 1].kind == LayerKind::batchnorm) {
          if (!opts.fold_bn) {
            throw std::invalid_argument(
                "batch-norm layer '" + layers[last + 1].name +
                "' must be folded for fixed-point execution");
          }
          const auto folded = fold_bn(*layers[last + 1].bn);
          auto fw = fold_into_weights(w, folded, bias);
          w = std::move(fw.weights);
          bias = std::move(fw.bias);
          step.alpha = folded.alpha;
          ++last;
        }
        if (last + 1 < layers.size() &&
            layers[last + 1].kind == LayerKind::activation) {
          step.activation = layers[last + 1].activation;
          ++last;
        }
        const auto wp = weight_params(w, opts.bits);
        step.weights = quantize_tensor(w, wp);
        step.bias = quantize_bias(bias, current, wp);
        step.out_params = cal.layers[last].params(opts.bits);
        step.source_layer = layers[last].name;
        i = last;
        break;
      }
      case LayerKind::batchnorm:
        throw std::invalid_argument("batch-norm layer '" + l.name +
                                    "' does not follow a conv and cannot be "
                                    "folded for fixed-point execution");
      case LayerKind::activation:
        step.kind = StepKind::activation;
        step.activation = l.activation;
        step.out_params = current;
        step.source_layer = l.name;
        break;
      case LayerKind::avg_pool:
        step.kind = StepKind::avg_pool;
        step.pool_h = l.pool_h;
        step.pool_w = l.pool_w;
        step.out_params = current;
        step.source_layer = l.name;
        break;
      case LayerKind::softmax:
        m.softmax = true;
        continue;
    }
    current = step.out_params;
    m.steps.push_back(std::move(step));
  }
  return m;
}

QuantRun run_quant(const QuantModel& m, const FloatTensor& input) {
  if (!(input.shape() == m.input_shape)) {
    throw std::invalid_argument("input shape " + input.shape().str() +
                                " does not match model input " +
                                m.input_shape.str());
  }
  std::vector<QuantTensor> acts;
  acts.reserve(m.steps.size());
  QuantTensor cur = quantize_tensor(input, m.input_params);
  for (const auto& s : m.steps) {
    switch (s.kind) {
      case StepKind::conv2d:
      case StepKind::depthwise_conv2d: {
        if (!s.weights) {
          throw std::invalid_argument("step '" + s.name + "' has no weights");
        }
        const auto rq =
            RequantSpec::make(cur.params(), s.weights->params(), s.out_params);
        cur = s.kind == StepKind::conv2d
                  ? quantized_conv2d(cur, *s.weights, s.bias, s.conv, rq)
                  : quantized_depthwise_conv2d(cur, *s.weights, s.bias,
                                               s.conv, rq);
        cur = activation_quant(cur, s.activation);
        break;
      }
      case StepKind::activation:
        cur = activation_quant(cur, s.activation);
        break;
      case StepKind::avg_pool:
        cur = avg_pool_quant(cur, s.pool_h == 0 ? cur.shape().h : s.pool_h,
                             s.pool_w == 0 ? cur.shape().w : s.pool_w);
        break;
    }
    acts.push_back(cur);
  }
  FloatTensor logits = dequantize_tensor(cur);
  FloatTensor output = m.softmax ? softmax_float(logits) : logits;
  return {std::move(acts), std::move(logits), std::move(output)};
}

namespace {

std::string params_line(const std::string& label, const QuantParams& p) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s min=%.9g max=%.9g delta=%.9g offset=%d",
                label.c_str(), p.x_min, p.x_max, p.delta, p.offset);
  return buf;
}

}  // namespace

std::vector<std::string> summarize(const QuantModel& m) {
  std::vector<std::string> lines;
  lines.push_back(params_line("activation input", m.input_params));
  for (const auto& s : m.steps) {
    if (s.weights) {
      auto line = params_line("weights " + s.name, s.weights->params());
      if (!s.alpha.empty()) {
        float peak = 0.0f;
        for (float a : s.alpha) peak = std::max(peak, std::fabs(a));
        char buf[64];
        std::snprintf(buf, sizeof(buf), " max_abs_alpha=%.9g", peak);
        line += buf;
      }
      lines.push_back(std::move(line));
    }
    lines.push_back(params_line("activation " + s.source_layer, s.out_params));
  }
  return lines;
}

}  // namespace qfs
