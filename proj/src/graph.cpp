// SPDX-License-Identifier: Apache-2.0
#include "qfs/graph.hpp"

#include <stdexcept>

namespace qfs {

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::depthwise_conv2d: return "depthwise_conv2d";
    case LayerKind::pointwise_conv2d: return "pointwise_conv2d";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::activation: return "activation";
    case LayerKind::avg_pool: return "avg_pool";
    case LayerKind::softmax: return "softmax";
  }
  return "activation";
}

LayerKind parse_layer_kind(std::string_view s) {
  for (auto k : {LayerKind::conv2d, LayerKind::depthwise_conv2d,
                 LayerKind::pointwise_conv2d, LayerKind::batchnorm,
                 LayerKind::activation, LayerKind::avg_pool,
                 LayerKind::softmax}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown layer kind '" + std::string(s) + "'");
}

bool is_conv(LayerKind k) {
  return k == LayerKind::conv2d || k == LayerKind::depthwise_conv2d ||
         k == LayerKind::pointwise_conv2d;
}

namespace {

[[noreturn]] void layer_error(const LayerSpec& l, const std::string& what) {
  throw std::invalid_argument("layer '" + l.name + "': " + what);
}

Shape layer_output_shape(const LayerSpec& l, const Shape& in,
                         bool last) {
  if (l.kind == LayerKind::softmax && !last) {
    layer_error(l, "softmax must be the final layer");
  }
  switch (l.kind) {
    case LayerKind::conv2d:
    case LayerKind::pointwise_conv2d: {
      if (!l.weights) layer_error(l, "missing weights");
      const Shape& ws = l.weights->shape();
      if (ws.n != l.conv.kernel_h || ws.h != l.conv.kernel_w || ws.w != in.c) {
        layer_error(l, "weights " + ws.str() + " inconsistent with input " +
                           in.str());
      }
      if (l.kind == LayerKind::pointwise_conv2d &&
          (ws.n != 1 || ws.h != 1)) {
        layer_error(l, "pointwise conv must use a 1x1 kernel");
      }
      if (!l.bias.empty() && static_cast<std::int64_t>(l.bias.size()) != ws.c) {
        layer_error(l, "bias length mismatch");
      }
      const auto g = l.conv.geometry(in.h, in.w);
      return {in.n, g.out_h, g.out_w, ws.c};
    }
    case LayerKind::depthwise_conv2d: {
      if (!l.weights) layer_error(l, "missing weights");
      const Shape& ws = l.weights->shape();
      if (ws.n != 1 || ws.h != l.conv.kernel_h || ws.w != l.conv.kernel_w ||
          ws.c != in.c) {
        layer_error(l, "weights " + ws.str() + " inconsistent with input " +
                           in.str());
      }
      if (!l.bias.empty() && static_cast<std::int64_t>(l.bias.size()) != ws.c) {
        layer_error(l, "bias length mismatch");
      }
      const auto g = l.conv.geometry(in.h, in.w);
      return {in.n, g.out_h, g.out_w, in.c};
    }
    case LayerKind::batchnorm:
      if (!l.bn) layer_error(l, "missing batch-norm parameters");
      l.bn->validate();
      if (static_cast<std::int64_t>(l.bn->channels()) != in.c) {
        layer_error(l, "batch-norm channel count mismatch");
      }
      return in;
    case LayerKind::activation:
    case LayerKind::softmax:
      return in;
    case LayerKind::avg_pool: {
      const auto ph = l.pool_h == 0 ? in.h : l.pool_h;
      const auto pw = l.pool_w == 0 ? in.w : l.pool_w;
      if (ph < 1 || pw < 1 || in.h % ph != 0 || in.w % pw != 0) {
        layer_error(l, "pool window does not tile " + in.str());
      }
      return {in.n, in.h / ph, in.w / pw, in.c};
    }
  }
  layer_error(l, "unknown kind");
}

}  // namespace

std::vector<Shape> GraphSpec::infer_shapes() const {
  input_shape.validate();
  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  Shape cur = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    cur = layer_output_shape(layers[i], cur, i + 1 == layers.size());
    shapes.push_back(cur);
  }
  return shapes;
}

std::size_t GraphSpec::index_of(std::string_view layer_name) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name == layer_name) return i;
  }
  throw std::invalid_argument("graph has no layer named '" +
                              std::string(layer_name) + "'");
}

FloatTensor run_layer_float(const LayerSpec& l, const FloatTensor& input) {
  switch (l.kind) {
    case LayerKind::conv2d:
    case LayerKind::pointwise_conv2d:
      if (!l.weights) layer_error(l, "missing weights");
      return conv2d_float(input, *l.weights, l.bias, l.conv);
    case LayerKind::depthwise_conv2d:
      if (!l.weights) layer_error(l, "missing weights");
      return depthwise_conv2d_float(input, *l.weights, l.bias, l.conv);
    case LayerKind::batchnorm:
      if (!l.bn) layer_error(l, "missing batch-norm parameters");
      return batchnorm_apply_float(input, *l.bn);
    case LayerKind::activation:
      return activation_float(input, l.activation);
    case LayerKind::avg_pool:
      return avg_pool_float(input, l.pool_h == 0 ? input.shape().h : l.pool_h,
                            l.pool_w == 0 ? input.shape().w : l.pool_w);
    case LayerKind::softmax:
      return softmax_float(input);
  }
  layer_error(l, "unknown kind");
}

FloatRun run_float(const GraphSpec& g, const FloatTensor& input) {
  if (!(input.shape() == g.input_shape)) {
    throw std::invalid_argument("input shape " + input.shape().str() +
                                " does not match graph input " +
                                g.input_shape.str());
  }
  FloatRun run;
  run.activations.reserve(g.layers.size());
  const FloatTensor* cur = &input;
  for (const auto& layer : g.layers) {
    run.activations.push_back(run_layer_float(layer, *cur));
    cur = &run.activations.back();
  }
  if (run.activations.empty()) run.activations.push_back(input);
  return run;
}

GraphSpec fold_batchnorm(const GraphSpec& g) {
  GraphSpec out{g.name, g.input_shape, {}};
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& l = g.layers[i];
    if (is_conv(l.kind) && i + 1 < g.layers.size() &&
        g.layers[i + 1].kind == LayerKind::batchnorm) {
      const auto& bn = g.layers[i + 1];
      if (!l.weights || !bn.bn) layer_error(l, "missing parameters");
      auto folded = fold_into_weights(*l.weights, fold_bn(*bn.bn), l.bias);
      LayerSpec merged = l;
      merged.weights = std::move(folded.weights);
      merged.bias = std::move(folded.bias);
      out.layers.push_back(std::move(merged));
      ++i;
      continue;
    }
    out.layers.push_back(l);
  }
  return out;
}

GraphSpec remediate_graph(const GraphSpec& g, float threshold, bool all_bn) {
  GraphSpec out = g;
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    auto& l = out.layers[i];
    if (l.kind != LayerKind::batchnorm || !l.bn) continue;
    const bool after_dw =
        i > 0 && out.layers[i - 1].kind == LayerKind::depthwise_conv2d;
    if (all_bn || after_dw) {
      try {
        l.bn = remediate_zero_variance(*l.bn, threshold);
      } catch (const std::invalid_argument& e) {
        layer_error(l, e.what());
      }
    }
  }
  return out;
}

}  // namespace qfs
