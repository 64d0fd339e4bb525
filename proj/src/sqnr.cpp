// SPDX-License-Identifier: Apache-2.0
#include "qfs/sqnr.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace qfs {

namespace {

void check_same_shape(const FloatTensor& a, const FloatTensor& b) {
  if (!(a.shape() == b.shape())) {
    throw std::invalid_argument("SQNR operands differ in shape: " +
                                a.shape().str() + " vs " + b.shape().str());
  }
}

double sum_squares(const FloatTensor& t) {
  double s = 0.0;
  for (float v : t.data()) s += static_cast<double>(v) * v;
  return s;
}

double sum_squared_error(const FloatTensor& ref, const FloatTensor& test) {
  const auto r = ref.data();
  const auto x = test.data();
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = static_cast<double>(x[i]) - r[i];
    s += d * d;
  }
  return s;
}

}  // namespace

double sqnr_empirical(const FloatTensor& reference, const FloatTensor& test) {
  check_same_shape(reference, test);
  const double signal = sum_squares(reference);
  if (signal == 0.0) {
    throw std::invalid_argument("SQNR undefined: reference signal is all zero");
  }
  const double noise = sum_squared_error(reference, test);
  if (noise == 0.0) return kInfiniteSqnr;
  return 10.0 * std::log10(signal / noise);
}

double signal_power(const FloatTensor& t) {
  return sum_squares(t) / static_cast<double>(t.size());
}

double noise_power(const FloatTensor& reference, const FloatTensor& test) {
  check_same_shape(reference, test);
  return sum_squared_error(reference, test) /
         static_cast<double>(reference.size());
}

double sqnr_ceiling_db(int bits) {
  if (bits < kMinBits || bits > kMaxBits) {
    throw std::invalid_argument("bit-width outside [2, 16]");
  }
  const double levels = std::ldexp(1.0, bits) - 1.0;
  return 10.0 * std::log10(12.0 * levels * levels);
}

double sqnr_theoretical(const QuantParams& p, double power) {
  if (!(power > 0.0)) {
    throw std::invalid_argument("signal power must be positive");
  }
  const double range = static_cast<double>(p.x_max) - p.x_min;
  return sqnr_ceiling_db(p.bits) - 10.0 * std::log10(range * range / power);
}

double noise_power_theoretical(const QuantParams& p) {
  const double d = p.delta;
  return d * d / 12.0;
}

const LayerSqnr& SQNRReport::at(std::string_view layer) const {
  for (const auto& l : layers) {
    if (l.layer == layer) return l;
  }
  throw std::out_of_range("report has no layer '" + std::string(layer) + "'");
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::string SQNRReport::to_csv() const {
  std::string out =
      "layer,mean_sqnr_db,n_images,n_excluded,signal_power,noise_power,range\n";
  for (const auto& l : layers) {
    out += l.layer + "," + fmt_double(l.mean_db) + "," +
           std::to_string(l.n_images) + "," + std::to_string(l.n_excluded) +
           "," + fmt_double(l.signal_power) + "," +
           fmt_double(l.noise_power) + "," + fmt_double(l.range) + "\n";
  }
  return out;
}

std::string SQNRReport::to_json() const {
  nlohmann::json doc;
  doc["layers"] = nlohmann::json::array();
  for (const auto& l : layers) {
    nlohmann::json per_image = nlohmann::json::array();
    for (double v : l.per_image_db) per_image.push_back(finite_or_null(v));
    doc["layers"].push_back({
        {"layer", l.layer},
        {"mean_sqnr_db", finite_or_null(l.mean_db)},
        {"n_images", l.n_images},
        {"n_excluded", l.n_excluded},
        {"signal_power", l.signal_power},
        {"noise_power", l.noise_power},
        {"range", l.range},
        {"per_image_sqnr_db", std::move(per_image)},
    });
  }
  return doc.dump(2) + "\n";
}

SQNRReport profile_per_layer(const GraphSpec& float_graph,
                             const QuantModel& qm,
                             std::span<const FloatTensor> inputs) {
  if (inputs.empty()) {
    throw std::invalid_argument("profile dataset is empty");
  }
  float_graph.infer_shapes();
  if (!(float_graph.input_shape == qm.input_shape)) {
    throw std::invalid_argument("topology mismatch: input shapes differ");
  }
  std::vector<std::size_t> source(qm.steps.size());
  SQNRReport report;
  report.layers.resize(qm.steps.size());
  for (std::size_t s = 0; s < qm.steps.size(); ++s) {
    const auto& step = qm.steps[s];
    std::size_t idx = 0;
    try {
      idx = float_graph.index_of(step.source_layer);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("topology mismatch: float graph has no layer '" +
                                  step.source_layer + "'");
    }
    source[s] = idx;
    report.layers[s].layer = step.name;
    report.layers[s].range =
        static_cast<double>(step.out_params.x_max) - step.out_params.x_min;
  }

  std::vector<double> sum_db(qm.steps.size(), 0.0);
  for (const auto& x : inputs) {
    const auto fr = run_float(float_graph, x);
    const auto qr = run_quant(qm, x);
    for (std::size_t s = 0; s < qm.steps.size(); ++s) {
      const auto& ref = fr.activations[source[s]];
      if (!(ref.shape() == qr.activations[s].shape())) {
        throw std::invalid_argument("topology mismatch at layer '" +
                                    qm.steps[s].name + "': " +
                                    ref.shape().str() + " vs " +
                                    qr.activations[s].shape().str());
      }
      const auto deq = dequantize_tensor(qr.activations[s]);
      auto& rec = report.layers[s];
      const double sig = signal_power(ref);
      const double noise = noise_power(ref, deq);
      rec.signal_power += sig;
      rec.noise_power += noise;
      double db = std::numeric_limits<double>::quiet_NaN();
      if (sig > 0.0) db = sqnr_empirical(ref, deq);
      rec.per_image_db.push_back(db);
      ++rec.n_images;
      if (std::isfinite(db)) {
        sum_db[s] += db;
      } else {
        ++rec.n_excluded;
      }
    }
  }
  for (std::size_t s = 0; s < report.layers.size(); ++s) {
    auto& rec = report.layers[s];
    const auto n = static_cast<double>(rec.n_images);
    rec.signal_power /= n;
    rec.noise_power /= n;
    const auto counted = rec.n_images - rec.n_excluded;
    rec.mean_db = counted > 0 ? sum_db[s] / static_cast<double>(counted)
                              : std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace qfs
