// SPDX-License-Identifier: Apache-2.0
#include "qfs/modelio.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>

#include "json.hpp"

namespace qfs {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::f32: return 4;
    case DType::u8: return 1;
    case DType::i32: return 4;
    case DType::i64: return 8;
  }
  return 0;
}

std::string_view to_string(DType d) {
  switch (d) {
    case DType::f32: return "f32";
    case DType::u8: return "u8";
    case DType::i32: return "i32";
    case DType::i64: return "i64";
  }
  return "?";
}

namespace {

DType parse_dtype_code(std::uint8_t code, const std::string& name) {
  if (code > static_cast<std::uint8_t>(DType::i64)) {
    throw FormatError("tensor '" + name + "': unknown dtype code " +
                      std::to_string(code));
  }
  return static_cast<DType>(code);
}

template <typename U>
void put_le(std::vector<unsigned char>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  }
  return v;
}

}  // namespace

std::size_t TensorBlob::elements() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

TensorBlob TensorBlob::from_floats(std::span<const float> v,
                                   std::vector<std::uint32_t> dims) {
  TensorBlob b;
  b.dtype = DType::f32;
  b.dims = std::move(dims);
  b.payload.reserve(v.size() * 4);
  for (float f : v) put_le(b.payload, std::bit_cast<std::uint32_t>(f));
  return b;
}

TensorBlob TensorBlob::from_tensor(const FloatTensor& t) {
  const Shape& s = t.shape();
  return from_floats(t.data(), {static_cast<std::uint32_t>(s.n),
                                static_cast<std::uint32_t>(s.h),
                                static_cast<std::uint32_t>(s.w),
                                static_cast<std::uint32_t>(s.c)});
}

TensorBlob TensorBlob::from_codes(const QuantTensor& t) {
  const Shape& s = t.shape();
  TensorBlob b;
  b.dims = {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.h),
            static_cast<std::uint32_t>(s.w), static_cast<std::uint32_t>(s.c)};
  if (t.params().bits <= 8) {
    b.dtype = DType::u8;
    for (auto c : t.codes()) b.payload.push_back(static_cast<unsigned char>(c));
  } else {
    b.dtype = DType::i32;
    for (auto c : t.codes()) put_le(b.payload, static_cast<std::uint32_t>(c));
  }
  return b;
}

TensorBlob TensorBlob::from_ints(std::span<const std::int64_t> v) {
  TensorBlob b;
  b.dims = {static_cast<std::uint32_t>(v.size())};
  const bool narrow = std::all_of(v.begin(), v.end(), [](std::int64_t x) {
    return x >= std::numeric_limits<std::int32_t>::min() &&
           x <= std::numeric_limits<std::int32_t>::max();
  });
  b.dtype = narrow ? DType::i32 : DType::i64;
  for (auto x : v) {
    if (narrow) {
      put_le(b.payload, static_cast<std::uint32_t>(static_cast<std::int32_t>(x)));
    } else {
      put_le(b.payload, static_cast<std::uint64_t>(x));
    }
  }
  return b;
}

std::vector<float> TensorBlob::floats() const {
  if (dtype != DType::f32) {
    throw FormatError("expected f32 blob, found " + std::string(to_string(dtype)));
  }
  std::vector<float> out(elements());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::bit_cast<float>(get_le<std::uint32_t>(&payload[4 * i]));
  }
  return out;
}

std::vector<std::int64_t> TensorBlob::ints() const {
  std::vector<std::int64_t> out(elements());
  for (std::size_t i = 0; i < out.size(); ++i) {
    switch (dtype) {
      case DType::u8: out[i] = payload[i]; break;
      case DType::i32:
        out[i] = static_cast<std::int32_t>(get_le<std::uint32_t>(&payload[4 * i]));
        break;
      case DType::i64:
        out[i] = static_cast<std::int64_t>(get_le<std::uint64_t>(&payload[8 * i]));
        break;
      case DType::f32:
        throw FormatError("expected integer blob, found f32");
    }
  }
  return out;
}

Shape TensorBlob::shape() const {
  if (dims.empty() || dims.size() > 4) {
    throw FormatError("blob rank " + std::to_string(dims.size()) +
                      " cannot be viewed as an NHWC tensor");
  }
  std::int64_t d[4] = {1, 1, 1, 1};
  const std::size_t pad = 4 - dims.size();
  for (std::size_t i = 0; i < dims.size(); ++i) d[pad + i] = dims[i];
  return Shape{d[0], d[1], d[2], d[3]};
}

FloatTensor TensorBlob::tensor() const { return FloatTensor(shape(), floats()); }

std::vector<unsigned char> encode_blob(const TensorBlob& blob) {
  if (blob.dims.size() > 255) throw FormatError("blob rank exceeds 255");
  if (blob.payload.size() != blob.elements() * dtype_size(blob.dtype)) {
    throw FormatError("blob payload length does not match its dims");
  }
  std::vector<unsigned char> out;
  out.reserve(8 + 4 * blob.dims.size() + blob.payload.size());
  out.insert(out.end(), std::begin(kBlobMagic), std::end(kBlobMagic));
  put_le(out, kBlobVersion);
  out.push_back(static_cast<unsigned char>(blob.dtype));
  out.push_back(static_cast<unsigned char>(blob.dims.size()));
  for (auto d : blob.dims) put_le(out, d);
  out.insert(out.end(), blob.payload.begin(), blob.payload.end());
  return out;
}

TensorBlob decode_blob(std::span<const unsigned char> bytes,
                       const std::string& name) {
  if (bytes.size() < 8) {
    throw FormatError("tensor '" + name + "': blob shorter than its header");
  }
  if (std::memcmp(bytes.data(), kBlobMagic, 4) != 0) {
    throw FormatError("tensor '" + name + "': bad magic bytes");
  }
  const auto version = get_le<std::uint16_t>(&bytes[4]);
  if (version != kBlobVersion) {
    throw FormatError("tensor '" + name + "': unsupported blob version " +
                      std::to_string(version));
  }
  TensorBlob b;
  b.dtype = parse_dtype_code(bytes[6], name);
  const std::size_t rank = bytes[7];
  const std::size_t header = 8 + 4 * rank;
  if (bytes.size() < header) {
    throw FormatError("tensor '" + name + "': truncated dims");
  }
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    b.dims.push_back(get_le<std::uint32_t>(&bytes[8 + 4 * i]));
    count *= b.dims.back();
  }
  const std::size_t expected = count * dtype_size(b.dtype);
  if (bytes.size() - header != expected) {
    throw FormatError("tensor '" + name + "': payload length " +
                      std::to_string(bytes.size() - header) +
                      " does not match expected " + std::to_string(expected));
  }
  b.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                   bytes.end());
  return b;
}

void write_blob(const fs::path& path, const TensorBlob& blob) {
  const auto bytes = encode_blob(blob);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("failed writing '" + path.string() + "'");
}

TensorBlob read_blob(const fs::path& path, const std::string& name) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw FormatError("tensor '" + name + "': cannot open '" + path.string() +
                      "'");
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  return decode_blob(bytes, name);
}

void save_tensor(const FloatTensor& t, const fs::path& path) {
  write_blob(path, TensorBlob::from_tensor(t));
}

FloatTensor load_tensor(const fs::path& path) {
  const auto blob = read_blob(path, path.filename().string());
  try {
    return blob.tensor();
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.filename().string() + ": " + e.what());
  }
}

namespace {

std::string blob_file(const std::string& tensor_name) {
  std::string f = tensor_name;
  std::replace(f.begin(), f.end(), '/', '.');
  return "tensors/" + f + kBlobExtension;
}

json dims_json(const std::vector<std::uint32_t>& dims) {
  json a = json::array();
  for (auto d : dims) a.push_back(d);
  return a;
}

json shape_json(const Shape& s) { return json::array({s.n, s.h, s.w, s.c}); }

Shape shape_from_json(const json& j) {
  const auto v = j.get<std::vector<std::int64_t>>();
  if (v.size() != 4) throw FormatError("shape must have 4 dimensions");
  Shape s{v[0], v[1], v[2], v[3]};
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return s;
}

class BlobWriter {
 public:
  explicit BlobWriter(fs::path dir) : dir_(std::move(dir)) {}

  std::string add(const std::string& name, const TensorBlob& blob,
                  const std::string& layout) {
    const auto file = blob_file(name);
    if (!files_.insert(file).second) {
      throw FormatError("duplicate tensor file for '" + name + "'");
    }
    write_blob(dir_ / file, blob);
    tensors_[name] = {{"file", file},
                      {"dtype", std::string(to_string(blob.dtype))},
                      {"shape", dims_json(blob.dims)},
                      {"layout", layout}};
    return name;
  }

  json params(const std::string& name, const QuantParams& p) {
    const float values[3] = {p.x_min, p.x_max, p.delta};
    add(name, TensorBlob::from_floats(values, {3}), "x_min,x_max,delta");
    return {{"bits", p.bits}, {"offset", p.offset}, {"values", name}};
  }

  const json& tensors() const { return tensors_; }

 private:
  fs::path dir_;
  std::set<std::string> files_;
  json tensors_ = json::object();
};

class BlobReader {
 public:
  BlobReader(fs::path dir, const json& tensors)
      : dir_(std::move(dir)), tensors_(tensors) {}

  TensorBlob get(const std::string& name) const {
    if (!tensors_.contains(name)) {
      throw FormatError("manifest references unknown tensor '" + name + "'");
    }
    const auto& e = tensors_.at(name);
    auto blob = read_blob(dir_ / e.at("file").get<std::string>(), name);
    if (std::string(to_string(blob.dtype)) != e.at("dtype").get<std::string>()) {
      throw FormatError("tensor '" + name + "': dtype differs from manifest");
    }
    if (dims_json(blob.dims) != e.at("shape")) {
      throw FormatError("tensor '" + name + "': shape differs from manifest");
    }
    return blob;
  }

  FloatTensor tensor(const std::string& name) const {
    try {
      return get(name).tensor();
    } catch (const std::invalid_argument& e) {
      throw FormatError("tensor '" + name + "': " + e.what());
    }
  }

  std::vector<float> floats(const std::string& name) const {
    return get(name).floats();
  }

  QuantParams params(const json& j) const {
    const auto v = floats(j.at("values").get<std::string>());
    if (v.size() != 3) throw FormatError("quant params blob must hold 3 values");
    QuantParams p;
    p.x_min = v[0];
    p.x_max = v[1];
    p.delta = v[2];
    p.bits = j.at("bits").get<int>();
    p.offset = j.at("offset").get<std::int32_t>();
    QuantParams check;
    try {
      check = compute_quant_params(p.x_min, p.x_max, p.bits);
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("invalid quant params: ") + e.what());
    }
    if (!(check == p)) {
      throw FormatError("quant params '" + j.at("values").get<std::string>() +
                        "' are inconsistent with their range");
    }
    return p;
  }

 private:
  fs::path dir_;
  const json& tensors_;
};

void prepare_dir(const fs::path& dir) {
  fs::create_directories(dir / "tensors");
  for (const auto& e : fs::directory_iterator(dir / "tensors")) {
    if (e.is_regular_file() && e.path().extension() == kBlobExtension) {
      fs::remove(e.path());
    }
  }
}

void write_manifest(const fs::path& dir, const json& manifest) {
  std::ofstream f(dir / kManifestName, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot write manifest in '" + dir.string() + "'");
  f << manifest.dump(2) << "\n";
}

json read_manifest(const fs::path& dir) {
  std::ifstream f(dir / kManifestName, std::ios::binary);
  if (!f) {
    throw FormatError("no " + std::string(kManifestName) + " in '" +
                      dir.string() + "'");
  }
  json m;
  try {
    m = json::parse(f);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!m.is_object() || !m.contains("format_version")) {
    throw FormatError("manifest schema violation: missing format_version");
  }
  const auto version = m.at("format_version").get<int>();
  if (version != kManifestVersion) {
    throw FormatError("unsupported manifest format_version " +
                      std::to_string(version));
  }
  return m;
}

json conv_json(const ConvSpec& c) {
  return {{"stride", c.stride},
          {"padding", std::string(to_string(c.padding))},
          {"kernel", json::array({c.kernel_h, c.kernel_w})}};
}

ConvSpec conv_from_json(const json& j) {
  ConvSpec c;
  c.stride = j.at("stride").get<int>();
  c.padding = parse_padding(j.at("padding").get<std::string>());
  const auto k = j.at("kernel").get<std::vector<int>>();
  if (k.size() != 2) throw FormatError("kernel must have 2 entries");
  c.kernel_h = k[0];
  c.kernel_w = k[1];
  return c;
}

const char* weight_layout(LayerKind k) {
  return k == LayerKind::depthwise_conv2d ? "1,kh,kw,c" : "kh,kw,cin,cout";
}

template <typename F>
auto schema_guard(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest schema violation: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid model: ") + e.what());
  }
}

}  // namespace

void save_model(const GraphSpec& g, const fs::path& dir) {
  g.infer_shapes();
  prepare_dir(dir);
  BlobWriter w(dir);
  json layers = json::array();
  for (const auto& l : g.layers) {
    json j = {{"name", l.name}, {"kind", std::string(to_string(l.kind))}};
    switch (l.kind) {
      case LayerKind::conv2d:
      case LayerKind::depthwise_conv2d:
      case LayerKind::pointwise_conv2d:
        j.update(conv_json(l.conv));
        j["weights"] = w.add(l.name + "/weights",
                             TensorBlob::from_tensor(*l.weights),
                             weight_layout(l.kind));
        if (!l.bias.empty()) {
          j["bias"] = w.add(
              l.name + "/bias",
              TensorBlob::from_floats(
                  l.bias, {static_cast<std::uint32_t>(l.bias.size())}),
              "c");
        }
        break;
      case LayerKind::batchnorm: {
        const auto& bn = *l.bn;
        const auto c = static_cast<std::uint32_t>(bn.channels());
        j["gamma"] = w.add(l.name + "/gamma", TensorBlob::from_floats(bn.gamma, {c}), "c");
        j["beta"] = w.add(l.name + "/beta", TensorBlob::from_floats(bn.beta, {c}), "c");
        j["mean"] = w.add(l.name + "/mean", TensorBlob::from_floats(bn.mean, {c}), "c");
        j["variance"] = w.add(l.name + "/variance",
                              TensorBlob::from_floats(bn.variance, {c}), "c");
        const float eps[1] = {bn.epsilon};
        j["epsilon"] = w.add(l.name + "/epsilon", TensorBlob::from_floats(eps, {1}), "scalar");
        break;
      }
      case LayerKind::activation:
        j["activation"] = std::string(to_string(l.activation));
        break;
      case LayerKind::avg_pool:
        j["window"] = json::array({l.pool_h, l.pool_w});
        break;
      case LayerKind::softmax:
        break;
    }
    layers.push_back(std::move(j));
  }
  json manifest = {{"format_version", kManifestVersion},
                   {"model_type", "float"},
                   {"name", g.name},
                   {"input_shape", shape_json(g.input_shape)},
                   {"layers", std::move(layers)},
                   {"tensors", w.tensors()}};
  write_manifest(dir, manifest);
}

void save_model(const QuantModel& m, const fs::path& dir) {
  prepare_dir(dir);
  BlobWriter w(dir);
  json steps = json::array();
  for (const auto& s : m.steps) {
    json j = {{"name", s.name},
              {"source_layer", s.source_layer},
              {"kind", std::string(to_string(s.kind))},
              {"activation", std::string(to_string(s.activation))},
              {"out_params", w.params(s.name + "/out_params", s.out_params)}};
    if (s.kind == StepKind::conv2d || s.kind == StepKind::depthwise_conv2d) {
      j.update(conv_json(s.conv));
      j["weights"] = w.add(s.name + "/weights",
                           TensorBlob::from_codes(*s.weights),
                           s.kind == StepKind::depthwise_conv2d
                               ? "1,kh,kw,c"
                               : "kh,kw,cin,cout");
      j["weight_params"] = w.params(s.name + "/weight_params",
                                    s.weights->params());
      if (!s.bias.empty()) {
        j["bias"] = w.add(s.name + "/bias", TensorBlob::from_ints(s.bias), "c");
      }
      if (!s.alpha.empty()) {
        j["alpha"] = w.add(
            s.name + "/alpha",
            TensorBlob::from_floats(
                s.alpha, {static_cast<std::uint32_t>(s.alpha.size())}),
            "c");
      }
    }
    if (s.kind == StepKind::avg_pool) {
      j["window"] = json::array({s.pool_h, s.pool_w});
    }
    steps.push_back(std::move(j));
  }
  json manifest = {{"format_version", kManifestVersion},
                   {"model_type", "quantized"},
                   {"name", m.name},
                   {"bits", m.bits},
                   {"input_shape", shape_json(m.input_shape)},
                   {"input_params", w.params("input/params", m.input_params)},
                   {"softmax", m.softmax},
                   {"steps", std::move(steps)},
                   {"tensors", w.tensors()}};
  write_manifest(dir, manifest);
}

void save_model(const Model& m, const fs::path& dir) {
  std::visit([&](const auto& model) { save_model(model, dir); }, m);
}

namespace {

GraphSpec float_from_manifest(const fs::path& dir, const json& mf) {
  BlobReader r(dir, mf.at("tensors"));
  GraphSpec g;
  g.name = mf.at("name").get<std::string>();
  g.input_shape = shape_from_json(mf.at("input_shape"));
  for (const auto& j : mf.at("layers")) {
    LayerSpec l;
    l.name = j.at("name").get<std::string>();
    l.kind = parse_layer_kind(j.at("kind").get<std::string>());
    switch (l.kind) {
      case LayerKind::conv2d:
      case LayerKind::depthwise_conv2d:
      case LayerKind::pointwise_conv2d:
        l.conv = conv_from_json(j);
        l.weights = r.tensor(j.at("weights").get<std::string>());
        if (j.contains("bias")) l.bias = r.floats(j.at("bias").get<std::string>());
        break;
      case LayerKind::batchnorm: {
        BatchNormParams bn;
        bn.gamma = r.floats(j.at("gamma").get<std::string>());
        bn.beta = r.floats(j.at("beta").get<std::string>());
        bn.mean = r.floats(j.at("mean").get<std::string>());
        bn.variance = r.floats(j.at("variance").get<std::string>());
        const auto eps = r.floats(j.at("epsilon").get<std::string>());
        if (eps.size() != 1) throw FormatError("epsilon must be a scalar");
        bn.epsilon = eps[0];
        l.bn = std::move(bn);
        break;
      }
      case LayerKind::activation:
        l.activation = parse_activation(j.at("activation").get<std::string>());
        break;
      case LayerKind::avg_pool: {
        const auto win = j.at("window").get<std::vector<std::int64_t>>();
        if (win.size() != 2) throw FormatError("pool window must have 2 entries");
        l.pool_h = win[0];
        l.pool_w = win[1];
        break;
      }
      case LayerKind::softmax:
        break;
    }
    g.layers.push_back(std::move(l));
  }
  g.infer_shapes();
  return g;
}

QuantModel quant_from_manifest(const fs::path& dir, const json& mf) {
  BlobReader r(dir, mf.at("tensors"));
  QuantModel m;
  m.name = mf.at("name").get<std::string>();
  m.bits = mf.at("bits").get<int>();
  m.input_shape = shape_from_json(mf.at("input_shape"));
  m.input_params = r.params(mf.at("input_params"));
  m.softmax = mf.at("softmax").get<bool>();
  for (const auto& j : mf.at("steps")) {
    QuantStep s;
    s.name = j.at("name").get<std::string>();
    s.source_layer = j.at("source_layer").get<std::string>();
    s.kind = parse_step_kind(j.at("kind").get<std::string>());
    s.activation = parse_activation(j.at("activation").get<std::string>());
    s.out_params = r.params(j.at("out_params"));
    if (s.kind == StepKind::conv2d || s.kind == StepKind::depthwise_conv2d) {
      s.conv = conv_from_json(j);
      const auto wp = r.params(j.at("weight_params"));
      const auto name = j.at("weights").get<std::string>();
      const auto blob = r.get(name);
      const auto ints = blob.ints();
      std::vector<std::uint16_t> codes(ints.size());
      for (std::size_t i = 0; i < ints.size(); ++i) {
        if (ints[i] < 0 || ints[i] > wp.max_code()) {
          throw FormatError("tensor '" + name + "': code out of range");
        }
        codes[i] = static_cast<std::uint16_t>(ints[i]);
      }
      s.weights = QuantTensor(blob.shape(), std::move(codes), wp);
      if (j.contains("bias")) s.bias = r.get(j.at("bias").get<std::string>()).ints();
      if (j.contains("alpha")) s.alpha = r.floats(j.at("alpha").get<std::string>());
    }
    if (s.kind == StepKind::avg_pool) {
      const auto win = j.at("window").get<std::vector<std::int64_t>>();
      if (win.size() != 2) throw FormatError("pool window must have 2 entries");
      s.pool_h = win[0];
      s.pool_w = win[1];
    }
    m.steps.push_back(std::move(s));
  }
  return m;
}

}  // namespace

Model load_model(const fs::path& dir) {
  const json mf = read_manifest(dir);
  return schema_guard([&]() -> Model {
    const auto type = mf.at("model_type").get<std::string>();
    if (type == "float") return float_from_manifest(dir, mf);
    if (type == "quantized") return quant_from_manifest(dir, mf);
    throw FormatError("unknown model_type '" + type + "'");
  });
}

GraphSpec load_float_model(const fs::path& dir) {
  auto m = load_model(dir);
  if (auto* g = std::get_if<GraphSpec>(&m)) return std::move(*g);
  throw FormatError("'" + dir.string() + "' holds a quantized model, expected float");
}

QuantModel load_quant_model(const fs::path& dir) {
  auto m = load_model(dir);
  if (auto* q = std::get_if<QuantModel>(&m)) return std::move(*q);
  throw FormatError("'" + dir.string() + "' holds a float model, expected quantized");
}

std::vector<FloatTensor> load_input_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw FormatError("input directory '" + dir.string() + "' does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && !name.empty() && name[0] != '.') {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });
  std::vector<FloatTensor> out;
  for (const auto& f : files) {
    out.push_back(load_tensor(f));
    if (!(out.back().shape() == out.front().shape())) {
      throw FormatError("input '" + f.filename().string() + "' has shape " +
                        out.back().shape().str() + ", expected " +
                        out.front().shape().str());
    }
  }
  return out;
}

}  // namespace qfs
