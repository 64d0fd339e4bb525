// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qfs/graph.hpp"
#include "qfs/qgraph.hpp"
#include "qfs/tensor.hpp"

namespace qfs {

/// Malformed, truncated, or incompatible model / blob files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint16_t kBlobVersion = 1;
inline constexpr int kManifestVersion = 1;
inline constexpr char kBlobMagic[4] = {'Q', 'F', 'S', 'C'};
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kBlobExtension = ".qfsc";

/// Element type codes of the blob header. i64 is only emitted for
/// accumulator-domain biases that do not fit in int32 (wide bit-widths).
enum class DType : std::uint8_t { f32 = 0, u8 = 1, i32 = 2, i64 = 3 };

std::size_t dtype_size(DType d);
std::string_view to_string(DType d);

/// Binary tensor blob:
///
///   offset  size  field
///   0       4     magic "QFSC"
///   4       2     version (u16, little-endian)
///   6       1     dtype code
///   7       1     rank
///   8       4*r   dims (u32, little-endian)
///   ...           payload, little-endian, row-major
struct TensorBlob {
  DType dtype = DType::f32;
  std::vector<std::uint32_t> dims;
  std::vector<unsigned char> payload;

  std::size_t elements() const;

  static TensorBlob from_floats(std::span<const float> v,
                                std::vector<std::uint32_t> dims);
  static TensorBlob from_tensor(const FloatTensor& t);
  /// u8 payload for codes of at most 8 bits, i32 otherwise.
  static TensorBlob from_codes(const QuantTensor& t);
  /// i32 payload when every value fits, i64 otherwise.
  static TensorBlob from_ints(std::span<const std::int64_t> v);

  std::vector<float> floats() const;
  std::vector<std::int64_t> ints() const;
  /// Rank <= 4; missing leading dimensions are 1.
  Shape shape() const;
  FloatTensor tensor() const;
};

std::vector<unsigned char> encode_blob(const TensorBlob& blob);
/// `name` appears in diagnostics.
TensorBlob decode_blob(std::span<const unsigned char> bytes,
                       const std::string& name);

void write_blob(const std::filesystem::path& path, const TensorBlob& blob);
TensorBlob read_blob(const std::filesystem::path& path,
                     const std::string& name);

void save_tensor(const FloatTensor& t, const std::filesystem::path& path);
FloatTensor load_tensor(const std::filesystem::path& path);

using Model = std::variant<GraphSpec, QuantModel>;

/// Writes `dir`/manifest.json plus one blob per tensor under `dir`/tensors.
/// Output is canonical: the same model always produces identical bytes.
void save_model(const GraphSpec& g, const std::filesystem::path& dir);
void save_model(const QuantModel& m, const std::filesystem::path& dir);
void save_model(const Model& m, const std::filesystem::path& dir);

Model load_model(const std::filesystem::path& dir);
GraphSpec load_float_model(const std::filesystem::path& dir);
QuantModel load_quant_model(const std::filesystem::path& dir);

/// Every blob file in `dir`, ordered by filename. All must share a shape.
std::vector<FloatTensor> load_input_dir(const std::filesystem::path& dir);

}  // namespace qfs
