#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "synthkit/labels.hpp"
#include "synthkit/volume.hpp"

namespace synthkit {

enum class NiftiErrorKind { io, bad_magic, bad_header, unsupported_datatype, truncated, compression };

class NiftiError : public std::runtime_error {
 public:
  NiftiError(NiftiErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  NiftiErrorKind kind() const { return kind_; }

 private:
  NiftiErrorKind kind_;
};

// NIfTI-1 datatype codes.
inline constexpr std::int16_t kDtUint8 = 2;
inline constexpr std::int16_t kDtInt16 = 4;
inline constexpr std::int16_t kDtInt32 = 8;
inline constexpr std::int16_t kDtFloat32 = 16;
inline constexpr std::int16_t kDtFloat64 = 64;
inline constexpr std::int16_t kDtInt8 = 256;
inline constexpr std::int16_t kDtUint16 = 512;
inline constexpr std::int16_t kDtUint32 = 768;

struct NiftiHeader {
  int ndim = 3;
  std::array<int, 4> dims{1, 1, 1, 1};  ///< x, y, z, channels
  std::int16_t datatype = kDtFloat32;
  Vec3 spacing{1.0, 1.0, 1.0};
  float scl_slope = 1.0f;
  float scl_inter = 0.0f;
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 1;
  std::array<float, 6> quatern{0, 0, 0, 0, 0, 0};  ///< b, c, d, qoffset x, y, z
  std::array<float, 12> srow{};                    ///< sform rows x, y, z
  std::int8_t xyzt_units = 2;                      ///< mm

  /// Default orientation for a grid: diagonal spacing, centre at the origin.
  static NiftiHeader for_grid(const Dims& dims, const Vec3& spacing, int channels = 1);
};

/// Raw contents of a NIfTI-1 file with scaling already applied.
struct NiftiData {
  NiftiHeader header;
  std::vector<double> values;  ///< x fastest, channels slowest
  bool gzipped = false;
};

/// Reads `.nii` or `.nii.gz` (detected from content, not the name).
NiftiData read_nifti(const std::filesystem::path& path);
/// Parses an in-memory file image (possibly gzip-compressed).
NiftiData parse_nifti(std::span<const std::uint8_t> bytes);

Image read_image(const std::filesystem::path& path);
/// Integer-valued data required; float files must hold whole numbers.
LabelMap read_labels(const std::filesystem::path& path);
/// 4D file, channels last. `class_ids` must match the channel count.
SoftSegMap read_soft(const std::filesystem::path& path, std::span<const Label> class_ids);

/// Encodes a header plus values; the result is gzip-compressed if `gzip`.
std::vector<std::uint8_t> encode_nifti(const NiftiHeader& header, std::span<const double> values, bool gzip);

/// Writers pick gzip from a `.gz` suffix. `like` supplies orientation fields.
void write_image(const std::filesystem::path& path, const Image& image, const NiftiHeader* like = nullptr);
void write_labels(const std::filesystem::path& path, const LabelMap& labels, const NiftiHeader* like = nullptr);
void write_soft(const std::filesystem::path& path, const SoftSegMap& soft, const NiftiHeader* like = nullptr);

}  // namespace synthkit
