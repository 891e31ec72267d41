#include "synthkit/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace synthkit {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;

template <typename T>
T byteswap_value(T v) {
  std::array<std::uint8_t, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  std::reverse(b.begin(), b.end());
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    T v;
    std::memcpy(&v, bytes_.data() + offset, sizeof(T));
    return swap_ ? byteswap_value(v) : v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  bool swap_;
};

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(std::size_t offset, T v) {
    std::memcpy(out_.data() + offset, &v, sizeof(T));
  }

 private:
  std::vector<std::uint8_t>& out_;
};

int bytes_per_voxel(std::int16_t dt) {
  switch (dt) {
    case kDtUint8:
    case kDtInt8:
      return 1;
    case kDtInt16:
    case kDtUint16:
      return 2;
    case kDtInt32:
    case kDtUint32:
    case kDtFloat32:
      return 4;
    case kDtFloat64:
      return 8;
    default:
      return 0;
  }
}

bool is_gzip(std::span<const std::uint8_t> b) { return b.size() >= 2 && b[0] == 0x1f && b[1] == 0x8b; }

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> in) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw NiftiError(NiftiErrorKind::compression, "inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> chunk;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      if (rc == Z_BUF_ERROR) {
        throw NiftiError(NiftiErrorKind::truncated,
                         "truncated gzip stream after " + std::to_string(out.size() + chunk.size() - zs.avail_out) +
                             " decompressed bytes");
      }
      throw NiftiError(NiftiErrorKind::compression, "corrupt gzip stream");
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> gzip_bytes(std::span<const std::uint8_t> in) {
  z_stream zs{};
  // windowBits 15 + 16: gzip wrapper with a zero mtime, so output is reproducible.
  if (deflateInit2(&zs, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw NiftiError(NiftiErrorKind::compression, "deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw NiftiError(NiftiErrorKind::compression, "deflate failed");
  out.resize(zs.total_out);
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NiftiError(NiftiErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NiftiError(NiftiErrorKind::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw NiftiError(NiftiErrorKind::io, "write failed for " + path.string());
}

bool wants_gzip(const std::filesystem::path& path) { return path.extension() == ".gz"; }

double decode_voxel(const std::uint8_t* p, std::int16_t dt, bool swap) {
  auto load = [&](auto tag) {
    using T = decltype(tag);
    T v;
    std::memcpy(&v, p, sizeof(T));
    if (swap) v = byteswap_value(v);
    return static_cast<double>(v);
  };
  switch (dt) {
    case kDtUint8:
      return load(std::uint8_t{});
    case kDtInt8:
      return load(std::int8_t{});
    case kDtInt16:
      return load(std::int16_t{});
    case kDtUint16:
      return load(std::uint16_t{});
    case kDtInt32:
      return load(std::int32_t{});
    case kDtUint32:
      return load(std::uint32_t{});
    case kDtFloat32:
      return load(float{});
    default:
      return load(double{});
  }
}

void encode_voxel(std::uint8_t* p, std::int16_t dt, double v) {
  auto store = [&](auto x) { std::memcpy(p, &x, sizeof(x)); };
  switch (dt) {
    case kDtUint8:
      store(static_cast<std::uint8_t>(v));
      break;
    case kDtInt8:
      store(static_cast<std::int8_t>(v));
      break;
    case kDtInt16:
      store(static_cast<std::int16_t>(v));
      break;
    case kDtUint16:
      store(static_cast<std::uint16_t>(v));
      break;
    case kDtInt32:
      store(static_cast<std::int32_t>(v));
      break;
    case kDtUint32:
      store(static_cast<std::uint32_t>(v));
      break;
    case kDtFloat32:
      store(static_cast<float>(v));
      break;
    default:
      store(v);
  }
}

Dims spatial_dims(const NiftiHeader& h) { return {h.dims[0], h.dims[1], h.dims[2]}; }

NiftiHeader header_like(const NiftiHeader* like, const Dims& dims, const Vec3& spacing, int channels,
                        std::int16_t datatype) {
  NiftiHeader h = NiftiHeader::for_grid(dims, spacing, channels);
  if (like != nullptr) {
    h.qform_code = like->qform_code;
    h.sform_code = like->sform_code;
    h.quatern = like->quatern;
    h.srow = like->srow;
    h.xyzt_units = like->xyzt_units;
  }
  h.datatype = datatype;
  return h;
}

}  // namespace

NiftiHeader NiftiHeader::for_grid(const Dims& dims, const Vec3& spacing, int channels) {
  NiftiHeader h;
  h.ndim = channels > 1 ? 4 : 3;
  h.dims = {dims[0], dims[1], dims[2], channels};
  h.spacing = spacing;
  for (int a = 0; a < 3; ++a) {
    h.srow[a * 4 + a] = static_cast<float>(spacing[a]);
    h.srow[a * 4 + 3] = static_cast<float>(-0.5 * (dims[a] - 1) * spacing[a]);
  }
  return h;
}

NiftiData parse_nifti(std::span<const std::uint8_t> raw) {
  NiftiData out;
  std::vector<std::uint8_t> inflated;
  std::span<const std::uint8_t> bytes = raw;
  if (is_gzip(raw)) {
    inflated = gunzip(raw);
    bytes = inflated;
    out.gzipped = true;
  }
  if (bytes.size() < kHeaderSize) {
    throw NiftiError(NiftiErrorKind::truncated, "truncated file: header needs bytes [0, 348) but file ends at " +
                                                    std::to_string(bytes.size()));
  }
  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, bytes.data(), 4);
  bool swap = false;
  if (sizeof_hdr != 348) {
    if (byteswap_value(sizeof_hdr) != 348) {
      throw NiftiError(NiftiErrorKind::bad_header, "sizeof_hdr is " + std::to_string(sizeof_hdr) + ", expected 348");
    }
    swap = true;
  }
  const char* magic = reinterpret_cast<const char*>(bytes.data() + 344);
  if (std::memcmp(magic, "n+1\0", 4) != 0) {
    throw NiftiError(NiftiErrorKind::bad_magic, "bad magic: not a single-file NIfTI-1 image");
  }
  const ByteReader r(bytes, swap);
  NiftiHeader& h = out.header;
  h.ndim = r.get<std::int16_t>(40);
  if (h.ndim < 1 || h.ndim > 4) {
    throw NiftiError(NiftiErrorKind::bad_header, "unsupported dimensionality " + std::to_string(h.ndim));
  }
  for (int a = 0; a < 4; ++a) h.dims[a] = a < h.ndim ? r.get<std::int16_t>(42 + 2 * a) : 1;
  for (int a = 0; a < 4; ++a) {
    if (h.dims[a] < 1) throw NiftiError(NiftiErrorKind::bad_header, "non-positive dim in header");
  }
  h.datatype = r.get<std::int16_t>(70);
  const int bpv = bytes_per_voxel(h.datatype);
  if (bpv == 0) {
    throw NiftiError(NiftiErrorKind::unsupported_datatype, "unsupported datatype code " + std::to_string(h.datatype));
  }
  for (int a = 0; a < 3; ++a) {
    const float s = r.get<float>(80 + 4 * a);
    h.spacing[a] = a < h.ndim ? std::abs(s) : 1.0;
    if (!(h.spacing[a] > 0.0)) throw NiftiError(NiftiErrorKind::bad_header, "non-positive voxel spacing");
  }
  const float vox_offset = r.get<float>(108);
  h.scl_slope = r.get<float>(112);
  h.scl_inter = r.get<float>(116);
  h.xyzt_units = r.get<std::int8_t>(123);
  h.qform_code = r.get<std::int16_t>(252);
  h.sform_code = r.get<std::int16_t>(254);
  for (int q = 0; q < 6; ++q) h.quatern[q] = r.get<float>(256 + 4 * q);
  for (int q = 0; q < 12; ++q) h.srow[q] = r.get<float>(280 + 4 * q);

  const std::size_t offset = std::max<std::size_t>(kDataOffset, static_cast<std::size_t>(vox_offset));
  const std::size_t count = voxel_count(spatial_dims(h)) * static_cast<std::size_t>(h.dims[3]);
  const std::size_t end = offset + count * static_cast<std::size_t>(bpv);
  if (bytes.size() < end) {
    throw NiftiError(NiftiErrorKind::truncated, "truncated file: voxel data needs bytes [" + std::to_string(offset) +
                                                    ", " + std::to_string(end) + ") but file ends at " +
                                                    std::to_string(bytes.size()));
  }
  const bool scaled = h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f);
  out.values.resize(count);
  for (std::size_t n = 0; n < count; ++n) {
    double v = decode_voxel(bytes.data() + offset + n * bpv, h.datatype, swap);
    if (scaled) v = v * h.scl_slope + h.scl_inter;
    out.values[n] = v;
  }
  return out;
}

NiftiData read_nifti(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  try {
    return parse_nifti(bytes);
  } catch (const NiftiError& e) {
    throw NiftiError(e.kind(), path.string() + ": " + e.what());
  }
}

Image read_image(const std::filesystem::path& path) {
  NiftiData d = read_nifti(path);
  if (d.header.dims[3] != 1) throw NiftiError(NiftiErrorKind::bad_header, path.string() + ": expected a 3D volume");
  std::vector<float> v(d.values.begin(), d.values.end());
  return Image(spatial_dims(d.header), d.header.spacing, std::move(v));
}

LabelMap read_labels(const std::filesystem::path& path) {
  NiftiData d = read_nifti(path);
  if (d.header.dims[3] != 1) throw NiftiError(NiftiErrorKind::bad_header, path.string() + ": expected a 3D volume");
  std::vector<Label> v(d.values.size());
  for (std::size_t n = 0; n < v.size(); ++n) {
    const double x = d.values[n];
    if (x != std::round(x) || x < 0.0) {
      throw std::invalid_argument(path.string() + ": label volume holds a non-integer or negative value");
    }
    v[n] = static_cast<Label>(x);
  }
  return LabelMap(spatial_dims(d.header), d.header.spacing, std::move(v));
}

SoftSegMap read_soft(const std::filesystem::path& path, std::span<const Label> class_ids) {
  NiftiData d = read_nifti(path);
  const std::size_t channels = static_cast<std::size_t>(d.header.dims[3]);
  if (channels != class_ids.size()) {
    throw std::invalid_argument(path.string() + ": soft map has " + std::to_string(channels) + " channels, expected " +
                                std::to_string(class_ids.size()));
  }
  const Dims dims = spatial_dims(d.header);
  const std::size_t n_vox = voxel_count(dims);
  SoftSegMap soft;
  soft.class_ids.assign(class_ids.begin(), class_ids.end());
  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<float> v(d.values.begin() + c * n_vox, d.values.begin() + (c + 1) * n_vox);
    soft.channels.emplace_back(dims, d.header.spacing, std::move(v));
  }
  return soft;
}

std::vector<std::uint8_t> encode_nifti(const NiftiHeader& h, std::span<const double> values, bool gzip) {
  const int bpv = bytes_per_voxel(h.datatype);
  if (bpv == 0) {
    throw NiftiError(NiftiErrorKind::unsupported_datatype, "unsupported datatype code " + std::to_string(h.datatype));
  }
  const std::size_t count = voxel_count({h.dims[0], h.dims[1], h.dims[2]}) * static_cast<std::size_t>(h.dims[3]);
  if (values.size() != count) throw std::invalid_argument("encode_nifti: value count does not match header dims");
  for (int a = 0; a < 4; ++a) {
    if (h.dims[a] < 1 || h.dims[a] > 32767) throw std::invalid_argument("encode_nifti: dim out of NIfTI-1 range");
  }
  std::vector<std::uint8_t> buf(kDataOffset + count * bpv, 0);
  ByteWriter w(buf);
  w.put<std::int32_t>(0, 348);
  buf[38] = 'r';  // regular
  w.put<std::int16_t>(40, static_cast<std::int16_t>(h.ndim));
  for (int a = 0; a < 7; ++a) w.put<std::int16_t>(42 + 2 * a, static_cast<std::int16_t>(a < 4 ? h.dims[a] : 1));
  w.put<std::int16_t>(70, h.datatype);
  w.put<std::int16_t>(72, static_cast<std::int16_t>(8 * bpv));
  w.put<float>(76, 1.0f);  // qfac
  for (int a = 0; a < 3; ++a) w.put<float>(80 + 4 * a, static_cast<float>(h.spacing[a]));
  w.put<float>(92, 1.0f);
  w.put<float>(108, static_cast<float>(kDataOffset));
  w.put<float>(112, h.scl_slope);
  w.put<float>(116, h.scl_inter);
  w.put<std::int8_t>(123, h.xyzt_units);
  w.put<std::int16_t>(252, h.qform_code);
  w.put<std::int16_t>(254, h.sform_code);
  for (int q = 0; q < 6; ++q) w.put<float>(256 + 4 * q, h.quatern[q]);
  for (int q = 0; q < 12; ++q) w.put<float>(280 + 4 * q, h.srow[q]);
  std::memcpy(buf.data() + 344, "n+1\0", 4);
  for (std::size_t n = 0; n < count; ++n) encode_voxel(buf.data() + kDataOffset + n * bpv, h.datatype, values[n]);
  static_assert(std::endian::native == std::endian::little, "writer emits native little-endian files");
  return gzip ? gzip_bytes(buf) : buf;
}

void write_image(const std::filesystem::path& path, const Image& image, const NiftiHeader* like) {
  const NiftiHeader h = header_like(like, image.dims(), image.spacing(), 1, kDtFloat32);
  const std::vector<double> v(image.data().begin(), image.data().end());
  write_file(path, encode_nifti(h, v, wants_gzip(path)));
}

void write_labels(const std::filesystem::path& path, const LabelMap& labels, const NiftiHeader* like) {
  const NiftiHeader h = header_like(like, labels.dims(), labels.spacing(), 1, kDtInt32);
  const std::vector<double> v(labels.data().begin(), labels.data().end());
  write_file(path, encode_nifti(h, v, wants_gzip(path)));
}

void write_soft(const std::filesystem::path& path, const SoftSegMap& soft, const NiftiHeader* like) {
  if (soft.channels.empty()) throw std::invalid_argument("write_soft: soft map has no channels");
  const int channels = static_cast<int>(soft.channels.size());
  NiftiHeader h = header_like(like, soft.dims(), soft.spacing(), channels, kDtFloat32);
  h.ndim = 4;
  std::vector<double> v;
  v.reserve(soft.channels[0].size() * soft.channels.size());
  for (const auto& c : soft.channels) v.insert(v.end(), c.data().begin(), c.data().end());
  write_file(path, encode_nifti(h, v, wants_gzip(path)));
}

}  // namespace synthkit
