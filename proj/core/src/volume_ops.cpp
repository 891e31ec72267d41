#include "synthkit/volume_ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace synthkit {

namespace {

void check_spacing(const Vec3& spacing) {
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("resample: target spacing must be positive and finite");
    }
  }
}

// Maps an output voxel index to a continuous source index along one axis,
// aligning the field-of-view centres of the two grids.
struct AxisMap {
  double scale;
  double offset;
  double operator()(int i) const { return scale * i + offset; }
};

AxisMap axis_map(int src_n, double src_sp, int dst_n, double dst_sp) {
  // u = ((i + 0.5) * dst_sp - dst_n * dst_sp / 2 + src_n * src_sp / 2) / src_sp - 0.5
  const double scale = dst_sp / src_sp;
  const double offset = (0.5 * dst_sp - 0.5 * dst_n * dst_sp + 0.5 * src_n * src_sp) / src_sp - 0.5;
  return {scale, offset};
}

template <typename T>
double fetch(const Volume<T>& vol, int i, int j, int k, Boundary boundary) {
  const Dims& d = vol.dims();
  if (boundary == Boundary::clamp) {
    i = std::clamp(i, 0, d[0] - 1);
    j = std::clamp(j, 0, d[1] - 1);
    k = std::clamp(k, 0, d[2] - 1);
    return static_cast<double>(vol(i, j, k));
  }
  if (!vol.contains(i, j, k)) return 0.0;
  return static_cast<double>(vol(i, j, k));
}

double trilinear(const Image& vol, double x, double y, double z, Boundary boundary) {
  const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
  const int i = static_cast<int>(fx), j = static_cast<int>(fy), k = static_cast<int>(fz);
  const double tx = x - fx, ty = y - fy, tz = z - fz;
  const Dims& d = vol.dims();
  // Whole stencil is outside: nothing to blend.
  if (boundary == Boundary::zero &&
      (i < -1 || j < -1 || k < -1 || i >= d[0] || j >= d[1] || k >= d[2])) {
    return 0.0;
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
    const double w = (di ? tx : 1.0 - tx) * (dj ? ty : 1.0 - ty) * (dk ? tz : 1.0 - tz);
    if (w == 0.0) continue;
    acc += w * fetch(vol, i + di, j + dj, k + dk, boundary);
  }
  return acc;
}

int nearest_index(double u) { return static_cast<int>(std::floor(u + 0.5)); }

template <typename T>
Volume<T> resample_nearest(const Volume<T>& vol, const Dims& dims, const Vec3& spacing) {
  Volume<T> out(dims, spacing);
  const Dims& sd = vol.dims();
  std::array<std::vector<int>, 3> lut;
  for (int a = 0; a < 3; ++a) {
    const AxisMap m = axis_map(sd[a], vol.spacing()[a], dims[a], spacing[a]);
    lut[a].resize(dims[a]);
    for (int i = 0; i < dims[a]; ++i) lut[a][i] = std::clamp(nearest_index(m(i)), 0, sd[a] - 1);
  }
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) out(i, j, k) = vol(lut[0][i], lut[1][j], lut[2][k]);
  return out;
}

Image resample_trilinear(const Image& vol, const Dims& dims, const Vec3& spacing) {
  Image out(dims, spacing);
  std::array<AxisMap, 3> m{};
  for (int a = 0; a < 3; ++a) m[a] = axis_map(vol.dims()[a], vol.spacing()[a], dims[a], spacing[a]);
  for (int k = 0; k < dims[2]; ++k) {
    const double z = m[2](k);
    for (int j = 0; j < dims[1]; ++j) {
      const double y = m[1](j);
      for (int i = 0; i < dims[0]; ++i) {
        out(i, j, k) = static_cast<float>(trilinear(vol, m[0](i), y, z, Boundary::clamp));
      }
    }
  }
  return out;
}

// One separable pass along `axis` with a symmetric kernel, zero-padded.
Image convolve_axis(const Image& vol, const std::vector<double>& taps, int axis) {
  const Dims& d = vol.dims();
  const int radius = static_cast<int>(taps.size() / 2);
  Image out(d, vol.spacing());
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(d[0])
                                                       : static_cast<std::size_t>(d[0]) * d[1];
  const int n = d[axis];
  std::vector<double> line(n);
  const int a1 = axis == 0 ? 1 : 0;
  const int a2 = axis == 2 ? 1 : 2;
  for (int q = 0; q < d[a2]; ++q) {
    for (int p = 0; p < d[a1]; ++p) {
      std::array<int, 3> idx{0, 0, 0};
      idx[a1] = p;
      idx[a2] = q;
      const std::size_t base = vol.index(idx[0], idx[1], idx[2]);
      for (int t = 0; t < n; ++t) line[t] = vol[base + t * stride];
      for (int t = 0; t < n; ++t) {
        double acc = 0.0;
        const int lo = std::max(-radius, -t);
        const int hi = std::min(radius, n - 1 - t);
        for (int s = lo; s <= hi; ++s) acc += taps[s + radius] * line[t + s];
        out[base + t * stride] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Image rank_filter(const Image& vol, int radius, const std::function<float(float, float)>& pick) {
  if (radius < 0) throw std::invalid_argument("rank filter: radius must be >= 0");
  if (radius == 0) return vol;
  Image cur = vol;
  const Dims& d = vol.dims();
  for (int axis = 0; axis < 3; ++axis) {
    Image next(d, vol.spacing());
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) {
          std::array<int, 3> c{i, j, k};
          float best = cur(i, j, k);
          const int lo = std::max(0, c[axis] - radius);
          const int hi = std::min(d[axis] - 1, c[axis] + radius);
          for (int t = lo; t <= hi; ++t) {
            std::array<int, 3> s = c;
            s[axis] = t;
            best = pick(best, cur(s[0], s[1], s[2]));
          }
          next(i, j, k) = best;
        }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

double sample_at(const Image& vol, const Vec3& point, Interp interp, Boundary boundary) {
  if (interp == Interp::nearest) {
    return fetch(vol, nearest_index(point[0]), nearest_index(point[1]), nearest_index(point[2]), boundary);
  }
  return trilinear(vol, point[0], point[1], point[2], boundary);
}

Label sample_at(const LabelMap& vol, const Vec3& point) {
  const int i = nearest_index(point[0]), j = nearest_index(point[1]), k = nearest_index(point[2]);
  return vol.contains(i, j, k) ? vol(i, j, k) : Label{0};
}

Dims resampled_dims(const Dims& dims, const Vec3& from, const Vec3& to) {
  check_spacing(to);
  Dims out{};
  for (int a = 0; a < 3; ++a) {
    const double n = dims[a] * from[a] / to[a];
    // Guard against 10.000000001 rounding up to 11.
    out[a] = std::max(1, static_cast<int>(std::ceil(n - 1e-9)));
  }
  return out;
}

Image resample_to(const Image& vol, const Dims& dims, const Vec3& spacing, Interp interp) {
  check_spacing(spacing);
  if (dims == vol.dims() && spacing == vol.spacing()) return vol;
  return interp == Interp::nearest ? resample_nearest(vol, dims, spacing)
                                   : resample_trilinear(vol, dims, spacing);
}

LabelMap resample_to(const LabelMap& vol, const Dims& dims, const Vec3& spacing) {
  check_spacing(spacing);
  if (dims == vol.dims() && spacing == vol.spacing()) return vol;
  return resample_nearest(vol, dims, spacing);
}

Image resample(const Image& vol, const Vec3& target_spacing, Interp interp) {
  return resample_to(vol, resampled_dims(vol.dims(), vol.spacing(), target_spacing), target_spacing, interp);
}

LabelMap resample(const LabelMap& vol, const Vec3& target_spacing, Interp interp) {
  if (interp != Interp::nearest) {
    throw std::invalid_argument("resample: label volumes only support nearest interpolation");
  }
  return resample_to(vol, resampled_dims(vol.dims(), vol.spacing(), target_spacing), target_spacing);
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("gaussian_kernel: sigma must be finite and >= 0");
  }
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    taps[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    sum += taps[t + radius];
  }
  for (double& w : taps) w /= sum;
  return taps;
}

Image gaussian_blur(const Image& vol, const Vec3& sigma) {
  for (double s : sigma) {
    if (!(s >= 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be >= 0");
  }
  Image out = vol;
  for (int axis = 0; axis < 3; ++axis) {
    if (sigma[axis] == 0.0) continue;
    out = convolve_axis(out, gaussian_kernel(sigma[axis]), axis);
  }
  return out;
}

LabelMap gaussian_blur(const LabelMap&, const Vec3&) {
  throw std::invalid_argument("gaussian_blur: label volumes cannot be blurred");
}

Image max_filter(const Image& vol, int radius) {
  return rank_filter(vol, radius, [](float a, float b) { return std::max(a, b); });
}

Image min_filter(const Image& vol, int radius) {
  return rank_filter(vol, radius, [](float a, float b) { return std::min(a, b); });
}

}  // namespace synthkit
