#include "synthkit/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "synthkit/volume_ops.hpp"

namespace synthkit {

namespace {

Eigen::Matrix3d rotation(const Vec3& degrees) {
  const double k = std::numbers::pi / 180.0;
  const double ax = degrees[0] * k, ay = degrees[1] * k, az = degrees[2] * k;
  Eigen::Matrix3d rx, ry, rz;
  rx << 1, 0, 0, 0, std::cos(ax), -std::sin(ax), 0, std::sin(ax), std::cos(ax);
  ry << std::cos(ay), 0, std::sin(ay), 0, 1, 0, -std::sin(ay), 0, std::cos(ay);
  rz << std::cos(az), -std::sin(az), 0, std::sin(az), std::cos(az), 0, 0, 0, 1;
  return rz * ry * rx;
}

Vec3 centre_of(const Dims& d) { return {(d[0] - 1) * 0.5, (d[1] - 1) * 0.5, (d[2] - 1) * 0.5}; }

// Row-major 3x4 copy of the inverse transform for the inner warp loop.
std::array<double, 12> inverse_rows(const AffineParams& affine, const Dims& dims) {
  const Eigen::Matrix4d inv = affine.matrix(centre_of(dims)).inverse();
  std::array<double, 12> m{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) m[r * 4 + c] = inv(r, c);
  return m;
}

void check_disp(const Dims& vol, const DisplacementField& disp) {
  if (disp.dims() != vol) {
    throw std::invalid_argument("warp: displacement field dims do not match the volume");
  }
}

template <typename Fn>
void for_each_source_point(const Dims& dims, const AffineParams& affine, const DisplacementField& disp, Fn&& fn) {
  const auto m = inverse_rows(affine, dims);
  std::size_t n = 0;
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i, ++n) {
        const double px = i + disp.comp[0][n];
        const double py = j + disp.comp[1][n];
        const double pz = k + disp.comp[2][n];
        const Vec3 src{m[0] * px + m[1] * py + m[2] * pz + m[3], m[4] * px + m[5] * py + m[6] * pz + m[7],
                       m[8] * px + m[9] * py + m[10] * pz + m[11]};
        fn(n, src);
      }
}

}  // namespace

Eigen::Matrix4d AffineParams::matrix(const Vec3& center) const {
  Eigen::Matrix3d shear = Eigen::Matrix3d::Identity();
  shear(0, 1) = shearings[0];
  shear(0, 2) = shearings[1];
  shear(1, 2) = shearings[2];
  const Eigen::Matrix3d scale = Eigen::Vector3d(scalings[0], scalings[1], scalings[2]).asDiagonal();
  const Eigen::Matrix3d lin = rotation(rotations) * shear * scale;
  const Eigen::Vector3d c(center[0], center[1], center[2]);
  const Eigen::Vector3d t(translations[0], translations[1], translations[2]);
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = lin;
  m.topRightCorner<3, 1>() = c - lin * c + t;
  return m;
}

double VectorField::max_norm() const {
  double best = 0.0;
  for (std::size_t n = 0; n < comp[0].size(); ++n) {
    const double x = comp[0][n], y = comp[1][n], z = comp[2][n];
    best = std::max(best, std::sqrt(x * x + y * y + z * z));
  }
  return best;
}

VectorField VelocityField::upsample() const {
  VectorField out;
  for (int a = 0; a < 3; ++a) {
    out.comp[a] = resample_to(control_grid.comp[a], full_res_dims, {1.0, 1.0, 1.0}, Interp::trilinear);
  }
  return out;
}

AffineParams sample_affine(const GenerationPriors& priors, Rng& rng) {
  AffineParams p;
  for (int a = 0; a < 3; ++a) p.rotations[a] = draw(rng, priors.rotation);
  for (int a = 0; a < 3; ++a) p.scalings[a] = draw(rng, priors.scaling);
  for (int a = 0; a < 3; ++a) p.shearings[a] = draw(rng, priors.shearing);
  for (int a = 0; a < 3; ++a) p.translations[a] = draw(rng, priors.translation);
  return p;
}

VelocityField sample_svf(const Range& sigma_v2_range, const Dims& dims, Rng& rng) {
  VelocityField vf;
  vf.full_res_dims = dims;
  vf.sigma_v2 = draw(rng, sigma_v2_range);
  const Dims grid{kSvfControlSize, kSvfControlSize, kSvfControlSize};
  const Vec3 grid_spacing{static_cast<double>(dims[0]) / kSvfControlSize,
                          static_cast<double>(dims[1]) / kSvfControlSize,
                          static_cast<double>(dims[2]) / kSvfControlSize};
  vf.control_grid = VectorField(grid, grid_spacing);
  if (vf.sigma_v2 == 0.0) return vf;
  std::normal_distribution<double> normal(0.0, std::sqrt(vf.sigma_v2));
  for (auto& c : vf.control_grid.comp) {
    for (float& v : c.data()) v = static_cast<float>(normal(rng));
  }
  return vf;
}

VelocityField sample_svf(const GenerationPriors& priors, const Dims& dims, Rng& rng) {
  return sample_svf(priors.sigma_v2, dims, rng);
}

int squaring_steps(double max_norm) {
  int k = 0;
  while (k < kMaxSquarings && max_norm / std::ldexp(1.0, k) >= 0.5) ++k;
  return k;
}

DisplacementField integrate_velocity(const VectorField& v) {
  const int steps = squaring_steps(v.max_norm());
  DisplacementField d = v;
  const float scale = static_cast<float>(std::ldexp(1.0, -steps));
  if (steps > 0) {
    for (auto& c : d.comp)
      for (float& x : c.data()) x *= scale;
  }
  for (int s = 0; s < steps; ++s) d = compose(d, d);
  return d;
}

DisplacementField integrate_svf(const VelocityField& vf) { return integrate_velocity(vf.upsample()); }

DisplacementField compose(const DisplacementField& outer, const DisplacementField& inner) {
  if (outer.dims() != inner.dims()) throw std::invalid_argument("compose: field dims differ");
  const Dims& d = inner.dims();
  DisplacementField out(d, inner.spacing());
  std::size_t n = 0;
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i, ++n) {
        const Vec3 u = inner.at(n);
        const Vec3 p{i + u[0], j + u[1], k + u[2]};
        for (int a = 0; a < 3; ++a) {
          out.comp[a][n] =
              static_cast<float>(u[a] + sample_at(outer.comp[a], p, Interp::trilinear, Boundary::clamp));
        }
      }
  return out;
}

Image jacobian_determinant(const DisplacementField& disp) {
  const Dims& d = disp.dims();
  Image det(d, disp.spacing());
  auto partial = [&](int a, int axis, int i, int j, int k) {
    std::array<int, 3> lo{i, j, k}, hi{i, j, k};
    lo[axis] = std::max(0, lo[axis] - 1);
    hi[axis] = std::min(d[axis] - 1, hi[axis] + 1);
    const int span = hi[axis] - lo[axis];
    if (span == 0) return 0.0;
    const Image& c = disp.comp[a];
    return (static_cast<double>(c(hi[0], hi[1], hi[2])) - c(lo[0], lo[1], lo[2])) / span;
  };
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) {
        Eigen::Matrix3d jac = Eigen::Matrix3d::Identity();
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) jac(a, b) += partial(a, b, i, j, k);
        det(i, j, k) = static_cast<float>(jac.determinant());
      }
  return det;
}

DisplacementField zero_displacement(const Dims& dims) { return DisplacementField(dims, {1.0, 1.0, 1.0}); }

Image warp(const Image& vol, const AffineParams& affine, const DisplacementField& disp, Interp interp) {
  check_disp(vol.dims(), disp);
  Image out(vol.dims(), vol.spacing());
  for_each_source_point(vol.dims(), affine, disp, [&](std::size_t n, const Vec3& src) {
    out[n] = static_cast<float>(sample_at(vol, src, interp));
  });
  return out;
}

LabelMap warp(const LabelMap& vol, const AffineParams& affine, const DisplacementField& disp) {
  check_disp(vol.dims(), disp);
  LabelMap out(vol.dims(), vol.spacing());
  for_each_source_point(vol.dims(), affine, disp,
                        [&](std::size_t n, const Vec3& src) { out[n] = sample_at(vol, src); });
  return out;
}

SpatialTransform sample_transform(const GenerationPriors& priors, const Dims& dims, Rng& rng) {
  SpatialTransform t;
  t.affine = sample_affine(priors, rng);
  const VelocityField vf = sample_svf(priors, dims, rng);
  t.sigma_v2 = vf.sigma_v2;
  t.displacement = integrate_svf(vf);
  return t;
}

}  // namespace synthkit
