#pragma once

#include <array>

#include <Eigen/Core>

#include "synthkit/priors.hpp"
#include "synthkit/volume.hpp"

namespace synthkit {

/// Side length of the velocity-field control grid.
inline constexpr int kSvfControlSize = 8;
/// Upper bound on squaring steps when integrating a velocity field.
inline constexpr int kMaxSquarings = 8;

struct AffineParams {
  Vec3 rotations{0.0, 0.0, 0.0};  ///< degrees about x, y, z
  Vec3 scalings{1.0, 1.0, 1.0};
  Vec3 shearings{0.0, 0.0, 0.0};  ///< xy, xz, yz coefficients
  Vec3 translations{0.0, 0.0, 0.0};  ///< voxels

  /// Homogeneous matrix acting on voxel coordinates about `center`:
  /// x' = T R Sh S (x - c) + c.
  Eigen::Matrix4d matrix(const Vec3& center) const;
};

/// Three-component vector field on a grid, components in voxels.
struct VectorField {
  std::array<Image, 3> comp;

  VectorField() = default;
  VectorField(const Dims& dims, const Vec3& spacing)
      : comp{Image(dims, spacing), Image(dims, spacing), Image(dims, spacing)} {}

  const Dims& dims() const { return comp[0].dims(); }
  const Vec3& spacing() const { return comp[0].spacing(); }
  Vec3 at(std::size_t n) const { return {comp[0][n], comp[1][n], comp[2][n]}; }
  double max_norm() const;
};

using DisplacementField = VectorField;

struct VelocityField {
  VectorField control_grid;  ///< kSvfControlSize^3 vectors
  double sigma_v2 = 0.0;
  Dims full_res_dims{1, 1, 1};

  /// Trilinear upsampling of the control grid to `full_res_dims`.
  VectorField upsample() const;
};

AffineParams sample_affine(const GenerationPriors& priors, Rng& rng);

/// Control grid entries ~ N(0, sigma_v2) with sigma_v2 ~ U(priors.sigma_v2).
VelocityField sample_svf(const GenerationPriors& priors, const Dims& dims, Rng& rng);
/// Same, with the variance range given directly.
VelocityField sample_svf(const Range& sigma_v2_range, const Dims& dims, Rng& rng);

/// Number of squarings so that the scaled field stays below half a voxel.
int squaring_steps(double max_norm);

/// Exponentiate a stationary velocity field by scaling and squaring.
DisplacementField integrate_svf(const VelocityField& vf);
DisplacementField integrate_velocity(const VectorField& dense_velocity);

/// Displacement of outer ∘ inner: d(x) = inner(x) + outer(x + inner(x)).
DisplacementField compose(const DisplacementField& outer, const DisplacementField& inner);

/// Determinant of the Jacobian of x -> x + d(x) by central differences.
Image jacobian_determinant(const DisplacementField& disp);

/// A sampled affine plus a dense displacement on the output grid.
struct SpatialTransform {
  AffineParams affine;
  DisplacementField displacement;
  double sigma_v2 = 0.0;  ///< variance the velocity field was drawn with
};

/// All-zero displacement on the grid of `dims`.
DisplacementField zero_displacement(const Dims& dims);

/**
 * Backward warp: out(x) = vol(A^-1 (x + d(x))), A about the volume centre.
 *
 * The displacement must live on the volume's grid (std::invalid_argument
 * otherwise). Samples outside the volume take the background value 0.
 */
Image warp(const Image& vol, const AffineParams& affine, const DisplacementField& disp, Interp interp);
LabelMap warp(const LabelMap& vol, const AffineParams& affine, const DisplacementField& disp);

/// Draws an affine and an integrated SVF for a grid of `dims`.
SpatialTransform sample_transform(const GenerationPriors& priors, const Dims& dims, Rng& rng);

}  // namespace synthkit
