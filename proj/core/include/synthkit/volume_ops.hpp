#pragma once

#include "synthkit/volume.hpp"

namespace synthkit {

/// How a sampler treats coordinates outside the grid.
enum class Boundary {
  zero,   ///< background value 0
  clamp,  ///< replicate the nearest edge voxel
};

/// Value at a continuous voxel coordinate. Out-of-bounds samples return 0.
double sample_at(const Image& vol, const Vec3& point, Interp interp,
                 Boundary boundary = Boundary::zero);
/// Nearest-neighbour label lookup. Out-of-bounds samples return 0.
Label sample_at(const LabelMap& vol, const Vec3& point);

/// Output dims for resampling a grid to `to` spacing: ceil(dims * from / to).
Dims resampled_dims(const Dims& dims, const Vec3& from, const Vec3& to);

/**
 * Resample to a new spacing, keeping the field-of-view centre fixed.
 *
 * Output dims follow resampled_dims(). Samples falling past the source edge
 * replicate the edge voxel. Throws std::invalid_argument on non-positive
 * spacing.
 */
Image resample(const Image& vol, const Vec3& target_spacing, Interp interp);
/// Label resampling; only Interp::nearest is accepted.
LabelMap resample(const LabelMap& vol, const Vec3& target_spacing, Interp interp = Interp::nearest);

/// Resample onto an explicit grid sharing the source field-of-view centre.
Image resample_to(const Image& vol, const Dims& dims, const Vec3& spacing, Interp interp);
LabelMap resample_to(const LabelMap& vol, const Dims& dims, const Vec3& spacing);

/// Normalised 1D Gaussian taps for `sigma` voxels, truncated at ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/**
 * Separable Gaussian blur with per-axis sigma in voxels.
 *
 * Kernels are truncated at 3 sigma and normalised to sum 1. Borders are
 * zero-padded without renormalisation, so mass leaks out near the edges.
 */
Image gaussian_blur(const Image& vol, const Vec3& sigma);
/// Always throws: blurring a label volume is not meaningful.
LabelMap gaussian_blur(const LabelMap& vol, const Vec3& sigma);

/// Grey-scale dilation (max) and erosion (min) over a (2r+1)^3 cube.
Image max_filter(const Image& vol, int radius);
Image min_filter(const Image& vol, int radius);

}  // namespace synthkit
