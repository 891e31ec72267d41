#pragma once

#include <map>
#include <span>
#include <vector>

#include "synthkit/priors.hpp"
#include "synthkit/volume.hpp"

namespace synthkit {

/// Side length of the log-bias control grid.
inline constexpr int kBiasControlSize = 4;

/// One Gaussian component per label: intensity ~ N(means[n], variances[n]).
struct GmmDraw {
  std::vector<double> means;
  std::vector<double> variances;
  std::map<Label, std::size_t> label_index;

  std::size_t size() const { return means.size(); }
  bool has(Label l) const { return label_index.count(l) != 0; }
  std::size_t component(Label l) const;
};

/// Smooth multiplicative bias, stored as a coarse grid of log values.
struct BiasField {
  Image control_grid;  ///< kBiasControlSize^3 log-bias values
  double sigma_B2 = 0.0;

  /// exp of the trilinearly upsampled log grid on a `dims` grid.
  Image field(const Dims& dims, const Vec3& spacing) const;
};

/// means ~ U(gmm_mean), variances ~ U(gmm_variance), one pair per distinct label.
GmmDraw sample_gmm(std::span<const Label> labels, const GenerationPriors& priors, Rng& rng);

/// log-bias grid entries ~ N(0, sigma_B2) with sigma_B2 ~ U(priors.sigma_B2).
BiasField sample_bias(const GenerationPriors& priors, Rng& rng);
/// Log-bias grid for an already drawn variance.
BiasField sample_bias(double sigma_B2, Rng& rng);

/**
 * Label-conditioned GMM sample corrupted by a multiplicative bias.
 *
 * Each voxel draws s ~ N(mu_L, sigma2_L) and stores s / B, so that G * B
 * follows the GMM. `bias` is the dense positive field on L's grid.
 */
Image synthesize(const LabelMap& labels, const GmmDraw& gmm, const Image& bias, Rng& rng);
Image synthesize(const LabelMap& labels, const GmmDraw& gmm, const BiasField& bias, Rng& rng);
/// Bias-free synthesis (B = 1).
Image synthesize(const LabelMap& labels, const GmmDraw& gmm, Rng& rng);

/// Divides every voxel by the dense bias field.
Image apply_bias(const Image& image, const Image& bias);

/// Min-max rescale to [0, 1]; a constant image maps to zeros.
Image normalize_01(const Image& image);

/// Voxel-wise I^gamma with a single scalar exponent.
Image gamma_augment(const Image& image, double gamma);

/// Adds i.i.d. N(0, sigma^2) to every voxel.
Image add_noise(const Image& image, double sigma, Rng& rng);

}  // namespace synthkit
