#pragma once

#include <optional>
#include <string>

#include "synthkit/random.hpp"

namespace synthkit {

enum class Preset { generative, degradation };

std::string to_string(Preset p);
Preset parse_preset(const std::string& s);

/**
 * Ranges of the uniform priors driving every random step of the generator.
 *
 * Units: rotation in degrees, translation in voxels at the high-resolution
 * grid, slice thickness and spacing in mm, GMM parameters and noise std on the
 * [0, 255] intensity scale. Variances (sigma_v2, gmm_variance, sigma_B2) are
 * sampled directly, not their square roots.
 */
struct GenerationPriors {
  Preset preset = Preset::generative;

  Range rotation;
  Range scaling;
  Range shearing;
  Range translation;
  Range sigma_v2;
  std::optional<Range> gmm_mean;
  std::optional<Range> gmm_variance;
  Range sigma_B2;
  Range gamma;
  Range sigma_th;
  Range r_sp;
  Range sigma_E;

  /// Probability of the slice model (one random low-resolution axis) versus
  /// isotropic low resolution.
  double single_axis_probability = 0.5;

  static GenerationPriors generative();
  static GenerationPriors degradation();
  static GenerationPriors for_preset(Preset p);

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;

  friend bool operator==(const GenerationPriors&, const GenerationPriors&) = default;
};

/// Flat `key=lo,hi` text, one row per prior, in a fixed key order.
std::string serialize_priors(const GenerationPriors& priors);

/// Applies `key=value` rows on top of `base`. `preset=` resets to that preset
/// before the remaining rows are applied. Unknown keys are errors.
GenerationPriors parse_priors(const std::string& text,
                              const GenerationPriors& base = GenerationPriors::generative());

}  // namespace synthkit
