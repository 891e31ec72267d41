#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "synthkit/intensity.hpp"
#include "synthkit/labels.hpp"
#include "synthkit/priors.hpp"
#include "synthkit/spatial.hpp"
#include "synthkit/volume.hpp"

namespace synthkit {

/// Pipeline stages in the order they run.
inline constexpr const char* kStageDeform = "deform";
inline constexpr const char* kStageGmm = "gmm";
inline constexpr const char* kStageBias = "bias";
inline constexpr const char* kStageNormalize = "normalize";
inline constexpr const char* kStageGamma = "gamma";
inline constexpr const char* kStageBlur = "blur";
inline constexpr const char* kStageSubsample = "subsample";
inline constexpr const char* kStageNoise = "noise";
inline constexpr const char* kStageUpsample = "upsample";

/**
 * Record of one generated sample.
 *
 * `stages` lists the pipeline steps as they executed; `params` holds every
 * sampled parameter as text that parses back to the exact double. Serialised
 * as key=value lines.
 */
struct SampleMeta {
  std::vector<std::string> stages;
  std::vector<std::pair<std::string, std::string>> params;

  void stage(const std::string& name) { stages.push_back(name); }
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, const Vec3& value);
  /// Value for `key`, or nullopt.
  std::optional<std::string> get(const std::string& key) const;

  std::string serialize() const;
  static SampleMeta parse(const std::string& text);
};

/// Low-resolution acquisition geometry for one sample.
struct LrGeometry {
  Vec3 spacing{1.0, 1.0, 1.0};  ///< r_sp per axis, mm
  double sigma_th = 0.0;        ///< slice-thickness blur std, mm
  int axis = -1;                ///< low-resolution axis, or -1 for isotropic
};

/// Every random scalar the generator draws for one sample.
struct ParameterDraw {
  AffineParams affine;
  double sigma_v2 = 0.0;
  double sigma_B2 = 0.0;
  double gamma = 1.0;
  double r_sp = 1.0;
  double sigma_th = 0.0;
  double sigma_E = 0.0;
  int lr_axis = -1;
};

/// Draws the scalar parameters in the generator's fixed order.
ParameterDraw sample_parameters(const GenerationPriors& priors, Rng& rng);

/// Spacing triple for a drawn r_sp: one axis (slice model) or all axes.
LrGeometry lr_geometry(const ParameterDraw& draw, const Vec3& hr_spacing);

/**
 * Partial-volume simulation: blur, subsample, add noise, in that order.
 *
 * `sigma_th_mm` is converted to voxels of the input grid and applied only on
 * axes where `r_sp` is coarser than the input spacing. Noise std is in the
 * image's own intensity units; noisy images are clamped at 0. Throws
 * std::invalid_argument when r_sp is finer than the input spacing.
 */
Image simulate_lr(const Image& hr, double sigma_th_mm, const Vec3& r_sp, double sigma_E, Rng& rng,
                  SampleMeta* meta = nullptr);

struct TrainingPair {
  Image image;                              ///< on the input high-resolution grid
  LabelMap target;                          ///< tissue classes (S1) or predicted labels (S2)
  std::optional<SoftSegMap> conditioning;   ///< corrupted tissue map, S2 only
  SampleMeta meta;
};

enum class PairRole { s1, s2 };
std::string to_string(PairRole r);
PairRole parse_pair_role(const std::string& s);

/// Training pair for the tissue segmenter. Throws on unknown labels or a
/// degradation preset.
TrainingPair generate_pair_s1(const LabelMap& label_map, const LabelTaxonomy& taxonomy,
                              const GenerationPriors& priors, Rng& rng);

/// Training pair for the conditional segmenter: the image pipeline of
/// generate_pair_s1, all predicted labels as target, and a corrupted soft
/// tissue map as conditioning.
TrainingPair generate_pair_s2(const LabelMap& label_map, const LabelTaxonomy& taxonomy,
                              const GenerationPriors& priors, const CorruptionPriors& corruption, Rng& rng);

TrainingPair generate_pair(PairRole role, const LabelMap& label_map, const LabelTaxonomy& taxonomy,
                           const GenerationPriors& priors, const CorruptionPriors& corruption, Rng& rng);

struct DegradedPair {
  Image image;
  LabelMap labels;
  SampleMeta meta;
};

/**
 * Degrades a real image and its labels for denoiser training data.
 *
 * Both receive the same spatial transform; bias, normalisation, gamma and the
 * low-resolution simulation touch the image only. There is no GMM step.
 */
DegradedPair degrade_image(const Image& image, const LabelMap& labels, const GenerationPriors& priors, Rng& rng);

}  // namespace synthkit
