#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthkit/random.hpp"
#include "synthkit/spatial.hpp"
#include "synthkit/volume.hpp"

namespace synthkit {

enum class TissueClass { background = 0, white_matter, grey_matter, csf, cerebellum };
inline constexpr int kTissueClassCount = 5;

enum class Laterality { none, left, right };

std::string to_string(TissueClass t);
TissueClass parse_tissue_class(const std::string& s);
std::string to_string(Laterality l);
Laterality parse_laterality(const std::string& s);

/**
 * Label value used for each tissue class in grouped maps.
 *
 * Each class is written with the value of its left-hemisphere prototype
 * region (white matter 2, cortex 3, lateral ventricle 4, cerebellar white
 * matter 7), so a grouped map is itself a valid map under the default
 * taxonomy and regroups to itself.
 */
inline constexpr std::array<Label, kTissueClassCount> kTissueCodes{0, 2, 3, 4, 7};

inline Label tissue_code(TissueClass t) { return kTissueCodes[static_cast<int>(t)]; }
inline std::vector<Label> tissue_class_ids() { return {kTissueCodes.begin(), kTissueCodes.end()}; }

struct LabelEntry {
  Label value = 0;
  std::string name;
  Laterality laterality = Laterality::none;
  bool predicted = false;
  TissueClass group = TissueClass::background;

  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

class LabelTaxonomy {
 public:
  LabelTaxonomy() = default;
  explicit LabelTaxonomy(std::vector<LabelEntry> entries);

  /// The 44-region training taxonomy (background included).
  static LabelTaxonomy default_taxonomy();

  /// CSV rows `value,name,laterality,predicted,group`; '#' lines are comments.
  static LabelTaxonomy parse(const std::string& text);
  static LabelTaxonomy load(const std::string& path);
  std::string serialize() const;
  void save(const std::string& path) const;

  const std::vector<LabelEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(Label l) const { return index_.count(l) != 0; }
  const LabelEntry& entry(Label l) const;
  TissueClass group_of(Label l) const { return entry(l).group; }

  /// Every label value in file order.
  std::vector<Label> labels() const;
  /// Labels flagged as segmentation targets, in file order.
  std::vector<Label> predicted_labels() const;

  /// Throws std::invalid_argument on the first voxel with an unknown label.
  void validate(const LabelMap& map) const;

  friend bool operator==(const LabelTaxonomy& a, const LabelTaxonomy& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<LabelEntry> entries_;
  std::map<Label, std::size_t> index_;
};

/// Maps every label to its tissue class code (see kTissueCodes).
LabelMap group_tissues(const LabelMap& labels, const LabelTaxonomy& taxonomy);

/// Keeps predicted labels and sends the rest to background.
LabelMap predicted_only(const LabelMap& labels, const LabelTaxonomy& taxonomy);

/// Per-voxel class probabilities; channel c holds P(class_ids[c]).
struct SoftSegMap {
  std::vector<Image> channels;
  std::vector<Label> class_ids;

  std::size_t channel_count() const { return channels.size(); }
  const Dims& dims() const { return channels.at(0).dims(); }
  const Vec3& spacing() const { return channels.at(0).spacing(); }

  /// Throws std::invalid_argument if values leave [0, 1] or a voxel's
  /// channel sum differs from 1 by more than `tol`.
  void validate(double tol = 1e-5) const;
};

/// Exact one-hot encoding; labels outside `class_ids` are an error.
SoftSegMap to_soft(const LabelMap& labels, std::span<const Label> class_ids);

/// Hard labels by per-voxel argmax; ties go to the earliest channel.
LabelMap argmax(const SoftSegMap& soft);

/// Divides each voxel by its channel sum; all-zero voxels become uniform.
SoftSegMap renormalize(SoftSegMap soft);

enum class MorphMode { random_per_class, dilate, erode };

struct CorruptionPriors {
  int radius_lo = 0;
  int radius_hi = 3;
  Range sigma_v2{0.0, 2.0};
  MorphMode mode = MorphMode::random_per_class;
};

struct MorphOp {
  bool dilate = true;
  int radius = 0;
};

/**
 * Corrupts a soft map: per-class max/min filtering, then an optional smooth
 * deformation, then renormalisation to unit channel sums.
 */
SoftSegMap corrupt_soft(const SoftSegMap& soft, std::span<const MorphOp> ops,
                        const DisplacementField* deformation = nullptr);

/// Random corruption: one op per class drawn from `priors`, then an SVF
/// deformation with sigma_v2 ~ U(priors.sigma_v2).
SoftSegMap corrupt_soft(const SoftSegMap& soft, const CorruptionPriors& priors, Rng& rng);

}  // namespace synthkit
