#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthkit/labels.hpp"
#include "synthkit/volume.hpp"

namespace synthkit {

/// Smoothing term of the soft Dice, added to numerator and denominator.
inline constexpr double kSoftDiceEpsilon = 1e-6;

struct DiceReport {
  /// Dice per evaluated label; nullopt when the label is absent from both maps.
  std::map<Label, std::optional<double>> per_label;
  /// Mean over labels present in at least one map; NaN if none are.
  double mean = 0.0;
  std::vector<Label> label_set;

  /// `label,name,dice` rows, absent labels as `absent`, then a `mean` row.
  std::string to_csv(const LabelTaxonomy* taxonomy = nullptr) const;
};

/// Per-label 2|A∩B| / (|A| + |B|). Throws on differing dims.
DiceReport hard_dice(const LabelMap& a, const LabelMap& b, std::span<const Label> labels);

/// Channel-averaged (2 Σ P Q + eps) / (Σ P² + Σ Q² + eps).
double soft_dice(const SoftSegMap& p, const SoftSegMap& q);

/// Per-channel soft Dice values in channel order.
std::vector<double> soft_dice_per_channel(const SoftSegMap& p, const SoftSegMap& q);

/// Voxel count times voxel volume (mm³) for every label present.
std::map<Label, double> region_volumes(const LabelMap& labels);
/// Same, with an explicit voxel spacing.
std::map<Label, double> region_volumes(const LabelMap& labels, const Vec3& spacing);

}  // namespace synthkit
