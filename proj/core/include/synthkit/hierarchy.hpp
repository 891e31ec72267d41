#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "synthkit/labels.hpp"
#include "synthkit/volume.hpp"

namespace synthkit {

/// Failure inside a predictor; the message carries the role and diagnostics.
class PredictorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * A segmentation network, or anything standing in for one.
 *
 * Inputs are an optional image and an optional conditioning soft map. The
 * declared input channel count covers both (one image channel plus the
 * conditioning channels). Output must be a valid soft map on the input grid.
 */
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual SoftSegMap predict(const Image* image, const SoftSegMap* conditioning) = 0;
  virtual std::size_t input_channels() const = 0;
  virtual const std::vector<Label>& classes() const = 0;
};

enum class Variant { synthseg, cascade, postdenoise, synthseg_plus };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

enum class Role { S, S1, D, S2 };
std::string to_string(Role r);

struct PipelineSpec {
  Variant variant = Variant::synthseg_plus;
  std::map<Role, std::shared_ptr<Predictor>> predictors;
  /// Grid the predictors run on; inputs on another grid are resampled first.
  Vec3 hr_spacing{1.0, 1.0, 1.0};

  bool has(Role r) const { return predictors.count(r) != 0 && predictors.at(r) != nullptr; }

  /// Roles the variant needs, given which optional roles are present.
  std::vector<Role> required_roles() const;
  /// Throws std::invalid_argument naming the first missing role.
  void validate() const;
};

struct PipelineResult {
  LabelMap final;
  std::map<Role, SoftSegMap> intermediates;
};

/**
 * Runs the variant's predictor chain on `image`.
 *
 *  synthseg:      S(image)
 *  cascade:       S1(image) -> S2(image + S1)
 *  synthseg_plus: S1(image) -> D(S1) -> S2(image + D)
 *  postdenoise:   S(image) -> D, or S1 -> S2 -> D when S is absent
 *
 * The final map is the argmax of the terminal predictor's output.
 */
PipelineResult run_pipeline(const PipelineSpec& spec, const Image& image);

// Built-in predictors for testing without trained networks.

/// Ignores its inputs and returns a fixed soft map.
class ConstantPredictor : public Predictor {
 public:
  ConstantPredictor(SoftSegMap output, std::size_t input_channels);
  SoftSegMap predict(const Image* image, const SoftSegMap* conditioning) override;
  std::size_t input_channels() const override { return input_channels_; }
  const std::vector<Label>& classes() const override { return output_.class_ids; }

 private:
  SoftSegMap output_;
  std::size_t input_channels_;
};

/// Returns the one-hot encoding of a stored ground truth.
class OraclePredictor : public ConstantPredictor {
 public:
  OraclePredictor(const LabelMap& truth, std::vector<Label> classes, std::size_t input_channels);
};

/// Denoiser stand-in that passes its conditioning through unchanged.
class IdentityDenoiser : public Predictor {
 public:
  explicit IdentityDenoiser(std::vector<Label> classes);
  SoftSegMap predict(const Image* image, const SoftSegMap* conditioning) override;
  std::size_t input_channels() const override { return classes_.size(); }
  const std::vector<Label>& classes() const override { return classes_; }

 private:
  std::vector<Label> classes_;
};

/// Denoiser stand-in: each voxel takes the class with the largest summed
/// probability over a (2r+1)^3 neighbourhood, output one-hot.
class MajorityDenoiser : public Predictor {
 public:
  MajorityDenoiser(std::vector<Label> classes, int radius);
  SoftSegMap predict(const Image* image, const SoftSegMap* conditioning) override;
  std::size_t input_channels() const override { return classes_.size(); }
  const std::vector<Label>& classes() const override { return classes_; }

 private:
  std::vector<Label> classes_;
  int radius_;
};

/**
 * Runs an external command per call over the predictor file protocol.
 *
 * The template may use `{image}`, `{cond}` and `{output}`; each is replaced
 * by a path in a private scratch directory. The image (3D float32) and the
 * conditioning (4D, channels last) are written as NIfTI-1 before the call;
 * the command must write the soft map to `{output}` and exit 0. Calls on one
 * instance are serialised.
 */
class ExternalPredictor : public Predictor {
 public:
  ExternalPredictor(std::string command_template, std::vector<Label> classes, std::size_t input_channels,
                    std::string role_name = "external");
  SoftSegMap predict(const Image* image, const SoftSegMap* conditioning) override;
  std::size_t input_channels() const override { return input_channels_; }
  const std::vector<Label>& classes() const override { return classes_; }

 private:
  std::string template_;
  std::vector<Label> classes_;
  std::size_t input_channels_;
  std::string role_name_;
  std::mutex mutex_;
};

/// Shared-pointer factory for ExternalPredictor.
std::shared_ptr<Predictor> external_predictor(const std::string& command_template, std::vector<Label> classes,
                                              std::size_t input_channels);

}  // namespace synthkit
