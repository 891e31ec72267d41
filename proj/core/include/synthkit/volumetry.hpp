#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "synthkit/bspline.hpp"
#include "synthkit/volume.hpp"

namespace synthkit {

/// Rank-deficient or underdetermined fit.
class IllPosedError : public std::runtime_error {
 public:
  IllPosedError(const std::string& what, double condition) : std::runtime_error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

struct VolumeSample {
  std::string subject;
  double age = 0.0;
  int gender = 0;  ///< 0 or 1
  Vec3 spacing{1.0, 1.0, 1.0};
  std::string region;
  double volume = 0.0;  ///< mm³
};

enum class Direction { decreasing, increasing };
std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

inline constexpr int kAgeingBreakpoints = 10;
inline constexpr int kPenaltyGridSize = 200;

/// Parameter count of the ageing model: spline coefficients, spacing slopes, gender.
inline constexpr int kAgeingParameters = kAgeingBreakpoints + 2 + 3 + 1;

/**
 * volume(age, gender, spacing) = f(age) + slopesᵀ spacing + gender_offset * gender,
 * with f a cubic B-spline on 10 equally spaced breakpoints over the age domain.
 */
struct AgeingModel {
  std::vector<double> knots;          ///< the 10 breakpoints, in years
  std::vector<double> spline_coeffs;  ///< mm³
  std::array<double, 3> spacing_slopes{};
  double gender_offset = 0.0;
  double monotonicity_weight = 0.0;
  Direction direction = Direction::decreasing;

  // Fit diagnostics.
  double objective = 0.0;
  double rss = 0.0;  ///< residual sum of squares, mm⁶
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;

  double age_min() const { return knots.front(); }
  double age_max() const { return knots.back(); }
  CubicBSpline spline() const;

  /// f(age) alone.
  double curve(double age) const;
  /// df/dage in mm³ per year.
  double curve_slope(double age) const;
};

/// Basis matrix (rows = ages) for 10 equally spaced breakpoints over [a_min, a_max].
Eigen::MatrixXd bspline_design(const std::vector<double>& ages, double a_min, double a_max);

struct FitOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
};

/**
 * Minimises Σ residual² + λ Σ_t max(0, σ f'(t))² over 200 grid ages
 * (σ = +1 when the curve should decrease). Volumes are divided by their mean
 * magnitude and ages mapped to [0, 1] while optimising; the returned model is
 * in physical units. The age domain is the observed [min, max].
 */
AgeingModel fit_ageing(const std::vector<VolumeSample>& samples, double lambda, Direction direction,
                       const FitOptions& options = {});

struct LambdaScore {
  double lambda = 0.0;
  double mean_sq_error = 0.0;  ///< held-out, mm⁶
  double std_error = 0.0;
};

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<LambdaScore> scores;
};

/// Default search grid: 0 and 10^-2 .. 10^8.
std::vector<double> default_lambda_grid();

/**
 * Holds out every 5th sample, scores each λ by held-out squared error and
 * returns the largest λ within one standard error of the best score.
 */
LambdaSelection select_lambda(const std::vector<VolumeSample>& samples, Direction direction,
                              const std::vector<double>& grid = default_lambda_grid());

/// Throws std::invalid_argument outside the model's age domain.
double predict(const AgeingModel& model, double age, int gender, const Vec3& spacing);

/// Largest violation of the monotonicity direction over `points` grid ages,
/// in volume units per unit of normalised age, divided by `scale`.
double monotonicity_violation(const AgeingModel& model, double scale, int points = kPenaltyGridSize);

/// CSV `subject,age,gender,sp_x,sp_y,sp_z,region,volume_mm3`.
std::vector<VolumeSample> parse_volume_csv(const std::string& text);
std::vector<VolumeSample> read_volume_csv(const std::filesystem::path& path);
std::vector<VolumeSample> filter_region(const std::vector<VolumeSample>& samples, const std::string& region);

/// `parameter,value` rows.
std::string coefficients_csv(const AgeingModel& model);
/// `age,curve,gender0,gender1` on `points` ages, spacing fixed at `spacing`.
std::string trajectory_csv(const AgeingModel& model, int points = 101, const Vec3& spacing = {1.0, 1.0, 1.0});

}  // namespace synthkit
