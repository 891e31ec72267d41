#pragma once

#include <vector>

#include <Eigen/Dense>

namespace synthkit {

/// Cubic B-spline on clamped, equally spaced breakpoints.
///
/// With `n` breakpoints spanning [lo, hi] the basis has n + 2 functions that
/// sum to one everywhere on the closed interval.
class CubicBSpline {
 public:
  CubicBSpline(double lo, double hi, int breakpoints);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int size() const { return static_cast<int>(knots_.size()) - 4; }
  /// The breakpoints (without the repeated end knots).
  std::vector<double> breakpoints() const;
  /// Full knot vector with end knots repeated four times.
  const std::vector<double>& knots() const { return knots_; }

  /// All basis values at x. Throws std::invalid_argument outside [lo, hi].
  Eigen::VectorXd basis(double x) const;
  /// First derivatives of all basis functions at x.
  Eigen::VectorXd derivative(double x) const;

  /// One row of basis values per point.
  Eigen::MatrixXd design(const std::vector<double>& xs) const;
  Eigen::MatrixXd derivative_design(const std::vector<double>& xs) const;

 private:
  int span(double x) const;
  void check(double x) const;

  double lo_, hi_;
  std::vector<double> knots_;
};

}  // namespace synthkit
