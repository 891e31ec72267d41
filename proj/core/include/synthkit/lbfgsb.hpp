#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace synthkit {

/// Objective value; fills `grad` when it is non-null.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct LbfgsbOptions {
  int memory = 10;
  int max_iterations = 500;
  /// Stop when the projected gradient's infinity norm drops below this.
  double gradient_tolerance = 1e-6;
  /// Box bounds; empty means unbounded on that side.
  Eigen::VectorXd lower, upper;
  /// Use central differences instead of the objective's gradient.
  bool numerical_gradient = false;
  double fd_step = 1e-6;
};

struct LbfgsbResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
  /// Objective at the start and after every accepted step.
  std::vector<double> history;
};

/**
 * Limited-memory BFGS with box constraints.
 *
 * Steps are projected onto the box and accepted under an Armijo backtracking
 * search, so the recorded objective never increases.
 */
LbfgsbResult minimize_lbfgsb(const Objective& f, Eigen::VectorXd x0, const LbfgsbOptions& options = {});

/// Central-difference gradient of `f` at `x`.
Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double h = 1e-6);

}  // namespace synthkit
