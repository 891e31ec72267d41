#include "synthkit/bspline.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace synthkit {

CubicBSpline::CubicBSpline(double lo, double hi, int breakpoints) : lo_(lo), hi_(hi) {
  if (breakpoints < 2) throw std::invalid_argument("bspline: need at least 2 breakpoints");
  if (!(hi > lo)) throw std::invalid_argument("bspline: empty domain");
  knots_.assign(3, lo);
  for (int i = 0; i < breakpoints; ++i) {
    // Pin the last breakpoint so rounding cannot move it off `hi`.
    knots_.push_back(i + 1 == breakpoints ? hi : lo + (hi - lo) * i / (breakpoints - 1));
  }
  knots_.insert(knots_.end(), 3, hi);
}

std::vector<double> CubicBSpline::breakpoints() const { return {knots_.begin() + 3, knots_.end() - 3}; }

void CubicBSpline::check(double x) const {
  if (!(x >= lo_ && x <= hi_)) {
    std::ostringstream os;
    os << "bspline: " << x << " outside domain [" << lo_ << ", " << hi_ << "]";
    throw std::invalid_argument(os.str());
  }
}

// Index j with knots[j] <= x < knots[j+1]; the right end belongs to the last span.
int CubicBSpline::span(double x) const {
  const int last = static_cast<int>(knots_.size()) - 5;
  if (x >= hi_) return last;
  const auto it = std::upper_bound(knots_.begin() + 3, knots_.end() - 3, x);
  return std::min(last, static_cast<int>(it - knots_.begin()) - 1);
}

Eigen::VectorXd CubicBSpline::basis(double x) const {
  check(x);
  const int j = span(x);
  // de Boor's triangular scheme for the four nonzero functions.
  double N[4] = {1.0, 0.0, 0.0, 0.0};
  double left[4], right[4];
  for (int d = 1; d <= 3; ++d) {
    left[d] = x - knots_[j + 1 - d];
    right[d] = knots_[j + d] - x;
    double saved = 0.0;
    for (int r = 0; r < d; ++r) {
      const double temp = N[r] / (right[r + 1] + left[d - r]);
      N[r] = saved + right[r + 1] * temp;
      saved = left[d - r] * temp;
    }
    N[d] = saved;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  for (int r = 0; r < 4; ++r) out[j - 3 + r] = N[r];
  return out;
}

Eigen::VectorXd CubicBSpline::derivative(double x) const {
  check(x);
  const int j = span(x);
  // Quadratic basis on the same knots, then B'_i = 3 (N_{i,2}/(t_{i+3}-t_i) - N_{i+1,2}/(t_{i+4}-t_{i+1})).
  double N[3] = {1.0, 0.0, 0.0};
  double left[3], right[3];
  for (int d = 1; d <= 2; ++d) {
    left[d] = x - knots_[j + 1 - d];
    right[d] = knots_[j + d] - x;
    double saved = 0.0;
    for (int r = 0; r < d; ++r) {
      const double temp = N[r] / (right[r + 1] + left[d - r]);
      N[r] = saved + right[r + 1] * temp;
      saved = left[d - r] * temp;
    }
    N[d] = saved;
  }
  // Quadratic function k (global index) is nonzero for k in [j-2, j].
  auto quad = [&](int k) { return (k >= j - 2 && k <= j) ? N[k - (j - 2)] : 0.0; };
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  for (int i = j - 3; i <= j; ++i) {
    double v = 0.0;
    const double a = knots_[i + 3] - knots_[i];
    const double b = knots_[i + 4] - knots_[i + 1];
    if (a > 0) v += quad(i) / a;
    if (b > 0) v -= quad(i + 1) / b;
    out[i] = 3.0 * v;
  }
  return out;
}

Eigen::MatrixXd CubicBSpline::design(const std::vector<double>& xs) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), size());
  for (std::size_t r = 0; r < xs.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = basis(xs[r]).transpose();
  return m;
}

Eigen::MatrixXd CubicBSpline::derivative_design(const std::vector<double>& xs) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), size());
  for (std::size_t r = 0; r < xs.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = derivative(xs[r]).transpose();
  return m;
}

}  // namespace synthkit
