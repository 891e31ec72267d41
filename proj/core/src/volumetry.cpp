#include "synthkit/volumetry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "synthkit/lbfgsb.hpp"
#include "text_util.hpp"

namespace synthkit {

std::string to_string(Direction d) { return d == Direction::decreasing ? "decreasing" : "increasing"; }

Direction parse_direction(const std::string& s) {
  if (s == "decreasing") return Direction::decreasing;
  if (s == "increasing") return Direction::increasing;
  throw std::invalid_argument("unknown direction: " + s + " (expected decreasing or increasing)");
}

CubicBSpline AgeingModel::spline() const { return CubicBSpline(age_min(), age_max(), kAgeingBreakpoints); }

double AgeingModel::curve(double age) const {
  const Eigen::VectorXd b = spline().basis(age);
  return b.dot(Eigen::Map<const Eigen::VectorXd>(spline_coeffs.data(), static_cast<Eigen::Index>(spline_coeffs.size())));
}

double AgeingModel::curve_slope(double age) const {
  const Eigen::VectorXd b = spline().derivative(age);
  return b.dot(Eigen::Map<const Eigen::VectorXd>(spline_coeffs.data(), static_cast<Eigen::Index>(spline_coeffs.size())));
}

Eigen::MatrixXd bspline_design(const std::vector<double>& ages, double a_min, double a_max) {
  return CubicBSpline(a_min, a_max, kAgeingBreakpoints).design(ages);
}

namespace {

void check_samples(const std::vector<VolumeSample>& samples) {
  for (const auto& s : samples) {
    if (!std::isfinite(s.age)) throw std::invalid_argument("sample " + s.subject + ": age is not finite");
    if (!(s.volume >= 0.0) || !std::isfinite(s.volume))
      throw std::invalid_argument("sample " + s.subject + ": volume must be finite and >= 0");
    if (s.gender != 0 && s.gender != 1) throw std::invalid_argument("sample " + s.subject + ": gender must be 0 or 1");
    for (double sp : s.spacing)
      if (!(sp > 0.0)) throw std::invalid_argument("sample " + s.subject + ": spacing must be > 0");
  }
}

struct Problem {
  Eigen::MatrixXd X;  // n x 16, normalised age basis then spacing and gender
  Eigen::VectorXd y;  // volumes / scale
  Eigen::MatrixXd D;  // derivative of the basis on the penalty grid
  double scale = 1.0;
};

Problem build_problem(const std::vector<VolumeSample>& samples, double a_min, double a_max, double scale) {
  const CubicBSpline unit(0.0, 1.0, kAgeingBreakpoints);
  const int nb = unit.size();
  const auto n = static_cast<Eigen::Index>(samples.size());
  Problem p;
  p.scale = scale;
  p.X.resize(n, kAgeingParameters);
  p.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    const double u = std::clamp((s.age - a_min) / (a_max - a_min), 0.0, 1.0);
    p.X.row(i).head(nb) = unit.basis(u).transpose();
    for (int k = 0; k < 3; ++k) p.X(i, nb + k) = s.spacing[k];
    p.X(i, nb + 3) = s.gender;
    p.y[i] = s.volume / scale;
  }
  std::vector<double> grid(kPenaltyGridSize);
  for (int t = 0; t < kPenaltyGridSize; ++t) grid[t] = static_cast<double>(t) / (kPenaltyGridSize - 1);
  p.D = unit.derivative_design(grid);
  return p;
}

double volume_scale(const std::vector<VolumeSample>& samples) {
  double sum = 0.0;
  for (const auto& s : samples) sum += std::abs(s.volume);
  const double m = sum / static_cast<double>(samples.size());
  return m > 0.0 ? m : 1.0;
}

AgeingModel fit_on_domain(const std::vector<VolumeSample>& samples, double lambda, Direction direction,
                          const FitOptions& options, double a_min, double a_max) {
  check_samples(samples);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("fit_ageing: lambda must be >= 0");
  if (samples.size() < static_cast<std::size_t>(kAgeingParameters))
    throw IllPosedError("fit_ageing: " + std::to_string(samples.size()) + " samples for " +
                            std::to_string(kAgeingParameters) + " parameters",
                        std::numeric_limits<double>::infinity());
  if (!(a_max > a_min))
    throw IllPosedError("fit_ageing: ages do not span an interval", std::numeric_limits<double>::infinity());

  const Problem p = build_problem(samples, a_min, a_max, volume_scale(samples));
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(p.X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  if (!(cond < 1e10)) {
    std::ostringstream os;
    os << "fit_ageing: design matrix is rank deficient (condition number " << cond << ", singular values";
    for (Eigen::Index i = 0; i < sv.size(); ++i) os << ' ' << sv[i];
    os << "); check that ages, spacings and genders vary across samples";
    throw IllPosedError(os.str(), cond);
  }

  const double sigma = direction == Direction::decreasing ? 1.0 : -1.0;
  const int nb = static_cast<int>(p.D.cols());
  const Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    const Eigen::VectorXd r = p.y - p.X * theta;
    const Eigen::VectorXd h = (sigma * (p.D * theta.head(nb))).cwiseMax(0.0);
    if (grad != nullptr) {
      *grad = -2.0 * (p.X.transpose() * r);
      grad->head(nb) += 2.0 * lambda * sigma * (p.D.transpose() * h);
    }
    return r.squaredNorm() + lambda * h.squaredNorm();
  };

  LbfgsbOptions opt;
  opt.max_iterations = options.max_iterations;
  opt.gradient_tolerance = options.gradient_tolerance;
  const Eigen::VectorXd start = svd.solve(p.y);
  const LbfgsbResult res = minimize_lbfgsb(objective, start, opt);

  AgeingModel m;
  m.knots = CubicBSpline(a_min, a_max, kAgeingBreakpoints).breakpoints();
  for (int k = 0; k < nb; ++k) m.spline_coeffs.push_back(res.x[k] * p.scale);
  for (int k = 0; k < 3; ++k) m.spacing_slopes[k] = res.x[nb + k] * p.scale;
  m.gender_offset = res.x[nb + 3] * p.scale;
  m.monotonicity_weight = lambda;
  m.direction = direction;
  m.objective = res.value;
  m.rss = (p.y - p.X * res.x).squaredNorm() * p.scale * p.scale;
  m.iterations = res.iterations;
  m.converged = res.converged;
  m.objective_history = res.history;
  return m;
}

std::pair<double, double> age_domain(const std::vector<VolumeSample>& samples) {
  if (samples.empty()) throw IllPosedError("fit_ageing: no samples", std::numeric_limits<double>::infinity());
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(),
                                            [](const auto& a, const auto& b) { return a.age < b.age; });
  return {lo->age, hi->age};
}

}  // namespace

AgeingModel fit_ageing(const std::vector<VolumeSample>& samples, double lambda, Direction direction,
                       const FitOptions& options) {
  const auto [lo, hi] = age_domain(samples);
  return fit_on_domain(samples, lambda, direction, options, lo, hi);
}

std::vector<double> default_lambda_grid() {
  std::vector<double> g{0.0};
  for (int e = -2; e <= 8; ++e) g.push_back(std::pow(10.0, e));
  return g;
}

LambdaSelection select_lambda(const std::vector<VolumeSample>& samples, Direction direction,
                              const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("select_lambda: empty grid");
  const auto [lo, hi] = age_domain(samples);
  std::vector<VolumeSample> train, held;
  for (std::size_t i = 0; i < samples.size(); ++i) (i % 5 == 4 ? held : train).push_back(samples[i]);
  if (held.size() < 2) throw IllPosedError("select_lambda: too few samples to hold out", 0.0);

  LambdaSelection sel;
  std::size_t best = 0;
  for (double lambda : grid) {
    const AgeingModel m = fit_on_domain(train, lambda, direction, {}, lo, hi);
    std::vector<double> err;
    for (const auto& s : held) {
      const double e = s.volume - predict(m, s.age, s.gender, s.spacing);
      err.push_back(e * e);
    }
    double mean = 0.0;
    for (double e : err) mean += e;
    mean /= static_cast<double>(err.size());
    double var = 0.0;
    for (double e : err) var += (e - mean) * (e - mean);
    var /= static_cast<double>(err.size() - 1);
    sel.scores.push_back({lambda, mean, std::sqrt(var / static_cast<double>(err.size()))});
    if (mean < sel.scores[best].mean_sq_error) best = sel.scores.size() - 1;
  }
  const double threshold = sel.scores[best].mean_sq_error + sel.scores[best].std_error;
  sel.lambda = sel.scores[best].lambda;
  for (const auto& s : sel.scores)
    if (s.mean_sq_error <= threshold && s.lambda > sel.lambda) sel.lambda = s.lambda;
  return sel;
}

double predict(const AgeingModel& model, double age, int gender, const Vec3& spacing) {
  double v = model.curve(age) + model.gender_offset * gender;
  for (int k = 0; k < 3; ++k) v += model.spacing_slopes[k] * spacing[k];
  return v;
}

double monotonicity_violation(const AgeingModel& model, double scale, int points) {
  const double sigma = model.direction == Direction::decreasing ? 1.0 : -1.0;
  const double span = model.age_max() - model.age_min();
  double worst = 0.0;
  for (int t = 0; t < points; ++t) {
    const double age = model.age_min() + span * t / (points - 1);
    worst = std::max(worst, sigma * model.curve_slope(age) * span / scale);
  }
  return worst;
}

std::vector<VolumeSample> parse_volume_csv(const std::string& text) {
  std::vector<VolumeSample> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 8)
      throw std::invalid_argument("volume csv line " + std::to_string(lineno) + ": expected 8 fields, got " +
                                  std::to_string(f.size()));
    if (f[0] == "subject") continue;
    const std::string where = "volume csv line " + std::to_string(lineno);
    VolumeSample s;
    s.subject = f[0];
    s.age = detail::parse_double(f[1], where + " age");
    s.gender = static_cast<int>(detail::parse_int(f[2], where + " gender"));
    for (int k = 0; k < 3; ++k) s.spacing[k] = detail::parse_double(f[3 + k], where + " spacing");
    s.region = f[6];
    s.volume = detail::parse_double(f[7], where + " volume");
    out.push_back(std::move(s));
  }
  check_samples(out);
  return out;
}

std::vector<VolumeSample> read_volume_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_volume_csv(os.str());
}

std::vector<VolumeSample> filter_region(const std::vector<VolumeSample>& samples, const std::string& region) {
  std::vector<VolumeSample> out;
  for (const auto& s : samples)
    if (s.region == region) out.push_back(s);
  return out;
}

std::string coefficients_csv(const AgeingModel& m) {
  std::ostringstream os;
  os << "parameter,value\n";
  for (std::size_t i = 0; i < m.knots.size(); ++i) os << "knot_" << i << ',' << detail::format_double(m.knots[i]) << '\n';
  for (std::size_t i = 0; i < m.spline_coeffs.size(); ++i)
    os << "spline_" << i << ',' << detail::format_double(m.spline_coeffs[i]) << '\n';
  const char* axes = "xyz";
  for (int k = 0; k < 3; ++k) os << "spacing_slope_" << axes[k] << ',' << detail::format_double(m.spacing_slopes[k]) << '\n';
  os << "gender_offset," << detail::format_double(m.gender_offset) << '\n';
  os << "lambda," << detail::format_double(m.monotonicity_weight) << '\n';
  os << "direction," << to_string(m.direction) << '\n';
  os << "rss," << detail::format_double(m.rss) << '\n';
  os << "iterations," << m.iterations << '\n';
  os << "converged," << (m.converged ? 1 : 0) << '\n';
  return os.str();
}

std::string trajectory_csv(const AgeingModel& m, int points, const Vec3& spacing) {
  if (points < 2) throw std::invalid_argument("trajectory needs at least 2 points");
  std::ostringstream os;
  os << "age,curve,gender0,gender1\n";
  for (int t = 0; t < points; ++t) {
    const double age = t + 1 == points ? m.age_max() : m.age_min() + (m.age_max() - m.age_min()) * t / (points - 1);
    os << detail::format_double(age) << ',' << detail::format_double(m.curve(age)) << ','
       << detail::format_double(predict(m, age, 0, spacing)) << ','
       << detail::format_double(predict(m, age, 1, spacing)) << '\n';
  }
  return os.str();
}

}  // namespace synthkit
