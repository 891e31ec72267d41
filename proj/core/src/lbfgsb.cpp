#include "synthkit/lbfgsb.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace synthkit {

Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    p[i] = x[i] + step;
    const double up = f(p, nullptr);
    p[i] = x[i] - step;
    const double down = f(p, nullptr);
    p[i] = x[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

namespace {

struct Box {
  Eigen::VectorXd lo, hi;

  Box(const LbfgsbOptions& o, Eigen::Index n) {
    const double inf = std::numeric_limits<double>::infinity();
    lo = o.lower.size() == 0 ? Eigen::VectorXd::Constant(n, -inf) : o.lower;
    hi = o.upper.size() == 0 ? Eigen::VectorXd::Constant(n, inf) : o.upper;
    if (lo.size() != n || hi.size() != n) throw std::invalid_argument("lbfgsb: bound sizes differ from x");
    if ((lo.array() > hi.array()).any()) throw std::invalid_argument("lbfgsb: lower bound above upper bound");
  }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

  // x - P(x - g): zero exactly at a stationary point of the bounded problem.
  Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const {
    return x - project(x - g);
  }
};

}  // namespace

LbfgsbResult minimize_lbfgsb(const Objective& f, Eigen::VectorXd x0, const LbfgsbOptions& options) {
  const Eigen::Index n = x0.size();
  const Box box(options, n);
  auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    if (options.numerical_gradient) {
      g = numerical_gradient(f, x, options.fd_step);
      return f(x, nullptr);
    }
    g.resize(n);
    return f(x, &g);
  };

  LbfgsbResult res;
  Eigen::VectorXd x = box.project(x0);
  Eigen::VectorXd g;
  double fx = eval(x, g);
  res.history.push_back(fx);

  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;

  for (;;) {
    const double pg = box.projected_gradient(x, g).lpNorm<Eigen::Infinity>();
    res.gradient_norm = pg;
    if (pg < options.gradient_tolerance) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      break;
    }
    if (res.iterations >= options.max_iterations) {
      res.message = "iteration limit reached";
      break;
    }

    // Variables pinned at a bound with the gradient pushing outward stay fixed.
    Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
    for (Eigen::Index i = 0; i < n; ++i)
      free[i] = !((x[i] <= box.lo[i] && g[i] > 0) || (x[i] >= box.hi[i] && g[i] < 0));
    Eigen::VectorXd q = g;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!free[i]) q[i] = 0.0;

    // Two-loop recursion.
    std::vector<double> alpha(S.size());
    for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
      alpha[k] = rho[k] * S[k].dot(q);
      q -= alpha[k] * Y[k];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * Y[k].dot(q);
      q += (alpha[k] - beta) * S[k];
    }
    Eigen::VectorXd dir = -q;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!free[i]) dir[i] = 0.0;
    if (!(dir.dot(g) < 0)) {
      S.clear(), Y.clear(), rho.clear();
      dir = -g;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!free[i]) dir[i] = 0.0;
    }

    // Armijo backtracking along the projected path.
    double step = S.empty() ? std::min(1.0, 1.0 / std::max(1e-12, dir.lpNorm<Eigen::Infinity>())) : 1.0;
    Eigen::VectorXd xn, gn;
    double fn = fx;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      xn = box.project(x + step * dir);
      fn = eval(xn, gn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * g.dot(xn - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || fn > fx) {
      res.message = "line search failed to decrease the objective";
      break;
    }

    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    x = std::move(xn);
    g = std::move(gn);
    const double previous = fx;
    fx = fn;
    res.history.push_back(fx);
    ++res.iterations;
    if (sy > 1e-12 * y.squaredNorm()) {
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > options.memory) S.pop_front(), Y.pop_front(), rho.pop_front();
    }
    if (s.lpNorm<Eigen::Infinity>() == 0.0 && fx == previous) {
      res.message = "no progress";
      break;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace synthkit
