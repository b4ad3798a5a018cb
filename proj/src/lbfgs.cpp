#include "lvgp/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace lvgp {

namespace {

double eval_safe(const Objective& f, const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  try {
    double v = f(x, g);
    if (!std::isfinite(v) || !g.allFinite()) return std::numeric_limits<double>::infinity();
    return v;
  } catch (const std::exception&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                           const LbfgsOptions& opts) {
  const int n = static_cast<int>(x0.size());
  LbfgsResult res;
  res.x = x0;

  Eigen::VectorXd g(n);
  double fx = eval_safe(f, res.x, g);
  if (!std::isfinite(fx)) {
    res.value = fx;
    res.message = "objective not finite at start";
    return res;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    res.iterations = iter;
    if (g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = g;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (m > 0) {
      const double gamma = s_hist[m - 1].dot(y_hist[m - 1]) / y_hist[m - 1].squaredNorm();
      q *= gamma;
    }
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    double dg = dir.dot(g);
    if (dg >= 0.0) {  // not a descent direction; reset to steepest descent
      dir = -g;
      dg = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    const double c1 = 1e-4;
    Eigen::VectorXd x_new(n), g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < opts.max_linesearch; ++ls) {
      x_new = res.x + step * dir;
      f_new = eval_safe(f, x_new, g_new);
      if (f_new <= fx + c1 * step * dg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.message = "line search failed";
      break;
    }

    Eigen::VectorXd s = x_new - res.x;
    Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    res.x = std::move(x_new);
    fx = f_new;
    g = std::move(g_new);
  }
  res.value = fx;
  if (res.message.empty() && !res.converged) res.message = "max iterations reached";
  return res;
}

}  // namespace lvgp
