#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace lvgp {

struct LbfgsOptions {
  int max_iters = 500;
  double grad_tol = 1e-6;  // stop when ||g||_inf <= grad_tol
  int history = 10;
  int max_linesearch = 40;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;  // minimized objective at x
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Minimizes f(x) with analytic gradients by limited-memory BFGS with a
/// backtracking Armijo line search. The objective may signal an infeasible
/// point by returning a non-finite value (or throwing); the line search
/// backtracks past it.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

LbfgsResult lbfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                           const LbfgsOptions& opts = {});

}  // namespace lvgp
