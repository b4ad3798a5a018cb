#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace lvgp {

/// Log target density with gradient; returns log p(x) and fills grad.
using LogDensity = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct NutsOptions {
  int warmup = 500;
  int draws = 250;
  double target_accept = 0.8;
  int max_depth = 10;
  std::uint64_t seed = 0;
};

struct NutsChainResult {
  Eigen::MatrixXd draws;        // draws x dim, post-warmup
  int divergences = 0;          // post-warmup divergent transitions
  double step_size = 0.0;       // adapted step size
  Eigen::VectorXd inv_mass;     // adapted diagonal inverse mass
  double mean_accept = 0.0;     // post-warmup mean acceptance statistic
  long num_gradient_evals = 0;
};

/// One chain of the No-U-Turn sampler: slice-based tree doubling, dual
/// averaging step-size adaptation toward target_accept during warmup, and
/// diagonal mass-matrix estimation from the middle of the warmup phase.
NutsChainResult nuts_chain(const LogDensity& target, const Eigen::VectorXd& init,
                           const NutsOptions& opts);

}  // namespace lvgp
