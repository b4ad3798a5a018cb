#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lvgp/input_space.hpp"
#include "lvgp/nuts.hpp"
#include "lvgp/priors.hpp"

namespace lvgp {

struct RestartTrace {
  Eigen::VectorXd start;
  double value = 0.0;  // converged log-posterior
  int iterations = 0;
  bool converged = false;
  std::string message;
};

struct MapFitResult {
  HyperParams theta;
  Eigen::VectorXd v;  // unconstrained optimum
  double value = 0.0; // max over restarts
  std::vector<RestartTrace> restarts;
};

struct MapConfig {
  int restarts = 8;
  std::uint64_t seed = 0;
  int max_iters = 500;
  int threads = 0;  // 0 = hardware concurrency
};

/// Multi-start quasi-Newton ascent of the log posterior in unconstrained
/// space; starts are drawn from the priors. Throws NumericalError if every
/// restart fails.
MapFitResult fit_map(const Dataset& data, const ParamLayout& layout,
                     const PriorSpec& spec, const MapConfig& config);

struct ChainDiagnostics {
  int divergences = 0;
  double step_size = 0.0;
  double mean_accept = 0.0;
};

struct PosteriorSamples {
  Eigen::MatrixXd draws;  // B x dim, unconstrained, ordered by (chain, iteration)
  int chains = 0;
  int draws_per_chain = 0;
  std::vector<ChainDiagnostics> chain_diagnostics;
  Eigen::VectorXd split_rhat;  // per scalar parameter
  Eigen::VectorXd ess;         // per scalar parameter
  std::vector<std::string> warnings;

  int b() const { return static_cast<int>(draws.rows()); }
};

struct SamplerConfig {
  int chains = 4;
  int warmup = 500;
  int draws = 250;
  double target_accept = 0.8;
  int max_depth = 10;
  std::uint64_t seed = 0;
  int threads = 0;
};

PosteriorSamples sample_posterior(const Dataset& data, const ParamLayout& layout,
                                  const PriorSpec& spec, const SamplerConfig& config);

/// Run NUTS chains over an arbitrary target (used by the sparse module and
/// by calibration tests); inits are per-chain starting points.
PosteriorSamples run_chains(const LogDensity& target,
                            const std::vector<Eigen::VectorXd>& inits,
                            const SamplerConfig& config);

/// Per query point, B Gaussian components (mean, variance), equally
/// weighted. Standardized scale unless stated otherwise by the caller.
struct PredictiveMixture {
  Eigen::MatrixXd means;      // B x Nq
  Eigen::MatrixXd variances;  // B x Nq

  int components() const { return static_cast<int>(means.rows()); }
  int points() const { return static_cast<int>(means.cols()); }

  Eigen::VectorXd mixture_mean() const;
  Eigen::VectorXd mixture_variance() const;  // within + between
};

PredictiveMixture predictive_mixture(const PosteriorSamples& samples,
                                     const ParamLayout& layout, const Dataset& data,
                                     const Eigen::MatrixXd& xs,
                                     const Eigen::MatrixXi& levels, int threads = 0);

/// Empirical central prediction intervals by Monte Carlo order statistics
/// over the mixture (Algorithm: draw M, sort, take the ceil(alpha M)-th
/// values).
Eigen::MatrixX2d prediction_interval(const PredictiveMixture& mixture,
                                     double level = 0.95, int m_samples = 10000,
                                     std::uint64_t seed = 0);

// Multi-chain diagnostics on a draws array split by chain.
Eigen::VectorXd split_rhat(const Eigen::MatrixXd& draws, int chains);
Eigen::VectorXd effective_sample_size(const Eigen::MatrixXd& draws, int chains);

}  // namespace lvgp
