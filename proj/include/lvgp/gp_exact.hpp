#pragma once

#include <Eigen/Dense>

#include "lvgp/input_space.hpp"
#include "lvgp/kernel.hpp"

namespace lvgp {

/// Cholesky factorization of the training covariance plus the solved
/// residual vector. All solves go through the factor; no explicit inverse
/// is formed. Immutable after construction.
struct FactorizedModel {
  HyperParams theta;
  EmbeddedPoints train;
  Eigen::MatrixXi levels;  // training level indices, for latent scatter
  Eigen::VectorXd y;       // standardized responses
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd k_noiseless;  // cached cov without noise/jitter
  Eigen::VectorXd alpha;        // Sigma^{-1} (y - mu 1)
  double jitter = 0.0;          // value actually added to the diagonal

  int n() const { return static_cast<int>(y.size()); }
};

/// Factorize Sigma(theta) = K + noise I + jitter I with the escalating
/// jitter ladder. Throws NumericalError carrying the attempted jitter if
/// every rung fails.
FactorizedModel factorize(const HyperParams& theta, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXi& levels, const Eigen::VectorXd& y);

double log_likelihood(const FactorizedModel& model);
double log_likelihood(const HyperParams& theta, const Dataset& data);

/// Gradient of the log-likelihood with respect to the unconstrained
/// parameters, in layout order (mu, log sigma2, log omega, noise parameter,
/// raw latents per variable, log gamma per variable). The gamma entries are
/// zero: the likelihood does not depend on the precisions.
struct LikelihoodGrad {
  double mu = 0.0;
  double log_sigma2 = 0.0;
  Eigen::VectorXd log_omega;
  double noise_raw = 0.0;  // w.r.t. v where noise = floor + exp(v)
  std::vector<Eigen::VectorXd> raw;  // per qual var, length L_j * d_j
};
LikelihoodGrad log_likelihood_grad(const FactorizedModel& model,
                                   double noise_floor);

/// Posterior mean and variance at query points, on the standardized scale.
/// Variances are clamped to zero above a small negative tolerance; values
/// substantially more negative raise InternalError.
std::pair<Eigen::VectorXd, Eigen::VectorXd> predict(
    const FactorizedModel& model, const Eigen::MatrixXd& xs,
    const Eigen::MatrixXi& levels);

}  // namespace lvgp
