#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lvgp/hyperparams.hpp"

namespace lvgp {

/// A point set with its qualitative inputs already mapped into latent
/// coordinates. Training/query points derive `lat[j]` by looking up the
/// level's row of Z; inducing points carry their coordinates directly.
struct EmbeddedPoints {
  Eigen::MatrixXd x;                   // N x I, scaled inputs
  std::vector<Eigen::MatrixXd> lat;    // per qual var: N x d_j

  int n() const {
    return static_cast<int>(x.size() > 0 ? x.rows() : lat.empty() ? 0 : lat[0].rows());
  }
};

/// Look up the latent coordinates for each row's levels (1-based).
EmbeddedPoints embed(const Eigen::MatrixXd& x, const Eigen::MatrixXi& levels,
                     const HyperParams& theta);

/// Covariance between a single pair of inputs:
///   sigma^2 * exp(-1/2 sum_i (x_i - x'_i)^2 / omega_i^2
///             -1/2 sum_j ||z_j - z'_j||^2).
/// The latent length-scales are unity; they are absorbed into the map.
double lvgp_cov(const Eigen::VectorXd& x1, const Eigen::VectorXi& lev1,
                const Eigen::VectorXd& x2, const Eigen::VectorXi& lev2,
                const HyperParams& theta);

/// Noiseless Na x Nb covariance matrix between two embedded sets.
Eigen::MatrixXd cov(const EmbeddedPoints& a, const EmbeddedPoints& b,
                    const HyperParams& theta);

/// Symmetric covariance of a set with itself (no noise, no jitter).
Eigen::MatrixXd cov(const EmbeddedPoints& a, const HyperParams& theta);

/// Gradient of sum_{n,m} S(n,m) * K(n,m) with respect to log sigma^2, the
/// log length-scales, the quantitative coordinates of either side, and the
/// latent coordinates of either side. K must be cov(a, b, theta).
struct CovGrad {
  double log_sigma2 = 0.0;
  Eigen::VectorXd log_omega;           // I
  Eigen::MatrixXd x_a, x_b;            // same shapes as a.x / b.x
  std::vector<Eigen::MatrixXd> lat_a, lat_b;
};
CovGrad cov_grad(const Eigen::MatrixXd& S, const EmbeddedPoints& a,
                 const EmbeddedPoints& b, const HyperParams& theta,
                 const Eigen::MatrixXd& K, bool want_x_grads = false);

/// Scatter a per-point latent-coordinate gradient (N x d) back onto the
/// rows of Z (L x d) via the level indices of column j.
Eigen::MatrixXd scatter_to_levels(const Eigen::MatrixXd& lat_grad,
                                  const Eigen::MatrixXi& levels, int j, int L);

/// Jitter escalation policy: candidates are sigma2 * {1e-8 ... 1e-4}.
std::vector<double> jitter_ladder(double sigma2);

}  // namespace lvgp
