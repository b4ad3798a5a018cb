#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace lvgp {

/// L x L covariance matrix across levels: entry (l1, l2) is
/// exp(-1/2 ||z(l1) - z(l2)||^2). Symmetric, unit diagonal, entries in
/// (0, 1].
Eigen::MatrixXd level_cov(const Eigen::MatrixXd& z);

struct RepresentativeConfig {
  int restarts = 4;
  std::uint64_t seed = 0;
  int max_iters = 500;
};

struct RepresentativeResult {
  Eigen::MatrixXd z;       // L x d, constrained frame, canonical signs
  double objective = 0.0;  // mean Frobenius discrepancy at the optimum
};

/// Representative latent matrix: minimizes the average Frobenius
/// discrepancy between its level covariance matrix and those of the draws,
/// over the constrained frame (Z[l, r] = 0 for l <= d, r >= l). Solved by
/// multi-start gradient descent over the free entries; column signs are
/// canonicalized so the first nonzero entry of each column is nonnegative.
RepresentativeResult representative_latent(const std::vector<Eigen::MatrixXd>& draws,
                                           int d, const RepresentativeConfig& config = {});

}  // namespace lvgp
