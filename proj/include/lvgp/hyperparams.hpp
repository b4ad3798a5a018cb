#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lvgp/latent.hpp"

namespace lvgp {

/// Full hyperparameter vector of the model: constant mean, prior variance,
/// per-quantitative-input length-scales, noise variance, one latent map per
/// qualitative variable and its latent-variable precision.
struct HyperParams {
  double mu = 0.0;
  double sigma2 = 1.0;
  Eigen::VectorXd omega;               // I length-scales, positive
  double noise = 1e-6;                 // sigma^2_eps, nonnegative
  std::vector<LatentMap> latent_maps;  // J
  Eigen::VectorXd gamma;               // J precisions, positive

  int num_quant() const { return static_cast<int>(omega.size()); }
  int num_qual() const { return static_cast<int>(latent_maps.size()); }
};

}  // namespace lvgp
