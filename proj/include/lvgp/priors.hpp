#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lvgp/gp_exact.hpp"
#include "lvgp/hyperparams.hpp"
#include "lvgp/input_space.hpp"

namespace lvgp {

struct NormalPrior {
  double loc = 0.0;
  double scale = 1.0;
  double logpdf(double x) const;
  double dlogpdf(double x) const;  // d/dx
};

/// Prior configuration. The latent-variable prior is fixed by construction:
/// raw latents are iid Normal(0, 1/(L gamma)) per variable, with a
/// Gamma(alpha, alpha - 1) hyperprior on each precision so its mode sits at
/// gamma = 1. The remaining hyperparameters take configurable normal priors
/// on the (log-transformed) values. `flat` turns every prior off; it is
/// intended for maximum-likelihood fitting only, not for MCMC.
struct PriorSpec {
  double alpha = 2.0;  // gamma concentration, > 1; rate is alpha - 1
  NormalPrior mean{0.0, 1.0};
  NormalPrior log_variance{0.0, 1.0};
  NormalPrior log_lengthscale{0.0, 1.0};
  NormalPrior log_noise{-4.0, 2.0};
  bool flat = false;

  std::string to_json() const;
  static PriorSpec from_json(const std::string& text);
};

/// Fixed ordering of the unconstrained parameter vector:
///   mu, log sigma2, log omega_1..I, noise parameter v
///   (noise = floor + exp(v)), raw latents per variable (row-major),
///   log gamma per variable.
class ParamLayout {
 public:
  ParamLayout(int num_quant, std::vector<int> levels, std::vector<int> latent_dims,
              double noise_floor = 1e-8);
  static ParamLayout for_space(const InputSpace& space, int latent_dim = 2,
                               double noise_floor = 1e-8);

  int size() const { return size_; }
  int num_quant() const { return I_; }
  int num_qual() const { return static_cast<int>(L_.size()); }
  int levels(int j) const { return L_[j]; }
  int latent_dim(int j) const { return d_[j]; }
  double noise_floor() const { return noise_floor_; }

  int mu_index() const { return 0; }
  int log_sigma2_index() const { return 1; }
  int log_omega_index(int i) const { return 2 + i; }
  int noise_index() const { return 2 + I_; }
  int raw_index(int j) const { return raw_offset_[j]; }
  int log_gamma_index(int j) const { return gamma_offset_ + j; }

  std::string param_name(int k) const;

  /// Unconstrained -> constrained. If log_jacobian is non-null it receives
  /// the sum of the log derivatives of the positive-parameter transforms.
  HyperParams unpack(const Eigen::VectorXd& v, double* log_jacobian = nullptr) const;
  Eigen::VectorXd pack(const HyperParams& theta) const;

 private:
  int I_;
  std::vector<int> L_, d_;
  double noise_floor_;
  std::vector<int> raw_offset_;
  int gamma_offset_ = 0;
  int size_ = 0;
};

/// Log prior density over the constrained hyperparameters. Flat mode
/// returns 0 regardless of theta.
double log_prior(const HyperParams& theta, const PriorSpec& spec);

/// Gradient of log_prior + log-Jacobian with respect to the unconstrained
/// vector (the prior-and-transform part of the posterior gradient).
Eigen::VectorXd log_prior_grad_unconstrained(const Eigen::VectorXd& v,
                                             const ParamLayout& layout,
                                             const PriorSpec& spec);

/// Log posterior (likelihood + prior + transform Jacobian) evaluated on the
/// unconstrained vector, with its gradient. Throws NumericalError on a
/// non-finite gradient entry, naming the parameter.
double log_posterior_u(const Eigen::VectorXd& v, const Dataset& data,
                       const ParamLayout& layout, const PriorSpec& spec,
                       Eigen::VectorXd* grad = nullptr);

/// Assemble a full unconstrained gradient vector from the likelihood parts.
Eigen::VectorXd flatten_likelihood_grad(const LikelihoodGrad& g,
                                        const ParamLayout& layout);

/// Draw an unconstrained start point from the priors (latents from the LV
/// prior with gamma = 1).
Eigen::VectorXd sample_start(const ParamLayout& layout, const PriorSpec& spec,
                             std::uint64_t seed);

}  // namespace lvgp
