#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lvgp/inference.hpp"
#include "lvgp/input_space.hpp"
#include "lvgp/priors.hpp"

namespace lvgp {

enum class SparseMethod { FITC, VFE };

/// M inducing points: free quantitative coordinates plus, per qualitative
/// variable, simplex weight rows that place the latent coordinates in the
/// convex hull of the level latents: u_m = sum_l psi_{ml} z(l).
struct InducingSet {
  Eigen::MatrixXd x;                 // M x I
  std::vector<Eigen::MatrixXd> psi;  // per qual var: M x L_j, rows on the simplex

  int m() const { return static_cast<int>(x.rows() > 0 ? x.rows() : psi.empty() ? 0 : psi[0].rows()); }
};

/// Latent coordinates of the inducing points under the given maps.
std::vector<Eigen::MatrixXd> inducing_from_weights(const InducingSet& inducing,
                                                   const HyperParams& theta);

/// Stick-breaking bijection between L-1 unconstrained reals and a simplex
/// row of length L (zero maps to the uniform weights).
Eigen::VectorXd simplex_from_sticks(const Eigen::VectorXd& sticks);
Eigen::VectorXd sticks_from_simplex(const Eigen::VectorXd& psi);
/// Jacobian d psi / d sticks, L x (L-1).
Eigen::MatrixXd simplex_jacobian(const Eigen::VectorXd& sticks);

/// Flat layout for the joint sparse parameter vector:
/// [theta (ParamLayout) | inducing x (row-major M x I) | sticks per var].
class SparseLayout {
 public:
  SparseLayout(ParamLayout theta_layout, int m);
  int size() const { return size_; }
  const ParamLayout& theta() const { return theta_; }
  int m() const { return m_; }
  int x_index() const { return theta_.size(); }
  int sticks_index(int j) const { return sticks_offset_[j]; }

  InducingSet unpack_inducing(const Eigen::VectorXd& v) const;
  Eigen::VectorXd pack(const Eigen::VectorXd& theta_v, const InducingSet& inducing) const;

 private:
  ParamLayout theta_;
  int m_;
  std::vector<int> sticks_offset_;
  int size_ = 0;
};

/// FITC / VFE likelihood objective in its rank-M form (no N x N dense
/// matrix is ever materialized). If grads are requested, `grad_theta` gets
/// the unconstrained-theta part and `grad_inducing` the inducing part
/// (quantitative coordinates then sticks, matching SparseLayout order past
/// the theta block). When freeze_psi_latents is set the inducing latent
/// coordinates still track Z but psi gradients are not produced (used when
/// inducing parameters are frozen during sampling).
struct SparseEval {
  double value = 0.0;
  Eigen::VectorXd grad_theta;
  Eigen::VectorXd grad_inducing;
};
SparseEval sparse_objective(const Eigen::VectorXd& theta_v, const InducingSet& inducing,
                            const Dataset& data, SparseMethod method,
                            const ParamLayout& layout, bool want_grads,
                            bool want_inducing_grads = true,
                            const std::vector<Eigen::MatrixXd>* frozen_u = nullptr);

struct SparseFitConfig {
  int m = 50;
  int restarts = 8;
  std::uint64_t seed = 0;
  int max_iters = 500;
  int threads = 0;
};

struct SparseFitResult {
  MapFitResult map;
  InducingSet inducing;
};

/// Joint MAP over theta and the inducing parameters against the sparse
/// objective plus the log prior.
SparseFitResult fit_sparse_map(const Dataset& data, const ParamLayout& layout,
                               const PriorSpec& spec, SparseMethod method,
                               const SparseFitConfig& config);

/// NUTS over theta only, inducing parameters frozen. By default the weights
/// psi are frozen and the latent coordinates move with the current draw's
/// Z; set freeze_coordinates to pin the coordinates computed from
/// `reference` instead.
PosteriorSamples sample_sparse_posterior(const Dataset& data, const ParamLayout& layout,
                                         const PriorSpec& spec, SparseMethod method,
                                         const InducingSet& inducing,
                                         const SamplerConfig& config,
                                         bool freeze_coordinates = false,
                                         const HyperParams* reference = nullptr);

/// Rank-M predictive mean/variance (standardized scale).
std::pair<Eigen::VectorXd, Eigen::VectorXd> sparse_predict(
    const HyperParams& theta, const InducingSet& inducing, const Dataset& data,
    const Eigen::MatrixXd& xs, const Eigen::MatrixXi& levels, SparseMethod method,
    const std::vector<Eigen::MatrixXd>* frozen_u = nullptr);

/// Default inducing initialization: k-means++ centers on the training
/// quantitative inputs; weights concentrated on the M most frequent joint
/// level patterns.
InducingSet init_inducing(const Dataset& data, const ParamLayout& layout, int m,
                          std::uint64_t seed);

}  // namespace lvgp
