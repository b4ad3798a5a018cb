#include "lvgp/gp_exact.hpp"

#include <cmath>

#include "lvgp/errors.hpp"

namespace lvgp {

FactorizedModel factorize(const HyperParams& theta, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXi& levels, const Eigen::VectorXd& y) {
  FactorizedModel m;
  m.theta = theta;
  m.levels = levels;
  m.y = y;
  m.train = embed(x, levels, theta);
  m.k_noiseless = cov(m.train, theta);

  const int N = static_cast<int>(y.size());
  Eigen::MatrixXd sigma = m.k_noiseless;
  sigma.diagonal().array() += theta.noise;

  // Attempt a jitter-free factorization first; escalate through the ladder
  // only when the Cholesky reports failure.
  std::vector<double> rungs = jitter_ladder(theta.sigma2);
  rungs.insert(rungs.begin(), 0.0);
  double attempted = 0.0;
  for (double jit : rungs) {
    attempted = jit;
    Eigen::MatrixXd trial = sigma;
    trial.diagonal().array() += jit;
    m.llt.compute(trial);
    if (m.llt.info() == Eigen::Success) {
      m.jitter = jit;
      Eigen::VectorXd resid = y.array() - theta.mu;
      m.alpha = m.llt.solve(resid);
      return m;
    }
  }
  throw NumericalError("covariance factorization failed for N=" + std::to_string(N) +
                       " after jitter escalation up to " + std::to_string(attempted));
}

double log_likelihood(const FactorizedModel& model) {
  const int N = model.n();
  const Eigen::VectorXd resid = model.y.array() - model.theta.mu;
  double log_det = 0.0;
  const auto& L = model.llt.matrixLLT();
  for (int i = 0; i < N; ++i) log_det += 2.0 * std::log(L(i, i));
  return -0.5 * N * std::log(2.0 * M_PI) - 0.5 * log_det -
         0.5 * resid.dot(model.alpha);
}

double log_likelihood(const HyperParams& theta, const Dataset& data) {
  return log_likelihood(factorize(theta, data.x, data.levels, data.y));
}

LikelihoodGrad log_likelihood_grad(const FactorizedModel& model, double noise_floor) {
  const int N = model.n();
  const HyperParams& theta = model.theta;

  // S = 1/2 (alpha alpha^T - Sigma^{-1}); dL = tr(S dSigma).
  Eigen::MatrixXd sigma_inv =
      model.llt.solve(Eigen::MatrixXd::Identity(N, N));
  Eigen::MatrixXd S =
      0.5 * (model.alpha * model.alpha.transpose() - sigma_inv);

  CovGrad cg = cov_grad(S, model.train, model.train, theta, model.k_noiseless);

  LikelihoodGrad g;
  g.mu = model.alpha.sum();
  g.log_sigma2 = cg.log_sigma2 + model.jitter * S.trace();  // jitter scales with sigma2
  g.log_omega = cg.log_omega;
  g.noise_raw = (theta.noise - noise_floor) * S.trace();

  const int J = theta.num_qual();
  g.raw.resize(J);
  for (int j = 0; j < J; ++j) {
    const auto& lm = theta.latent_maps[j];
    Eigen::MatrixXd gz = scatter_to_levels(cg.lat_a[j] + cg.lat_b[j], model.levels, j,
                                           lm.L());
    auto [z, jac] = latent_from_raw_with_jacobian(lm.raw);
    (void)z;
    // gz is column-major; the jacobian uses row-major vec indices.
    Eigen::VectorXd gz_rm(lm.L() * lm.d());
    for (int l = 0; l < lm.L(); ++l)
      for (int r = 0; r < lm.d(); ++r) gz_rm[l * lm.d() + r] = gz(l, r);
    g.raw[j] = jac * gz_rm;
  }
  return g;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> predict(const FactorizedModel& model,
                                                    const Eigen::MatrixXd& xs,
                                                    const Eigen::MatrixXi& levels) {
  EmbeddedPoints query = embed(xs, levels, model.theta);
  Eigen::MatrixXd ks = cov(model.train, query, model.theta);  // N x Ns
  Eigen::VectorXd mean =
      Eigen::VectorXd::Constant(query.n(), model.theta.mu) + ks.transpose() * model.alpha;
  Eigen::MatrixXd v = model.llt.solve(ks);
  Eigen::VectorXd var =
      Eigen::VectorXd::Constant(query.n(), model.theta.sigma2) -
      (ks.array() * v.array()).colwise().sum().transpose().matrix();
  const double tol = -1e-10 * std::max(1.0, model.theta.sigma2);
  for (int i = 0; i < var.size(); ++i) {
    if (var[i] < tol)
      throw InternalError("predictive variance " + std::to_string(var[i]) +
                          " below clamping tolerance");
    if (var[i] < 0.0) var[i] = 0.0;
  }
  return {std::move(mean), std::move(var)};
}

}  // namespace lvgp
