#include "lvgp/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "lvgp/errors.hpp"
#include "lvgp/kernel.hpp"
#include "lvgp/lbfgs.hpp"

namespace lvgp {

std::vector<Eigen::MatrixXd> inducing_from_weights(const InducingSet& inducing,
                                                   const HyperParams& theta) {
  std::vector<Eigen::MatrixXd> u(inducing.psi.size());
  for (size_t j = 0; j < inducing.psi.size(); ++j)
    u[j] = inducing.psi[j] * theta.latent_maps[j].z;
  return u;
}

Eigen::VectorXd simplex_from_sticks(const Eigen::VectorXd& sticks) {
  const int L = static_cast<int>(sticks.size()) + 1;
  Eigen::VectorXd psi(L);
  double rem = 1.0;
  for (int k = 0; k < L - 1; ++k) {
    const double z = 1.0 / (1.0 + std::exp(-(sticks[k] - std::log(double(L - 1 - k)))));
    psi[k] = rem * z;
    rem -= psi[k];
  }
  psi[L - 1] = rem;
  return psi;
}

Eigen::VectorXd sticks_from_simplex(const Eigen::VectorXd& psi) {
  const int L = static_cast<int>(psi.size());
  Eigen::VectorXd sticks(L - 1);
  double rem = 1.0;
  for (int k = 0; k < L - 1; ++k) {
    double z = psi[k] / std::max(rem, 1e-300);
    z = std::min(std::max(z, 1e-12), 1.0 - 1e-12);
    sticks[k] = std::log(z / (1.0 - z)) + std::log(double(L - 1 - k));
    rem -= psi[k];
  }
  return sticks;
}

Eigen::MatrixXd simplex_jacobian(const Eigen::VectorXd& sticks) {
  const int L = static_cast<int>(sticks.size()) + 1;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(L, L - 1);
  Eigen::VectorXd drem = Eigen::VectorXd::Zero(L - 1);
  double rem = 1.0;
  for (int k = 0; k < L - 1; ++k) {
    const double z = 1.0 / (1.0 + std::exp(-(sticks[k] - std::log(double(L - 1 - k)))));
    const double dz = z * (1.0 - z);
    for (int q = 0; q < L - 1; ++q) jac(k, q) = drem[q] * z;
    jac(k, k) += rem * dz;
    for (int q = 0; q < L - 1; ++q) drem[q] -= jac(k, q);
    rem -= rem * z;
  }
  for (int q = 0; q < L - 1; ++q) jac(L - 1, q) = drem[q];
  return jac;
}

SparseLayout::SparseLayout(ParamLayout theta_layout, int m)
    : theta_(std::move(theta_layout)), m_(m) {
  int off = theta_.size() + m_ * theta_.num_quant();
  sticks_offset_.resize(theta_.num_qual());
  for (int j = 0; j < theta_.num_qual(); ++j) {
    sticks_offset_[j] = off;
    off += m_ * (theta_.levels(j) - 1);
  }
  size_ = off;
}

InducingSet SparseLayout::unpack_inducing(const Eigen::VectorXd& v) const {
  InducingSet ind;
  const int I = theta_.num_quant();
  ind.x.resize(m_, I);
  for (int m = 0; m < m_; ++m)
    for (int i = 0; i < I; ++i) ind.x(m, i) = v[x_index() + m * I + i];
  ind.psi.resize(theta_.num_qual());
  for (int j = 0; j < theta_.num_qual(); ++j) {
    const int L = theta_.levels(j);
    ind.psi[j].resize(m_, L);
    for (int m = 0; m < m_; ++m)
      ind.psi[j].row(m) =
          simplex_from_sticks(v.segment(sticks_index(j) + m * (L - 1), L - 1));
  }
  return ind;
}

Eigen::VectorXd SparseLayout::pack(const Eigen::VectorXd& theta_v,
                                   const InducingSet& inducing) const {
  Eigen::VectorXd v(size_);
  v.head(theta_.size()) = theta_v;
  const int I = theta_.num_quant();
  for (int m = 0; m < m_; ++m)
    for (int i = 0; i < I; ++i) v[x_index() + m * I + i] = inducing.x(m, i);
  for (int j = 0; j < theta_.num_qual(); ++j) {
    const int L = theta_.levels(j);
    for (int m = 0; m < m_; ++m)
      v.segment(sticks_index(j) + m * (L - 1), L - 1) =
          sticks_from_simplex(inducing.psi[j].row(m).transpose());
  }
  return v;
}

SparseEval sparse_objective(const Eigen::VectorXd& theta_v, const InducingSet& inducing,
                            const Dataset& data, SparseMethod method,
                            const ParamLayout& layout, bool want_grads,
                            bool want_inducing_grads,
                            const std::vector<Eigen::MatrixXd>* frozen_u) {
  const HyperParams theta = layout.unpack(theta_v);
  const int N = data.n();
  const int M = inducing.m();

  EmbeddedPoints emb_data = embed(data.x, data.levels, theta);
  EmbeddedPoints emb_ind;
  emb_ind.x = inducing.x;
  emb_ind.lat = frozen_u ? *frozen_u : inducing_from_weights(inducing, theta);

  Eigen::MatrixXd kmm_nl = cov(emb_ind, theta);
  Eigen::MatrixXd kmn = cov(emb_ind, emb_data, theta);

  // Factor K_MM, trying jitter-free first and escalating through the ladder
  // only on Cholesky failure.
  Eigen::LLT<Eigen::MatrixXd> cholM;
  double jit = 0.0;
  bool ok = false;
  std::vector<double> rungs = jitter_ladder(theta.sigma2);
  rungs.insert(rungs.begin(), 0.0);
  for (double j : rungs) {
    Eigen::MatrixXd trial = kmm_nl;
    trial.diagonal().array() += j;
    cholM.compute(trial);
    if (cholM.info() == Eigen::Success) {
      jit = j;
      ok = true;
      break;
    }
  }
  if (!ok) throw NumericalError("singular inducing covariance K_MM after jitter escalation");

  const Eigen::MatrixXd c = cholM.matrixL().solve(kmn);         // M x N
  const Eigen::VectorXd qdiag = c.colwise().squaredNorm();      // diag of Q_NN
  const double noise = theta.noise;

  Eigen::VectorXd g(N);
  Eigen::VectorXd corr = Eigen::VectorXd::Zero(N);
  if (method == SparseMethod::FITC) {
    corr = (Eigen::VectorXd::Constant(N, theta.sigma2) - qdiag).cwiseMax(0.0);
    g = corr.array() + noise;
  } else {
    g.setConstant(noise);
  }

  const Eigen::VectorXd yc = data.y.array() - theta.mu;
  const Eigen::VectorXd inv_g = g.cwiseInverse();

  // B = I + C diag(1/g) C^T, via the scaled rows.
  Eigen::MatrixXd cg = c * inv_g.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(M, M) + cg * cg.transpose();
  Eigen::LLT<Eigen::MatrixXd> cholB(b);
  if (cholB.info() != Eigen::Success)
    throw NumericalError("sparse objective: inner system factorization failed");

  double logdet = g.array().log().sum();
  for (int i = 0; i < M; ++i) logdet += 2.0 * std::log(cholB.matrixLLT()(i, i));

  const Eigen::VectorXd yg = yc.cwiseProduct(inv_g);
  const Eigen::VectorXd t = c * yg;
  const Eigen::VectorXd s = cholB.solve(t);
  const Eigen::VectorXd beta = yg - inv_g.cwiseProduct(c.transpose() * s);

  double trace_term = 0.0;
  double t_sum = 0.0;
  if (method == SparseMethod::VFE) {
    t_sum = (Eigen::VectorXd::Constant(N, theta.sigma2) - qdiag).sum();
    trace_term = t_sum / (2.0 * noise);
  }

  SparseEval out;
  out.value = -0.5 * N * std::log(2.0 * M_PI) - 0.5 * logdet - 0.5 * yc.dot(beta) -
              trace_term;
  if (!want_grads) return out;

  // S = (beta beta^T - A^{-1}) / 2 is never formed; we only need its
  // pairings with the low-rank structure.
  const Eigen::MatrixXd w = cholM.solve(kmn);  // K_MM^{-1} K_MN, M x N
  const Eigen::MatrixXd e = cholB.solve(c);    // B^{-1} C

  // diag(A^{-1})
  Eigen::VectorXd ainv_diag(N);
  for (int n = 0; n < N; ++n)
    ainv_diag[n] =
        inv_g[n] - inv_g[n] * inv_g[n] * c.col(n).dot(e.col(n));
  Eigen::VectorXd sdiag = 0.5 * (beta.array().square() - ainv_diag.array());

  // H = W S, via A^{-1} W^T computed by Woodbury.
  Eigen::MatrixXd v1 = inv_g.asDiagonal() * w.transpose();             // N x M
  Eigen::MatrixXd ainv_wt = v1 - inv_g.asDiagonal() * (c.transpose() * cholB.solve(c * v1));
  Eigen::MatrixXd h = 0.5 * ((w * beta) * beta.transpose() - ainv_wt.transpose());

  Eigen::MatrixXd lambda_mn = 2.0 * h;
  Eigen::MatrixXd lambda_mm = -h * w.transpose();

  double g_log_sigma2 = 0.0;
  double g_noise_raw = (noise - layout.noise_floor()) * sdiag.sum();

  if (method == SparseMethod::FITC) {
    for (int n = 0; n < N; ++n) {
      if (corr[n] <= 0.0) continue;  // clamped diagonal correction
      g_log_sigma2 += sdiag[n] * theta.sigma2;
      lambda_mn.col(n) -= 2.0 * sdiag[n] * w.col(n);
      lambda_mm += sdiag[n] * (w.col(n) * w.col(n).transpose());
    }
  } else {
    const double nf = noise - layout.noise_floor();
    g_noise_raw += nf * t_sum / (2.0 * noise * noise);
    g_log_sigma2 += -0.5 * N * theta.sigma2 / noise;
    lambda_mn += (1.0 / noise) * w;
    lambda_mm -= (0.5 / noise) * (w * w.transpose());
  }

  // Jitter on K_MM scales with sigma2.
  g_log_sigma2 += jit * lambda_mm.trace();

  CovGrad cg1 = cov_grad(lambda_mn, emb_ind, emb_data, theta, kmn, true);
  CovGrad cg2 = cov_grad(lambda_mm, emb_ind, emb_ind, theta, kmm_nl, true);
  g_log_sigma2 += cg1.log_sigma2 + cg2.log_sigma2;

  out.grad_theta = Eigen::VectorXd::Zero(layout.size());
  out.grad_theta[layout.mu_index()] = beta.sum();
  out.grad_theta[layout.log_sigma2_index()] = g_log_sigma2;
  for (int i = 0; i < layout.num_quant(); ++i)
    out.grad_theta[layout.log_omega_index(i)] = cg1.log_omega[i] + cg2.log_omega[i];
  out.grad_theta[layout.noise_index()] = g_noise_raw;

  const int J = layout.num_qual();
  for (int j = 0; j < J; ++j) {
    const auto& lm = theta.latent_maps[j];
    Eigen::MatrixXd gz = scatter_to_levels(cg1.lat_b[j], data.levels, j, lm.L());
    Eigen::MatrixXd du = cg1.lat_a[j] + cg2.lat_a[j] + cg2.lat_b[j];  // M x d
    if (!frozen_u) gz += inducing.psi[j].transpose() * du;
    auto [z, jac] = latent_from_raw_with_jacobian(lm.raw);
    (void)z;
    Eigen::VectorXd gz_rm(lm.L() * lm.d());
    for (int l = 0; l < lm.L(); ++l)
      for (int r = 0; r < lm.d(); ++r) gz_rm[l * lm.d() + r] = gz(l, r);
    out.grad_theta.segment(layout.raw_index(j), lm.L() * lm.d()) = jac * gz_rm;
  }

  if (want_inducing_grads) {
    SparseLayout slayout(layout, M);
    out.grad_inducing = Eigen::VectorXd::Zero(slayout.size() - layout.size());
    const int I = layout.num_quant();
    Eigen::MatrixXd gx = cg1.x_a + cg2.x_a + cg2.x_b;  // M x I
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < I; ++i) out.grad_inducing[m * I + i] = gx(m, i);
    int off = M * I;
    for (int j = 0; j < J; ++j) {
      const int L = layout.levels(j);
      Eigen::MatrixXd du = cg1.lat_a[j] + cg2.lat_a[j] + cg2.lat_b[j];
      Eigen::MatrixXd gpsi = du * theta.latent_maps[j].z.transpose();  // M x L
      for (int m = 0; m < M; ++m) {
        Eigen::VectorXd sticks =
            sticks_from_simplex(inducing.psi[j].row(m).transpose());
        Eigen::MatrixXd sj = simplex_jacobian(sticks);  // L x (L-1)
        out.grad_inducing.segment(off + m * (L - 1), L - 1) =
            sj.transpose() * gpsi.row(m).transpose();
      }
      off += M * (L - 1);
    }
  }
  return out;
}

namespace {

Eigen::MatrixXd kmeanspp(const Eigen::MatrixXd& x, int m, std::mt19937_64& rng) {
  const int N = static_cast<int>(x.rows());
  const int I = static_cast<int>(x.cols());
  Eigen::MatrixXd centers(m, I);
  if (I == 0 || N == 0) return centers;
  std::uniform_int_distribution<int> pick(0, N - 1);
  centers.row(0) = x.row(pick(rng));
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < m; ++k) {
    double total = d2.sum();
    if (total <= 0) {
      centers.row(k) = x.row(pick(rng));
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      int chosen = N - 1;
      for (int n = 0; n < N; ++n) {
        r -= d2[n];
        if (r <= 0) {
          chosen = n;
          break;
        }
      }
      centers.row(k) = x.row(chosen);
    }
    d2 = d2.cwiseMin((x.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }
  // A few Lloyd refinement passes.
  for (int it = 0; it < 10; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m, I);
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(m);
    for (int n = 0; n < N; ++n) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int k = 0; k < m; ++k) {
        double dd = (x.row(n) - centers.row(k)).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = k;
        }
      }
      sums.row(best) += x.row(n);
      counts[best] += 1;
    }
    for (int k = 0; k < m; ++k)
      if (counts[k] > 0) centers.row(k) = sums.row(k) / counts[k];
  }
  return centers;
}

}  // namespace

InducingSet init_inducing(const Dataset& data, const ParamLayout& layout, int m,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  InducingSet ind;
  ind.x = kmeanspp(data.x, m, rng);

  const int J = layout.num_qual();
  ind.psi.resize(J);
  if (J == 0) return ind;

  // Most frequent joint level patterns, ties broken by the seeded shuffle.
  std::map<std::vector<int>, int> counts;
  for (int n = 0; n < data.n(); ++n) {
    std::vector<int> pat(J);
    for (int j = 0; j < J; ++j) pat[j] = data.levels(n, j);
    counts[pat] += 1;
  }
  std::vector<std::pair<std::vector<int>, int>> patterns(counts.begin(), counts.end());
  std::shuffle(patterns.begin(), patterns.end(), rng);
  std::stable_sort(patterns.begin(), patterns.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  for (int j = 0; j < J; ++j) {
    const int L = layout.levels(j);
    ind.psi[j].resize(m, L);
    for (int k = 0; k < m; ++k) {
      const auto& pat = patterns[k % patterns.size()].first;
      // Near-one-hot on the pattern's level; exact vertices have infinite
      // stick parameters.
      Eigen::VectorXd row = Eigen::VectorXd::Constant(L, 0.1 / (L - 1));
      row[pat[j] - 1] = 0.9;
      ind.psi[j].row(k) = row;
    }
  }
  return ind;
}

SparseFitResult fit_sparse_map(const Dataset& data, const ParamLayout& layout,
                               const PriorSpec& spec, SparseMethod method,
                               const SparseFitConfig& config) {
  if (config.m >= data.n())
    throw ValidationError("inducing count M must be smaller than N");
  SparseLayout slayout(layout, config.m);

  Objective neg_obj = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
    Eigen::VectorXd theta_v = v.head(layout.size());
    InducingSet ind = slayout.unpack_inducing(v);
    SparseEval eval = sparse_objective(theta_v, ind, data, method, layout, true);
    double log_jac = 0.0;
    HyperParams theta = layout.unpack(theta_v, &log_jac);
    double lp = eval.value + log_prior(theta, spec) + log_jac;
    grad.resize(v.size());
    grad.head(layout.size()) =
        -(eval.grad_theta + log_prior_grad_unconstrained(theta_v, layout, spec));
    grad.tail(v.size() - layout.size()) = -eval.grad_inducing;
    return -lp;
  };

  LbfgsOptions opts;
  opts.max_iters = config.max_iters;

  std::vector<RestartTrace> traces(config.restarts);
  std::vector<Eigen::VectorXd> optima(config.restarts);
  for (int r = 0; r < config.restarts; ++r) {
    Eigen::VectorXd theta_start =
        sample_start(layout, spec, config.seed * 1000003ULL + 17ULL * r);
    InducingSet ind0 = init_inducing(data, layout, config.m,
                                     config.seed * 31ULL + 7ULL * r);
    Eigen::VectorXd start = slayout.pack(theta_start, ind0);
    LbfgsResult res = lbfgs_minimize(neg_obj, start, opts);
    traces[r] = {start, -res.value, res.iterations, res.converged, res.message};
    optima[r] = res.x;
  }
  int best = -1;
  for (int r = 0; r < config.restarts; ++r)
    if (std::isfinite(traces[r].value) && (best < 0 || traces[r].value > traces[best].value))
      best = r;
  if (best < 0) throw NumericalError("all sparse MAP restarts failed");

  SparseFitResult out;
  out.map.v = optima[best].head(layout.size());
  out.map.theta = layout.unpack(out.map.v);
  out.map.value = traces[best].value;
  out.map.restarts = std::move(traces);
  out.inducing = slayout.unpack_inducing(optima[best]);
  return out;
}

PosteriorSamples sample_sparse_posterior(const Dataset& data, const ParamLayout& layout,
                                         const PriorSpec& spec, SparseMethod method,
                                         const InducingSet& inducing,
                                         const SamplerConfig& config,
                                         bool freeze_coordinates,
                                         const HyperParams* reference) {
  if (spec.flat)
    throw ValidationError("flat (non-informative) priors are not supported for MCMC");
  std::vector<Eigen::MatrixXd> frozen;
  if (freeze_coordinates) {
    if (!reference)
      throw ValidationError("freezing inducing coordinates requires a reference fit");
    frozen = inducing_from_weights(inducing, *reference);
  }
  LogDensity target = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
    try {
      SparseEval eval =
          sparse_objective(v, inducing, data, method, layout, true, false,
                           freeze_coordinates ? &frozen : nullptr);
      double log_jac = 0.0;
      HyperParams theta = layout.unpack(v, &log_jac);
      grad = eval.grad_theta + log_prior_grad_unconstrained(v, layout, spec);
      return eval.value + log_prior(theta, spec) + log_jac;
    } catch (const NumericalError&) {
      grad.setZero(v.size());
      return -std::numeric_limits<double>::infinity();
    }
  };
  std::vector<Eigen::VectorXd> inits;
  for (int c = 0; c < config.chains; ++c)
    inits.push_back(sample_start(layout, spec, config.seed * 7919ULL + 31ULL * c));
  return run_chains(target, inits, config);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> sparse_predict(
    const HyperParams& theta, const InducingSet& inducing, const Dataset& data,
    const Eigen::MatrixXd& xs, const Eigen::MatrixXi& levels, SparseMethod method,
    const std::vector<Eigen::MatrixXd>* frozen_u) {
  const int N = data.n();
  const int M = inducing.m();

  EmbeddedPoints emb_data = embed(data.x, data.levels, theta);
  EmbeddedPoints emb_ind;
  emb_ind.x = inducing.x;
  emb_ind.lat = frozen_u ? *frozen_u : inducing_from_weights(inducing, theta);
  EmbeddedPoints emb_query = embed(xs, levels, theta);

  Eigen::MatrixXd kmm = cov(emb_ind, theta);
  Eigen::MatrixXd kmn = cov(emb_ind, emb_data, theta);
  Eigen::MatrixXd kms = cov(emb_ind, emb_query, theta);

  Eigen::LLT<Eigen::MatrixXd> cholM;
  double jit = 0.0;
  std::vector<double> rungs = jitter_ladder(theta.sigma2);
  rungs.insert(rungs.begin(), 0.0);
  for (double j : rungs) {
    Eigen::MatrixXd trial = kmm;
    trial.diagonal().array() += j;
    cholM.compute(trial);
    if (cholM.info() == Eigen::Success) {
      jit = j;
      break;
    }
  }
  if (cholM.info() != Eigen::Success)
    throw NumericalError("sparse predict: K_MM factorization failed");
  kmm.diagonal().array() += jit;

  Eigen::VectorXd g(N);
  if (method == SparseMethod::FITC) {
    Eigen::MatrixXd cc = cholM.matrixL().solve(kmn);
    g = (Eigen::VectorXd::Constant(N, theta.sigma2) - cc.colwise().squaredNorm().transpose())
            .cwiseMax(0.0)
            .array() +
        theta.noise;
  } else {
    g.setConstant(theta.noise);
  }

  Eigen::MatrixXd sigma_m = kmm + kmn * g.cwiseInverse().asDiagonal() * kmn.transpose();
  Eigen::LLT<Eigen::MatrixXd> cholS(sigma_m);
  if (cholS.info() != Eigen::Success)
    throw NumericalError("sparse predict: Sigma_M factorization failed");

  const Eigen::VectorXd yc = data.y.array() - theta.mu;
  const Eigen::VectorXd rhs = kmn * yc.cwiseQuotient(g);
  const Eigen::VectorXd gamma = cholS.solve(rhs);

  const int Nq = emb_query.n();
  Eigen::VectorXd mean =
      Eigen::VectorXd::Constant(Nq, theta.mu) + kms.transpose() * gamma;

  Eigen::MatrixXd a1 = cholM.matrixL().solve(kms);
  Eigen::MatrixXd a2 = cholS.matrixL().solve(kms);
  Eigen::VectorXd var =
      Eigen::VectorXd::Constant(Nq, theta.sigma2) -
      a1.colwise().squaredNorm().transpose() + a2.colwise().squaredNorm().transpose();

  const double tol = -1e-10 * std::max(1.0, theta.sigma2);
  for (int i = 0; i < var.size(); ++i) {
    if (var[i] < tol)
      throw InternalError("sparse predictive variance below clamping tolerance");
    if (var[i] < 0.0) var[i] = 0.0;
  }
  return {std::move(mean), std::move(var)};
}

}  // namespace lvgp
