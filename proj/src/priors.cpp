#include "lvgp/priors.hpp"

#include <cmath>
#include <random>

#include "json.hpp"
#include "lvgp/errors.hpp"

namespace lvgp {

using nlohmann::json;

double NormalPrior::logpdf(double x) const {
  const double z = (x - loc) / scale;
  return -0.5 * std::log(2.0 * M_PI) - std::log(scale) - 0.5 * z * z;
}

double NormalPrior::dlogpdf(double x) const { return -(x - loc) / (scale * scale); }

std::string PriorSpec::to_json() const {
  json doc;
  doc["alpha"] = alpha;
  doc["flat"] = flat;
  auto put = [&doc](const char* key, const NormalPrior& p) {
    doc[key] = {{"loc", p.loc}, {"scale", p.scale}};
  };
  put("mean", mean);
  put("log_variance", log_variance);
  put("log_lengthscale", log_lengthscale);
  put("log_noise", log_noise);
  return doc.dump(2);
}

PriorSpec PriorSpec::from_json(const std::string& text) {
  json doc = json::parse(text);
  PriorSpec spec;
  spec.alpha = doc.value("alpha", 2.0);
  spec.flat = doc.value("flat", false);
  auto get = [&doc](const char* key, NormalPrior& p) {
    if (doc.contains(key)) {
      p.loc = doc[key].value("loc", p.loc);
      p.scale = doc[key].value("scale", p.scale);
    }
  };
  get("mean", spec.mean);
  get("log_variance", spec.log_variance);
  get("log_lengthscale", spec.log_lengthscale);
  get("log_noise", spec.log_noise);
  if (spec.alpha <= 1.0) throw ValidationError("prior alpha must be > 1");
  return spec;
}

ParamLayout::ParamLayout(int num_quant, std::vector<int> levels,
                         std::vector<int> latent_dims, double noise_floor)
    : I_(num_quant), L_(std::move(levels)), d_(std::move(latent_dims)),
      noise_floor_(noise_floor) {
  int off = 3 + I_;
  raw_offset_.resize(L_.size());
  for (size_t j = 0; j < L_.size(); ++j) {
    raw_offset_[j] = off;
    off += L_[j] * d_[j];
  }
  gamma_offset_ = off;
  size_ = off + static_cast<int>(L_.size());
}

ParamLayout ParamLayout::for_space(const InputSpace& space, int latent_dim,
                                   double noise_floor) {
  std::vector<int> L, d;
  for (int j = 0; j < space.num_qual(); ++j) {
    L.push_back(space.levels(j));
    d.push_back(std::min({latent_dim, space.levels(j) - 1, 4}));
  }
  return ParamLayout(space.num_quant(), std::move(L), std::move(d), noise_floor);
}

std::string ParamLayout::param_name(int k) const {
  if (k == 0) return "mu";
  if (k == 1) return "log_sigma2";
  if (k < 2 + I_) return "log_omega[" + std::to_string(k - 2) + "]";
  if (k == noise_index()) return "noise_raw";
  for (size_t j = 0; j < L_.size(); ++j) {
    if (k >= raw_offset_[j] && k < raw_offset_[j] + L_[j] * d_[j]) {
      int o = k - raw_offset_[j];
      return "z_raw[" + std::to_string(j) + "][" + std::to_string(o / d_[j]) + "," +
             std::to_string(o % d_[j]) + "]";
    }
  }
  return "log_gamma[" + std::to_string(k - gamma_offset_) + "]";
}

HyperParams ParamLayout::unpack(const Eigen::VectorXd& v, double* log_jacobian) const {
  if (v.size() != size_) throw InternalError("parameter vector has wrong length");
  if (!v.allFinite()) throw ValidationError("non-finite unconstrained parameter");
  HyperParams theta;
  double lj = 0.0;
  theta.mu = v[0];
  theta.sigma2 = std::exp(v[1]);
  lj += v[1];
  theta.omega.resize(I_);
  for (int i = 0; i < I_; ++i) {
    theta.omega[i] = std::exp(v[2 + i]);
    lj += v[2 + i];
  }
  theta.noise = noise_floor_ + std::exp(v[noise_index()]);
  lj += v[noise_index()];
  const int J = num_qual();
  theta.latent_maps.resize(J);
  theta.gamma.resize(J);
  for (int j = 0; j < J; ++j) {
    Eigen::MatrixXd raw(L_[j], d_[j]);
    for (int l = 0; l < L_[j]; ++l)
      for (int r = 0; r < d_[j]; ++r) raw(l, r) = v[raw_offset_[j] + l * d_[j] + r];
    theta.latent_maps[j] = make_latent_map(raw);
    theta.gamma[j] = std::exp(v[log_gamma_index(j)]);
    lj += v[log_gamma_index(j)];
  }
  if (log_jacobian) *log_jacobian = lj;
  return theta;
}

Eigen::VectorXd ParamLayout::pack(const HyperParams& theta) const {
  Eigen::VectorXd v(size_);
  v[0] = theta.mu;
  v[1] = std::log(theta.sigma2);
  for (int i = 0; i < I_; ++i) v[2 + i] = std::log(theta.omega[i]);
  v[noise_index()] = std::log(std::max(theta.noise - noise_floor_, 1e-300));
  for (int j = 0; j < num_qual(); ++j) {
    const auto& raw = theta.latent_maps[j].raw;
    for (int l = 0; l < L_[j]; ++l)
      for (int r = 0; r < d_[j]; ++r) v[raw_offset_[j] + l * d_[j] + r] = raw(l, r);
    v[log_gamma_index(j)] = std::log(theta.gamma[j]);
  }
  return v;
}

double log_prior(const HyperParams& theta, const PriorSpec& spec) {
  if (spec.flat) return 0.0;
  double lp = 0.0;
  lp += spec.mean.logpdf(theta.mu);
  lp += spec.log_variance.logpdf(std::log(theta.sigma2));
  for (int i = 0; i < theta.num_quant(); ++i)
    lp += spec.log_lengthscale.logpdf(std::log(theta.omega[i]));
  lp += spec.log_noise.logpdf(std::log(theta.noise));
  const double beta = spec.alpha - 1.0;
  for (int j = 0; j < theta.num_qual(); ++j) {
    const auto& lm = theta.latent_maps[j];
    const double g = theta.gamma[j];
    const double L = lm.L();
    // z~_{lr} ~ iid N(0, 1/(L gamma))
    lp += 0.5 * lm.raw.size() * std::log(L * g / (2.0 * M_PI)) -
          0.5 * L * g * lm.raw.squaredNorm();
    // Gamma(alpha, beta) on the precision
    lp += spec.alpha * std::log(beta) - std::lgamma(spec.alpha) +
          (spec.alpha - 1.0) * std::log(g) - beta * g;
  }
  return lp;
}

Eigen::VectorXd log_prior_grad_unconstrained(const Eigen::VectorXd& v,
                                             const ParamLayout& layout,
                                             const PriorSpec& spec) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(layout.size());
  // Transform Jacobian: d/dv of v for each positive parameter.
  g[layout.log_sigma2_index()] += 1.0;
  for (int i = 0; i < layout.num_quant(); ++i) g[layout.log_omega_index(i)] += 1.0;
  g[layout.noise_index()] += 1.0;
  for (int j = 0; j < layout.num_qual(); ++j) g[layout.log_gamma_index(j)] += 1.0;
  if (spec.flat) return g;

  g[layout.mu_index()] += spec.mean.dlogpdf(v[layout.mu_index()]);
  g[layout.log_sigma2_index()] +=
      spec.log_variance.dlogpdf(v[layout.log_sigma2_index()]);
  for (int i = 0; i < layout.num_quant(); ++i)
    g[layout.log_omega_index(i)] +=
        spec.log_lengthscale.dlogpdf(v[layout.log_omega_index(i)]);
  {
    // Prior sits on log(noise); chain through noise = floor + exp(v).
    const double ev = std::exp(v[layout.noise_index()]);
    const double noise = layout.noise_floor() + ev;
    g[layout.noise_index()] += spec.log_noise.dlogpdf(std::log(noise)) * ev / noise;
  }
  const double beta = spec.alpha - 1.0;
  for (int j = 0; j < layout.num_qual(); ++j) {
    const int L = layout.levels(j);
    const int d = layout.latent_dim(j);
    const double gamma = std::exp(v[layout.log_gamma_index(j)]);
    double raw_sq = 0.0;
    for (int k = 0; k < L * d; ++k) {
      const double r = v[layout.raw_index(j) + k];
      raw_sq += r * r;
      g[layout.raw_index(j) + k] += -L * gamma * r;
    }
    g[layout.log_gamma_index(j)] += (spec.alpha - 1.0) - beta * gamma +
                                    0.5 * L * d - 0.5 * L * gamma * raw_sq;
  }
  return g;
}

double log_posterior_u(const Eigen::VectorXd& v, const Dataset& data,
                       const ParamLayout& layout, const PriorSpec& spec,
                       Eigen::VectorXd* grad) {
  double log_jac = 0.0;
  HyperParams theta = layout.unpack(v, &log_jac);
  FactorizedModel model = factorize(theta, data.x, data.levels, data.y);
  double lp = log_likelihood(model) + log_prior(theta, spec) + log_jac;
  if (grad) {
    LikelihoodGrad lg = log_likelihood_grad(model, layout.noise_floor());
    *grad = flatten_likelihood_grad(lg, layout) +
            log_prior_grad_unconstrained(v, layout, spec);
    for (int k = 0; k < grad->size(); ++k)
      if (!std::isfinite((*grad)[k]))
        throw NumericalError("non-finite gradient for parameter " +
                             layout.param_name(k));
  }
  return lp;
}

Eigen::VectorXd flatten_likelihood_grad(const LikelihoodGrad& g,
                                        const ParamLayout& layout) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.size());
  out[layout.mu_index()] = g.mu;
  out[layout.log_sigma2_index()] = g.log_sigma2;
  for (int i = 0; i < layout.num_quant(); ++i)
    out[layout.log_omega_index(i)] = g.log_omega[i];
  out[layout.noise_index()] = g.noise_raw;
  for (int j = 0; j < layout.num_qual(); ++j)
    out.segment(layout.raw_index(j), g.raw[j].size()) = g.raw[j];
  return out;
}

Eigen::VectorXd sample_start(const ParamLayout& layout, const PriorSpec& spec,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(layout.size());
  v[layout.mu_index()] = spec.mean.loc + spec.mean.scale * normal(rng);
  v[layout.log_sigma2_index()] =
      spec.log_variance.loc + spec.log_variance.scale * normal(rng);
  for (int i = 0; i < layout.num_quant(); ++i)
    v[layout.log_omega_index(i)] =
        spec.log_lengthscale.loc + spec.log_lengthscale.scale * normal(rng);
  v[layout.noise_index()] = spec.log_noise.loc + spec.log_noise.scale * normal(rng);
  for (int j = 0; j < layout.num_qual(); ++j) {
    const int L = layout.levels(j);
    const double sd = 1.0 / std::sqrt(static_cast<double>(L));  // gamma = 1
    for (int k = 0; k < L * layout.latent_dim(j); ++k)
      v[layout.raw_index(j) + k] = sd * normal(rng);
    v[layout.log_gamma_index(j)] = 0.0;
  }
  return v;
}

}  // namespace lvgp
