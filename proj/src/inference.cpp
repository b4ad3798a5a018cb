#include "lvgp/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "lvgp/errors.hpp"
#include "lvgp/lbfgs.hpp"

namespace lvgp {

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Run fn(i) for i in [0, count) on up to `threads` workers. Exceptions are
// captured and rethrown from the first failing index.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::min(std::max(1, threads), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

MapFitResult fit_map(const Dataset& data, const ParamLayout& layout,
                     const PriorSpec& spec, const MapConfig& config) {
  if (config.restarts < 1) throw ValidationError("restarts must be >= 1");

  Objective neg_posterior = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
    Eigen::VectorXd g;
    double lp = log_posterior_u(v, data, layout, spec, &g);
    grad = -g;
    return -lp;
  };

  LbfgsOptions opts;
  opts.max_iters = config.max_iters;

  std::vector<RestartTrace> traces(config.restarts);
  std::vector<Eigen::VectorXd> optima(config.restarts);
  parallel_for(config.restarts, resolve_threads(config.threads), [&](int r) {
    Eigen::VectorXd start =
        sample_start(layout, spec, config.seed * 1000003ULL + 17ULL * r);
    LbfgsResult res = lbfgs_minimize(neg_posterior, start, opts);
    traces[r].start = start;
    traces[r].value = -res.value;
    traces[r].iterations = res.iterations;
    traces[r].converged = res.converged;
    traces[r].message = res.message;
    optima[r] = res.x;
  });

  int best = -1;
  for (int r = 0; r < config.restarts; ++r)
    if (std::isfinite(traces[r].value) && (best < 0 || traces[r].value > traces[best].value))
      best = r;
  if (best < 0) {
    std::string detail;
    for (const auto& t : traces) detail += " [" + t.message + "]";
    throw NumericalError("all MAP restarts failed:" + detail);
  }

  MapFitResult out;
  out.v = optima[best];
  out.theta = layout.unpack(out.v);
  out.value = traces[best].value;
  out.restarts = std::move(traces);
  return out;
}

PosteriorSamples run_chains(const LogDensity& target,
                            const std::vector<Eigen::VectorXd>& inits,
                            const SamplerConfig& config) {
  const int C = static_cast<int>(inits.size());
  if (C < 1) throw ValidationError("need at least one chain");
  if (config.draws < 1) throw ValidationError("draws must be >= 1");

  std::vector<NutsChainResult> results(C);
  parallel_for(C, resolve_threads(config.threads), [&](int c) {
    NutsOptions nopts;
    nopts.warmup = config.warmup;
    nopts.draws = config.draws;
    nopts.target_accept = config.target_accept;
    nopts.max_depth = config.max_depth;
    nopts.seed = config.seed * 2654435761ULL + 101ULL * c + 1ULL;
    results[c] = nuts_chain(target, inits[c], nopts);
  });

  const int dim = static_cast<int>(inits[0].size());
  PosteriorSamples out;
  out.chains = C;
  out.draws_per_chain = config.draws;
  out.draws.resize(C * config.draws, dim);
  int total_div = 0;
  for (int c = 0; c < C; ++c) {
    out.draws.middleRows(c * config.draws, config.draws) = results[c].draws;
    out.chain_diagnostics.push_back(
        {results[c].divergences, results[c].step_size, results[c].mean_accept});
    total_div += results[c].divergences;
  }
  out.split_rhat = split_rhat(out.draws, C);
  out.ess = effective_sample_size(out.draws, C);
  if (total_div > 0.10 * C * config.draws)
    out.warnings.push_back(
        "more than 10% divergent transitions (" + std::to_string(total_div) + " of " +
        std::to_string(C * config.draws) + "); results may be unreliable");
  return out;
}

PosteriorSamples sample_posterior(const Dataset& data, const ParamLayout& layout,
                                  const PriorSpec& spec, const SamplerConfig& config) {
  if (spec.flat)
    throw ValidationError("flat (non-informative) priors are not supported for MCMC");
  LogDensity target = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
    try {
      return log_posterior_u(v, data, layout, spec, &grad);
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

Eigen::VectorXd PredictiveMixture::mixture_mean() const {
  return means.colwise().mean();
}

Eigen::VectorXd PredictiveMixture::mixture_variance() const {
  Eigen::VectorXd mean = mixture_mean();
  Eigen::VectorXd within = variances.colwise().mean();
  Eigen::VectorXd between =
      (means.rowwise() - mean.transpose()).array().square().colwise().mean();
  return within + between;
}

PredictiveMixture predictive_mixture(const PosteriorSamples& samples,
                                     const ParamLayout& layout, const Dataset& data,
                                     const Eigen::MatrixXd& xs,
                                     const Eigen::MatrixXi& levels, int threads) {
  const int B = samples.b();
  const int Nq = static_cast<int>(xs.rows() > 0 ? xs.rows() : levels.rows());
  PredictiveMixture mix;
  mix.means.resize(B, Nq);
  mix.variances.resize(B, Nq);
  parallel_for(B, resolve_threads(threads), [&](int b) {
    HyperParams theta = layout.unpack(samples.draws.row(b).transpose());
    FactorizedModel model = factorize(theta, data.x, data.levels, data.y);
    auto [mean, var] = predict(model, xs, levels);
    mix.means.row(b) = mean;
    mix.variances.row(b) = var;
  });
  return mix;
}

Eigen::MatrixX2d prediction_interval(const PredictiveMixture& mixture, double level,
                                     int m_samples, std::uint64_t seed) {
  if (m_samples < 100) throw ValidationError("interval sample count must be >= 100");
  const int B = mixture.components();
  const int Nq = mixture.points();
  const double tail = (1.0 - level) / 2.0;
  const int q_lo = static_cast<int>(std::ceil(tail * m_samples));
  const int q_hi = static_cast<int>(std::ceil((1.0 - tail) * m_samples));

  Eigen::MatrixX2d out(Nq, 2);
  std::vector<double> draws(m_samples);
  for (int p = 0; p < Nq; ++p) {
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (p + 1));
    std::uniform_int_distribution<int> pick(0, B - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int m = 0; m < m_samples; ++m) {
      const int b = pick(rng);
      draws[m] = mixture.means(b, p) +
                 std::sqrt(mixture.variances(b, p)) * normal(rng);
    }
    std::sort(draws.begin(), draws.end());
    out(p, 0) = draws[q_lo - 1];  // order statistics are 1-based
    out(p, 1) = draws[q_hi - 1];
  }
  return out;
}

Eigen::VectorXd split_rhat(const Eigen::MatrixXd& draws, int chains) {
  const int B = static_cast<int>(draws.rows());
  const int dim = static_cast<int>(draws.cols());
  const int per_chain = B / chains;
  const int half = per_chain / 2;
  const int m = chains * 2;  // split chains
  Eigen::VectorXd rhat(dim);
  if (half < 2) {
    rhat.setConstant(std::numeric_limits<double>::quiet_NaN());
    return rhat;
  }
  for (int k = 0; k < dim; ++k) {
    Eigen::VectorXd means(m), vars(m);
    for (int c = 0; c < chains; ++c) {
      for (int h = 0; h < 2; ++h) {
        Eigen::VectorXd seg = draws.col(k).segment(c * per_chain + h * half, half);
        const double mu = seg.mean();
        means[c * 2 + h] = mu;
        vars[c * 2 + h] = (seg.array() - mu).square().sum() / (half - 1);
      }
    }
    const double w = vars.mean();
    const double grand = means.mean();
    const double b = half * (means.array() - grand).square().sum() / (m - 1);
    const double var_plus = (half - 1.0) / half * w + b / half;
    rhat[k] = w > 0 ? std::sqrt(var_plus / w) : 1.0;
  }
  return rhat;
}

Eigen::VectorXd effective_sample_size(const Eigen::MatrixXd& draws, int chains) {
  const int B = static_cast<int>(draws.rows());
  const int dim = static_cast<int>(draws.cols());
  const int n = B / chains;
  Eigen::VectorXd ess(dim);
  for (int k = 0; k < dim; ++k) {
    // Mean autocovariance across chains, Geyer initial-monotone truncation.
    std::vector<Eigen::VectorXd> centered(chains);
    double w = 0.0;
    for (int c = 0; c < chains; ++c) {
      Eigen::VectorXd seg = draws.col(k).segment(c * n, n);
      centered[c] = seg.array() - seg.mean();
      w += centered[c].squaredNorm() / (n - 1);
    }
    w /= chains;
    if (w <= 0) {
      ess[k] = static_cast<double>(B);
      continue;
    }
    auto acov = [&](int lag) {
      double s = 0.0;
      for (int c = 0; c < chains; ++c)
        s += centered[c].head(n - lag).dot(centered[c].tail(n - lag)) / n;
      return s / chains;
    };
    double rho_sum = 0.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (int lag = 1; lag + 1 < n; lag += 2) {
      const double pair = (acov(lag) + acov(lag + 1)) / w;
      if (pair < 0) break;
      const double capped = std::min(pair, prev_pair);  // enforce monotone
      rho_sum += capped;
      prev_pair = capped;
    }
    ess[k] = std::max(1.0, B / (1.0 + 2.0 * rho_sum));
  }
  return ess;
}

}  // namespace lvgp
