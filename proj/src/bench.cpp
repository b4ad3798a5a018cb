#include "lvgp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "lvgp/errors.hpp"
#include "lvgp/gp_exact.hpp"
#include "lvgp/inference.hpp"
#include "lvgp/latent_interpret.hpp"
#include "lvgp/priors.hpp"
#include "lvgp/sparse.hpp"

namespace lvgp::bench {

int TestFunction::input_index(const std::string& var) const {
  for (int i = 0; i < dim(); ++i)
    if (inputs[i].name == var) return i;
  throw ValidationError("unknown input '" + var + "' for function " + name);
}

TestFunction borehole() {
  TestFunction f;
  f.name = "borehole";
  f.inputs = {{"rw", 0.05, 0.15}, {"r", 100.0, 50000.0}, {"Tu", 63070.0, 115600.0},
              {"Hu", 990.0, 1110.0}, {"Tl", 63.1, 116.0},  {"Hl", 700.0, 820.0},
              {"L", 1120.0, 1680.0}, {"Kw", 9855.0, 12045.0}};
  f.eval = [](const Eigen::VectorXd& v) {
    const double rw = v[0], r = v[1], tu = v[2], hu = v[3], tl = v[4], hl = v[5],
                 l = v[6], kw = v[7];
    if (r <= rw) throw ValidationError("borehole: r must exceed rw");
    const double lr = std::log(r / rw);
    return 2.0 * M_PI * tu * (hu - hl) /
           (lr * (1.0 + 2.0 * l * tu / (lr * rw * rw * kw) + tu / tl));
  };
  return f;
}

double otl_vb1(double rb1, double rb2) { return 12.0 * rb2 / (rb1 + rb2); }

TestFunction otl() {
  TestFunction f;
  f.name = "otl";
  f.inputs = {{"Rb1", 50.0, 150.0}, {"Rb2", 25.0, 70.0},  {"Rf", 0.5, 3.0},
              {"Rc1", 1.2, 2.5},    {"Rc2", 0.25, 1.2},   {"B", 50.0, 300.0}};
  f.eval = [](const Eigen::VectorXd& v) {
    const double rb1 = v[0], rb2 = v[1], rf = v[2], rc1 = v[3], rc2 = v[4], b = v[5];
    if (rb1 <= 0 || rb2 <= 0 || rf <= 0 || rc1 <= 0 || rc2 <= 0)
      throw ValidationError("otl: resistances must be positive");
    const double vb1 = otl_vb1(rb1, rb2);
    const double denom = b * (rc2 + 9.0) + rf;
    return b * (vb1 + 0.74) * (rc2 + 9.0) / denom + 11.35 * rf / denom +
           0.74 * b * (rf / rc1) * (rc2 + 9.0) / denom;
  };
  return f;
}

TestFunction piston() {
  TestFunction f;
  f.name = "piston";
  f.inputs = {{"M", 30.0, 60.0},       {"S", 0.005, 0.020}, {"V0", 0.002, 0.010},
              {"k", 1000.0, 5000.0},   {"P0", 90000.0, 110000.0},
              {"T", 290.0, 296.0},     {"T0", 340.0, 360.0}};
  f.eval = [](const Eigen::VectorXd& v) {
    const double m = v[0], s = v[1], v0 = v[2], k = v[3], p0 = v[4], t = v[5],
                 t0 = v[6];
    const double a = p0 * s + 19.62 * m - k * v0 / s;
    const double disc = a * a + 4.0 * k * (p0 / t0) * t;
    if (disc < 0) throw ValidationError("piston: negative discriminant");
    const double vol = s / (2.0 * k) * std::sqrt(disc);
    return 2.0 * M_PI * std::sqrt(m / (k + s * s * (p0 * v0 / (vol * vol)) * (t / t0)));
  };
  return f;
}

MixedFunction discretize(const TestFunction& func,
                         const std::vector<std::pair<std::string, int>>& vars) {
  std::vector<int> idx;
  std::vector<std::vector<double>> grids;
  long total = 1;
  for (const auto& [name, count] : vars) {
    if (count < 2) throw ValidationError("discretization needs at least 2 levels");
    const int i = func.input_index(name);
    idx.push_back(i);
    std::vector<double> grid(count);
    for (int g = 0; g < count; ++g)
      grid[g] = func.inputs[i].lower +
                (func.inputs[i].upper - func.inputs[i].lower) * g / (count - 1);
    grids.push_back(std::move(grid));
    total *= count;
  }

  std::vector<QuantVar> remaining;
  std::vector<int> remaining_idx;
  for (int i = 0; i < func.dim(); ++i)
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) {
      remaining.push_back(func.inputs[i]);
      remaining_idx.push_back(i);
    }

  // Level k enumerates the Cartesian grid, first variable fastest.
  std::vector<std::string> labels(total);
  for (long k = 0; k < total; ++k) {
    long c = k;
    std::ostringstream lab;
    for (size_t q = 0; q < vars.size(); ++q) {
      const long g = c % grids[q].size();
      c /= grids[q].size();
      if (q) lab << "|";
      lab << vars[q].first << "=" << grids[q][g];
    }
    labels[k] = lab.str();
  }
  InputSpace space(remaining, {{"t", labels}}, func.name);

  auto base = func;
  MixedFunction mixed{func.name, space,
                      [base, idx, grids, remaining_idx](const Eigen::VectorXd& x,
                                                        const Eigen::VectorXi& lev) {
                        Eigen::VectorXd full(base.dim());
                        for (size_t q = 0; q < remaining_idx.size(); ++q)
                          full[remaining_idx[q]] = x[q];
                        long c = lev[0] - 1;
                        for (size_t q = 0; q < idx.size(); ++q) {
                          full[idx[q]] = grids[q][c % grids[q].size()];
                          c /= grids[q].size();
                        }
                        return base.eval(full);
                      }};
  return mixed;
}

MixedFunction synthetic_qualitative(const std::vector<int>& levels,
                                    std::uint64_t seed) {
  const int J = static_cast<int>(levels.size());
  long total = 1;
  for (int l : levels) total *= l;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Random 2-D latent maps, then a GP draw over the joint level grid.
  std::vector<Eigen::MatrixXd> z(J);
  for (int j = 0; j < J; ++j) {
    z[j].resize(levels[j], 2);
    for (int l = 0; l < levels[j]; ++l)
      for (int r = 0; r < 2; ++r) z[j](l, r) = normal(rng);
  }
  Eigen::MatrixXd k(total, total);
  for (long a = 0; a < total; ++a)
    for (long b = 0; b <= a; ++b) {
      long ca = a, cb = b;
      double d2 = 0.0;
      for (int j = 0; j < J; ++j) {
        const int la = static_cast<int>(ca % levels[j]);
        const int lb = static_cast<int>(cb % levels[j]);
        ca /= levels[j];
        cb /= levels[j];
        d2 += (z[j].row(la) - z[j].row(lb)).squaredNorm();
      }
      k(a, b) = k(b, a) = std::exp(-0.5 * d2);
    }
  k.diagonal().array() += 1e-8;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  Eigen::VectorXd white(total);
  for (long a = 0; a < total; ++a) white[a] = normal(rng);
  Eigen::VectorXd values = llt.matrixL() * white;

  std::vector<QualVar> quals(J);
  for (int j = 0; j < J; ++j) {
    quals[j].name = "q" + std::to_string(j + 1);
    for (int l = 0; l < levels[j]; ++l)
      quals[j].levels.push_back("l" + std::to_string(l + 1));
  }
  InputSpace space({}, quals, "synthetic");

  std::vector<int> lv = levels;
  MixedFunction mixed{"synthetic", space,
                      [values, lv](const Eigen::VectorXd&, const Eigen::VectorXi& lev) {
                        long c = 0, stride = 1;
                        for (size_t j = 0; j < lv.size(); ++j) {
                          c += (lev[static_cast<int>(j)] - 1) * stride;
                          stride *= lv[j];
                        }
                        return values[c];
                      }};
  return mixed;
}

double rrmse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() < 2) throw ValidationError("rrmse needs at least 2 points");
  if (y.size() != yhat.size()) throw ValidationError("rrmse: size mismatch");
  const double ybar = y.mean();
  const double denom = (y.array() - ybar).square().sum();
  if (denom <= 0) throw ValidationError("rrmse undefined for constant y");
  return std::sqrt((y - yhat).squaredNorm() / denom);
}

double interval_score(double y, double l, double u, double level) {
  if (l > u) throw ValidationError("interval_score: lower bound exceeds upper");
  const double a = 1.0 - level;
  return (u - l) + (2.0 / a) * std::max(l - y, 0.0) + (2.0 / a) * std::max(y - u, 0.0);
}

double mis(const Eigen::VectorXd& y, const Eigen::VectorXd& lower,
           const Eigen::VectorXd& upper, double level) {
  double s = 0.0;
  for (int i = 0; i < y.size(); ++i) s += interval_score(y[i], lower[i], upper[i], level);
  return s / y.size();
}

double coverage(const Eigen::VectorXd& y, const Eigen::VectorXd& lower,
                const Eigen::VectorXd& upper) {
  int hit = 0;
  for (int i = 0; i < y.size(); ++i)
    if (y[i] >= lower[i] && y[i] <= upper[i]) ++hit;
  return static_cast<double>(hit) / y.size();
}

double total_sobol(const TestFunction& func, const std::string& var, int n,
                   std::uint64_t seed) {
  const int k = func.input_index(var);
  const int dim = func.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto sample = [&](Eigen::VectorXd& v) {
    for (int i = 0; i < dim; ++i)
      v[i] = func.inputs[i].lower +
             unif(rng) * (func.inputs[i].upper - func.inputs[i].lower);
  };

  // Jansen estimator: S_T = sum (f(A_j) - f(A_j with column k from B))^2 / (2 n Var).
  double num = 0.0, sum = 0.0, sumsq = 0.0;
  Eigen::VectorXd a(dim), b(dim);
  for (int j = 0; j < n; ++j) {
    sample(a);
    sample(b);
    const double fa = func.eval(a);
    Eigen::VectorXd ab = a;
    ab[k] = b[k];
    const double fab = func.eval(ab);
    num += (fa - fab) * (fa - fab);
    sum += fa;
    sumsq += fa * fa;
  }
  const double variance = sumsq / n - (sum / n) * (sum / n);
  return num / (2.0 * n * variance);
}

// ---- harness ----

std::string BenchConfig::to_json() const {
  nlohmann::json j;
  j["function"] = function;
  j["per_level"] = per_level;
  j["replicates"] = replicates;
  j["test_size"] = test_size;
  j["methods"] = methods;
  j["inducing"] = inducing;
  j["latent_dim"] = latent_dim;
  j["restarts"] = restarts;
  j["chains"] = chains;
  j["warmup"] = warmup;
  j["draws"] = draws;
  j["interval_samples"] = interval_samples;
  j["seed"] = seed;
  j["threads"] = threads;
  return j.dump(2);
}

BenchConfig BenchConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad experiment config JSON: ") + e.what());
  }
  BenchConfig c;
  try {
    if (j.contains("function")) c.function = j["function"].get<std::string>();
    if (j.contains("per_level")) c.per_level = j["per_level"].get<int>();
    if (j.contains("replicates")) c.replicates = j["replicates"].get<int>();
    if (j.contains("test_size")) c.test_size = j["test_size"].get<int>();
    if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("inducing")) c.inducing = j["inducing"].get<int>();
    if (j.contains("latent_dim")) c.latent_dim = j["latent_dim"].get<int>();
    if (j.contains("restarts")) c.restarts = j["restarts"].get<int>();
    if (j.contains("chains")) c.chains = j["chains"].get<int>();
    if (j.contains("warmup")) c.warmup = j["warmup"].get<int>();
    if (j.contains("draws")) c.draws = j["draws"].get<int>();
    if (j.contains("interval_samples"))
      c.interval_samples = j["interval_samples"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad experiment config field: ") + e.what());
  }
  return c;
}

namespace {

struct ParsedMethod {
  std::string estimator;  // map | mle | bayes
  std::string approx;     // exact | fitc | vfe
};

ParsedMethod parse_method(const std::string& s) {
  const auto dash = s.find('-');
  ParsedMethod m;
  m.estimator = dash == std::string::npos ? s : s.substr(0, dash);
  m.approx = dash == std::string::npos ? "exact" : s.substr(dash + 1);
  if (m.estimator != "map" && m.estimator != "mle" && m.estimator != "bayes")
    throw ValidationError("unknown estimator in method '" + s + "'");
  if (m.approx != "exact" && m.approx != "fitc" && m.approx != "vfe")
    throw ValidationError("unknown approximation in method '" + s + "'");
  return m;
}

MixedFunction resolve_function(const BenchConfig& config) {
  if (config.function == "borehole")
    return discretize(borehole(), {{"rw", 4}, {"Hl", 4}});
  if (config.function == "otl") return discretize(otl(), {{"Rf", 6}, {"B", 3}});
  if (config.function == "piston")
    return discretize(piston(), {{"P0", 4}, {"k", 5}});
  if (config.function == "synthetic")
    return synthetic_qualitative({4, 3}, config.seed ^ 0x5bf03635ULL);
  throw ValidationError("unknown test function '" + config.function + "'");
}

Dataset uniform_test_set(const InputSpace& space, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset d;
  d.x.resize(n, space.num_quant());
  d.levels.resize(n, space.num_qual());
  for (int r = 0; r < n; ++r) {
    for (int i = 0; i < space.num_quant(); ++i)
      d.x(r, i) = space.quant()[i].lower +
                  unif(rng) * (space.quant()[i].upper - space.quant()[i].lower);
    for (int j = 0; j < space.num_qual(); ++j) {
      std::uniform_int_distribution<int> pick(1, space.levels(j));
      d.levels(r, j) = pick(rng);
    }
  }
  return d;
}

Eigen::VectorXd eval_all(const MixedFunction& func, const Dataset& d) {
  Eigen::VectorXd y(d.n());
  for (int r = 0; r < d.n(); ++r) {
    Eigen::VectorXd x = d.x.cols() > 0 ? d.x.row(r).transpose() : Eigen::VectorXd(0);
    Eigen::VectorXi lev =
        d.levels.cols() > 0 ? d.levels.row(r).transpose() : Eigen::VectorXi(0);
    y[r] = func.eval(x, lev);
  }
  return y;
}

struct FitOutput {
  Eigen::VectorXd mean, lower, upper;                 // standardized scale
  std::vector<Eigen::MatrixXd> latents;               // per qual var (d cols)
};

FitOutput run_method(const ParsedMethod& method, const BenchConfig& config,
                     const InputSpace& space, const Dataset& std_train,
                     const Dataset& std_test, std::uint64_t seed,
                     bool want_latents) {
  const double floor = method.approx == "exact" ? 1e-8 : 1e-6;
  ParamLayout layout = ParamLayout::for_space(space, config.latent_dim, floor);
  PriorSpec spec;
  spec.flat = method.estimator == "mle";
  const bool sparse = method.approx != "exact";
  const SparseMethod smethod =
      method.approx == "vfe" ? SparseMethod::VFE : SparseMethod::FITC;
  const int m = std::min(config.inducing, std_train.n() - 1);

  FitOutput out;
  auto gaussian_bounds = [&](const Eigen::VectorXd& mean, const Eigen::VectorXd& var) {
    out.mean = mean;
    out.lower = mean.array() - 1.96 * var.array().sqrt();
    out.upper = mean.array() + 1.96 * var.array().sqrt();
  };

  if (method.estimator != "bayes") {
    if (!sparse) {
      MapConfig mc{config.restarts, seed, 500, 1};
      MapFitResult fit = fit_map(std_train, layout, spec, mc);
      FactorizedModel model =
          factorize(fit.theta, std_train.x, std_train.levels, std_train.y);
      auto [mean, var] = predict(model, std_test.x, std_test.levels);
      gaussian_bounds(mean, var);
      if (want_latents)
        for (const auto& lm : fit.theta.latent_maps) out.latents.push_back(lm.z);
    } else {
      SparseFitConfig sc{m, config.restarts, seed, 500, 1};
      SparseFitResult fit = fit_sparse_map(std_train, layout, spec, smethod, sc);
      auto [mean, var] = sparse_predict(fit.map.theta, fit.inducing, std_train,
                                        std_test.x, std_test.levels, smethod);
      gaussian_bounds(mean, var);
      if (want_latents)
        for (const auto& lm : fit.map.theta.latent_maps) out.latents.push_back(lm.z);
    }
    return out;
  }

  // Fully Bayesian: posterior draws -> Gaussian predictive mixture.
  SamplerConfig sc;
  sc.chains = config.chains;
  sc.warmup = config.warmup;
  sc.draws = config.draws;
  sc.seed = seed;
  sc.threads = 1;

  PosteriorSamples samples;
  PredictiveMixture mix;
  InducingSet inducing;
  if (!sparse) {
    samples = sample_posterior(std_train, layout, spec, sc);
    mix = predictive_mixture(samples, layout, std_train, std_test.x, std_test.levels, 1);
  } else {
    SparseFitConfig sfc{m, config.restarts, seed, 500, 1};
    SparseFitResult stage1 = fit_sparse_map(std_train, layout, spec, smethod, sfc);
    inducing = stage1.inducing;
    samples = sample_sparse_posterior(std_train, layout, spec, smethod, inducing, sc);
    const int B = samples.b();
    mix.means.resize(B, std_test.n());
    mix.variances.resize(B, std_test.n());
    for (int b = 0; b < B; ++b) {
      HyperParams theta = layout.unpack(samples.draws.row(b).transpose());
      auto [mean, var] = sparse_predict(theta, inducing, std_train, std_test.x,
                                        std_test.levels, smethod);
      mix.means.row(b) = mean;
      mix.variances.row(b) = var;
    }
  }
  out.mean = mix.mixture_mean();
  Eigen::MatrixX2d bounds =
      prediction_interval(mix, 0.95, config.interval_samples, seed);
  out.lower = bounds.col(0);
  out.upper = bounds.col(1);

  if (want_latents) {
    for (int j = 0; j < layout.num_qual(); ++j) {
      std::vector<Eigen::MatrixXd> draws;
      draws.reserve(samples.b());
      for (int b = 0; b < samples.b(); ++b) {
        HyperParams theta = layout.unpack(samples.draws.row(b).transpose());
        draws.push_back(theta.latent_maps[j].z);
      }
      RepresentativeConfig rc;
      rc.seed = seed + 13 * j;
      out.latents.push_back(representative_latent(draws, layout.latent_dim(j), rc).z);
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

ExperimentReport run_experiment(const BenchConfig& config) {
  if (config.replicates < 1) throw ValidationError("replicates must be >= 1");
  if (config.test_size < 2) throw ValidationError("test_size must be >= 2");
  if (config.methods.empty()) throw ValidationError("no methods requested");
  for (const auto& ms : config.methods) parse_method(ms);  // validate up front

  const MixedFunction func = resolve_function(config);
  ExperimentReport report;
  report.config = config;

  const int R = config.replicates;
  const int K = static_cast<int>(config.methods.size());
  report.rows.resize(R * K);
  std::vector<std::vector<LatentRow>> latents0(K);

  // Each replicate owns its RNG stream; inner fits run single-threaded so
  // the outer pool carries all parallelism deterministically.
  auto run_replicate = [&](int r) {
    const std::uint64_t rep_seed = config.seed * 0x9e3779b97f4a7c15ULL + (r + 1);
    Dataset train = stratified_doe(func.space, config.per_level, rep_seed);
    train.y = eval_all(func, train);
    Dataset test = uniform_test_set(func.space, config.test_size, rep_seed ^ 0xC0FFEEULL);
    const Eigen::VectorXd y_true = eval_all(func, test);

    auto [std_train, scaling] = standardize(train, func.space);
    Dataset std_test = test;
    std_test.x = scaling.scale_x(test.x);

    for (int k = 0; k < K; ++k) {
      MetricRow& row = report.rows[r * K + k];
      row.replicate = r;
      row.method = config.methods[k];
      row.train_n = train.n();
      const auto t0 = std::chrono::steady_clock::now();
      try {
        ParsedMethod pm = parse_method(config.methods[k]);
        FitOutput fit = run_method(pm, config, func.space, std_train, std_test,
                                   rep_seed * 31 + 7 * k, r == 0);
        Eigen::VectorXd mean(fit.mean.size()), lower(fit.mean.size()),
            upper(fit.mean.size());
        for (int i = 0; i < mean.size(); ++i) {
          mean[i] = scaling.unscale_y(fit.mean[i]);
          lower[i] = scaling.unscale_y(fit.lower[i]);
          upper[i] = scaling.unscale_y(fit.upper[i]);
        }
        row.rrmse = rrmse(y_true, mean);
        row.mis = mis(y_true, lower, upper);
        row.coverage = coverage(y_true, lower, upper);
        if (r == 0) {
          for (size_t j = 0; j < fit.latents.size(); ++j)
            for (int l = 0; l < fit.latents[j].rows(); ++l) {
              LatentRow lrow;
              lrow.method = config.methods[k];
              lrow.variable = func.space.qual()[j].name;
              lrow.level = l + 1;
              for (int d = 0; d < fit.latents[j].cols(); ++d)
                lrow.z.push_back(fit.latents[j](l, d));
              latents0[k].push_back(std::move(lrow));
            }
        }
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      row.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };

  int threads = config.threads;
  if (threads <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    threads = hw > 0 ? static_cast<int>(hw) : 1;
  }
  {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(R);
    std::vector<std::thread> pool;
    const int workers = std::min(threads, R);
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1)) {
          try {
            run_replicate(r);
          } catch (...) {
            errors[r] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (int k = 0; k < K; ++k)
    for (auto& lrow : latents0[k]) report.latents.push_back(std::move(lrow));
  for (const auto& row : report.rows)
    if (!row.ok)
      report.warnings.push_back("replicate " + std::to_string(row.replicate) + " " +
                                row.method + " failed: " + row.error);
  return report;
}

std::string ExperimentReport::metrics_csv() const {
  std::ostringstream os;
  // Wall-clock timings live in report.json only: this file must be
  // byte-reproducible across runs at a fixed seed.
  os << "replicate,method,size,rrmse,mis,coverage\n";
  for (const auto& row : rows) {
    os << row.replicate << "," << row.method << "," << row.train_n << ",";
    if (row.ok)
      os << fmt(row.rrmse) << "," << fmt(row.mis) << "," << fmt(row.coverage);
    else
      os << "nan,nan,nan";
    os << "\n";
  }
  return os.str();
}

std::string ExperimentReport::to_json() const {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(config.to_json());
  nlohmann::json seeds = nlohmann::json::array();
  for (int r = 0; r < config.replicates; ++r)
    seeds.push_back(config.seed * 0x9e3779b97f4a7c15ULL + (r + 1));
  j["replicate_seeds"] = seeds;
  nlohmann::json rws = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json rj;
    rj["replicate"] = row.replicate;
    rj["method"] = row.method;
    rj["train_n"] = row.train_n;
    rj["ok"] = row.ok;
    if (row.ok) {
      rj["rrmse"] = row.rrmse;
      rj["mis"] = row.mis;
      rj["coverage"] = row.coverage;
    } else {
      rj["error"] = row.error;
    }
    rj["seconds"] = row.seconds;
    rws.push_back(rj);
  }
  j["rows"] = rws;
  j["warnings"] = warnings;
  return j.dump(2);
}

void write_report(const ExperimentReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "report.json");
    f << report.to_json() << "\n";
  }
  {
    std::ofstream f(fs::path(out_dir) / "metrics.csv");
    f << report.metrics_csv();
  }
  // One latent CSV per method, plot-ready.
  for (const auto& method : report.config.methods) {
    std::ofstream f(fs::path(out_dir) / ("latents_" + method + ".csv"));
    int maxd = 0;
    for (const auto& lrow : report.latents)
      if (lrow.method == method) maxd = std::max(maxd, static_cast<int>(lrow.z.size()));
    f << "variable,level";
    for (int d = 0; d < maxd; ++d) f << ",z" << (d + 1);
    f << "\n";
    for (const auto& lrow : report.latents) {
      if (lrow.method != method) continue;
      f << lrow.variable << "," << lrow.level;
      for (double zv : lrow.z) f << "," << fmt(zv);
      f << "\n";
    }
  }
}

}  // namespace lvgp::bench
