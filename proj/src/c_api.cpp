#include "lvgp.h"

#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "lvgp/bench.hpp"
#include "lvgp/errors.hpp"
#include "lvgp/inference.hpp"
#include "lvgp/input_space.hpp"
#include "lvgp/model_io.hpp"
#include "lvgp/sparse.hpp"

namespace {

thread_local std::string g_last_error;

template <typename F>
int guard(F&& fn) {
  try {
    fn();
    return LVGP_OK;
  } catch (const lvgp::ValidationError& e) {
    g_last_error = e.what();
    return LVGP_ERR_VALIDATION;
  } catch (const lvgp::NumericalError& e) {
    g_last_error = e.what();
    return LVGP_ERR_NUMERICAL;
  } catch (const lvgp::InternalError& e) {
    g_last_error = e.what();
    return LVGP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LVGP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LVGP_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw lvgp::ValidationError(std::string(what) + " must not be null");
}

// "-" selects standard output.
void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path);
  if (!f) throw lvgp::ValidationError("cannot write to '" + path + "'");
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw lvgp::ValidationError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

struct FitOptions {
  std::string method = "map";
  std::string approx = "exact";
  int inducing = 50;
  int latent_dim = 2;
  int restarts = 8;
  int chains = 4;
  int warmup = 500;
  int draws = 250;
  int max_iters = 500;
  std::uint64_t seed = 0;
  int threads = 0;
  lvgp::PriorSpec priors;
};

FitOptions parse_fit_options(const char* options_json) {
  FitOptions opts;
  if (!options_json || !*options_json) return opts;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(options_json);
  } catch (const nlohmann::json::exception& e) {
    throw lvgp::ValidationError(std::string("bad fit options JSON: ") + e.what());
  }
  try {
    if (j.contains("method")) opts.method = j["method"].get<std::string>();
    if (j.contains("approx")) opts.approx = j["approx"].get<std::string>();
    if (j.contains("inducing")) opts.inducing = j["inducing"].get<int>();
    if (j.contains("latent_dim")) opts.latent_dim = j["latent_dim"].get<int>();
    if (j.contains("restarts")) opts.restarts = j["restarts"].get<int>();
    if (j.contains("chains")) opts.chains = j["chains"].get<int>();
    if (j.contains("warmup")) opts.warmup = j["warmup"].get<int>();
    if (j.contains("draws")) opts.draws = j["draws"].get<int>();
    if (j.contains("max_iters")) opts.max_iters = j["max_iters"].get<int>();
    if (j.contains("seed")) opts.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) opts.threads = j["threads"].get<int>();
    if (j.contains("priors")) opts.priors = lvgp::PriorSpec::from_json(j["priors"].dump());
  } catch (const nlohmann::json::exception& e) {
    throw lvgp::ValidationError(std::string("bad fit option field: ") + e.what());
  }
  if (opts.method != "map" && opts.method != "mle" && opts.method != "bayes")
    throw lvgp::ValidationError("method must be map, mle, or bayes");
  if (opts.approx != "exact" && opts.approx != "fitc" && opts.approx != "vfe")
    throw lvgp::ValidationError("approx must be exact, fitc, or vfe");
  return opts;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

extern "C" {

struct lvgp_model {
  lvgp::Model model;
};

const char* lvgp_last_error(void) { return g_last_error.c_str(); }

void lvgp_free(char* ptr) { std::free(ptr); }

int lvgp_doe(const char* space_json_path, int per_level, unsigned long long seed,
             const char* out_csv_path) {
  return guard([&] {
    require(space_json_path, "space path");
    require(out_csv_path, "output path");
    lvgp::InputSpace space = lvgp::InputSpace::from_json_file(space_json_path);
    lvgp::Dataset design = lvgp::stratified_doe(space, per_level, seed);
    lvgp::RawTable table = lvgp::to_table(space, design);
    std::ostringstream os;
    for (size_t i = 0; i < table.columns.size(); ++i)
      os << (i ? "," : "") << table.columns[i];
    os << "\n";
    for (const auto& row : table.rows) {
      for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << "\n";
    }
    write_text(out_csv_path, os.str());
  });
}

int lvgp_fit(const char* space_json_path, const char* data_csv_path,
             const char* options_json, const char* model_out_path,
             char** summary_json) {
  return guard([&] {
    require(space_json_path, "space path");
    require(data_csv_path, "data path");
    require(model_out_path, "model output path");

    FitOptions opts = parse_fit_options(options_json);
    lvgp::InputSpace space = lvgp::InputSpace::from_json_file(space_json_path);
    lvgp::RawTable table = lvgp::RawTable::read_csv(data_csv_path);
    std::vector<std::string> warnings;
    lvgp::Dataset raw = lvgp::validate(space, table, &warnings);
    if (!raw.has_response())
      throw lvgp::ValidationError("data CSV lacks the response column '" +
                                  space.response_name() + "'");
    auto [train, scaling] = lvgp::standardize(raw, space, &warnings);

    const bool sparse = opts.approx != "exact";
    const double floor = sparse ? 1e-6 : 1e-8;
    lvgp::ParamLayout layout =
        lvgp::ParamLayout::for_space(space, opts.latent_dim, floor);
    lvgp::PriorSpec spec = opts.priors;
    if (opts.method == "mle") spec.flat = true;
    const lvgp::SparseMethod smethod =
        opts.approx == "vfe" ? lvgp::SparseMethod::VFE : lvgp::SparseMethod::FITC;

    lvgp::Model model(space);
    model.scaling = scaling;
    model.priors = spec;
    model.latent_dim = opts.latent_dim;
    model.noise_floor = floor;
    model.estimator = opts.method;
    model.approx = opts.approx;
    model.train = train;
    model.diagnostics = warnings;

    nlohmann::json summary;
    summary["method"] = opts.method;
    summary["approx"] = opts.approx;
    summary["n"] = train.n();
    summary["warnings"] = warnings;

    if (opts.method != "bayes") {
      if (!sparse) {
        lvgp::MapConfig mc{opts.restarts, opts.seed, opts.max_iters, opts.threads};
        lvgp::MapFitResult fit = lvgp::fit_map(train, layout, spec, mc);
        model.map_v = fit.v;
        model.map_value = fit.value;
        nlohmann::json rs = nlohmann::json::array();
        for (const auto& t : fit.restarts)
          rs.push_back({{"value", t.value},
                        {"iterations", t.iterations},
                        {"converged", t.converged}});
        summary["restarts"] = rs;
        summary["value"] = fit.value;
      } else {
        const int m = std::min(opts.inducing, train.n() - 1);
        lvgp::SparseFitConfig sc{m, opts.restarts, opts.seed, opts.max_iters,
                                 opts.threads};
        lvgp::SparseFitResult fit =
            lvgp::fit_sparse_map(train, layout, spec, smethod, sc);
        model.map_v = fit.map.v;
        model.map_value = fit.map.value;
        model.inducing = fit.inducing;
        summary["value"] = fit.map.value;
        summary["inducing"] = m;
      }
    } else {
      lvgp::SamplerConfig sc;
      sc.chains = opts.chains;
      sc.warmup = opts.warmup;
      sc.draws = opts.draws;
      sc.seed = opts.seed;
      sc.threads = opts.threads;
      lvgp::PosteriorSamples samples;
      if (!sparse) {
        samples = lvgp::sample_posterior(train, layout, spec, sc);
      } else {
        const int m = std::min(opts.inducing, train.n() - 1);
        lvgp::SparseFitConfig sfc{m, opts.restarts, opts.seed, opts.max_iters,
                                  opts.threads};
        lvgp::SparseFitResult stage1 =
            lvgp::fit_sparse_map(train, layout, spec, smethod, sfc);
        model.inducing = stage1.inducing;
        samples = lvgp::sample_sparse_posterior(train, layout, spec, smethod,
                                                stage1.inducing, sc);
        summary["inducing"] = m;
        summary["stage1_value"] = stage1.map.value;
      }
      model.draws = samples.draws;
      model.chains = samples.chains;
      for (const auto& w : samples.warnings) model.diagnostics.push_back(w);
      summary["chains"] = samples.chains;
      summary["draws"] = samples.b();
      summary["max_split_rhat"] = samples.split_rhat.maxCoeff();
      summary["min_ess"] = samples.ess.minCoeff();
      int div = 0;
      for (const auto& d : samples.chain_diagnostics) div += d.divergences;
      summary["divergences"] = div;
      summary["sampler_warnings"] = samples.warnings;
    }

    model.save(model_out_path);
    if (summary_json) *summary_json = dup_string(summary.dump(2) + "\n");
  });
}

int lvgp_model_open(const char* model_json_path, lvgp_model** out) {
  return guard([&] {
    require(model_json_path, "model path");
    require(out, "output handle");
    *out = new lvgp_model{lvgp::Model::from_json_file(model_json_path)};
  });
}

void lvgp_model_close(lvgp_model* model) { delete model; }

int lvgp_predict(const lvgp_model* model, const char* data_csv_path, double level,
                 int interval_samples, unsigned long long seed,
                 const char* out_csv_path) {
  return guard([&] {
    require(model, "model handle");
    require(data_csv_path, "data path");
    require(out_csv_path, "output path");
    if (!(level > 0.0 && level < 1.0))
      throw lvgp::ValidationError("interval level must be in (0, 1)");

    const lvgp::Model& m = model->model;
    lvgp::RawTable table = lvgp::RawTable::read_csv(data_csv_path);
    lvgp::Dataset query = lvgp::validate(m.space, table);
    lvgp::Predictions pred =
        lvgp::predict_model(m, query, level, interval_samples, seed);

    std::ostringstream os;
    for (const auto& q : m.space.quant()) os << q.name << ",";
    for (const auto& q : m.space.qual()) os << q.name << ",";
    os << "mean,variance,lower95,upper95\n";
    for (int r = 0; r < query.n(); ++r) {
      for (int i = 0; i < m.space.num_quant(); ++i) os << fmt(query.x(r, i)) << ",";
      for (int j = 0; j < m.space.num_qual(); ++j)
        os << m.space.qual()[j].levels[query.levels(r, j) - 1] << ",";
      os << fmt(pred.mean[r]) << "," << fmt(pred.variance[r]) << ","
         << fmt(pred.lower[r]) << "," << fmt(pred.upper[r]) << "\n";
    }
    write_text(out_csv_path, os.str());
  });
}

int lvgp_latents(const lvgp_model* model, const char* variable,
                 unsigned long long seed, const char* out_csv_path) {
  return guard([&] {
    require(model, "model handle");
    require(variable, "variable name");
    require(out_csv_path, "output path");
    std::vector<lvgp::LatentExportRow> rows =
        lvgp::export_latents(model->model, variable, seed);
    int maxd = 0;
    for (const auto& r : rows) maxd = std::max<int>(maxd, static_cast<int>(r.z.size()));
    std::ostringstream os;
    os << "kind,draw,level";
    for (int d = 0; d < maxd; ++d) os << ",z" << (d + 1);
    os << "\n";
    for (const auto& r : rows) {
      os << r.kind << "," << (r.draw >= 0 ? std::to_string(r.draw) : "") << ","
         << r.level;
      for (double z : r.z) os << "," << fmt(z);
      os << "\n";
    }
    write_text(out_csv_path, os.str());
  });
}

int lvgp_bench(const char* config_json_path, const char* out_dir) {
  return guard([&] {
    require(config_json_path, "config path");
    require(out_dir, "output directory");
    lvgp::bench::BenchConfig config =
        lvgp::bench::BenchConfig::from_json(read_file(config_json_path));
    lvgp::bench::ExperimentReport report = lvgp::bench::run_experiment(config);
    lvgp::bench::write_report(report, out_dir);
  });
}

}  // extern "C"
