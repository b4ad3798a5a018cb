// Command-line front end for the LVGP library. All heavy lifting happens
// behind the C API; this binary only parses flags, forwards paths, and maps
// error codes to exit statuses (0 ok, 2 validation, 3 numerical, 4 internal).
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lvgp.h"

namespace {

int finish(int code) {
  if (code != LVGP_OK) std::cerr << "error: " << lvgp_last_error() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-variable Gaussian process regression for mixed "
               "quantitative/qualitative inputs",
               "lvgp"};
  app.require_subcommand(1);

  // ---- fit ----
  std::string fit_data, fit_space, fit_out;
  std::string method = "map", approx = "exact";
  int inducing = 50, latent_dim = 2, restarts = 8, chains = 4, warmup = 500,
      draws = 250, max_iters = 500, threads = 0;
  std::uint64_t seed = 0;
  auto* fit = app.add_subcommand("fit", "Fit an LVGP model and write it as JSON");
  fit->add_option("--data", fit_data, "Training data CSV")->required();
  fit->add_option("--space", fit_space, "Input space declaration JSON")->required();
  fit->add_option("--out", fit_out, "Output model JSON path")->required();
  fit->add_option("--method", method, "Estimator: map, mle, or bayes")
      ->check(CLI::IsMember({"map", "mle", "bayes"}));
  fit->add_option("--approx", approx, "Likelihood: exact, fitc, or vfe")
      ->check(CLI::IsMember({"exact", "fitc", "vfe"}));
  fit->add_option("--inducing", inducing, "Inducing point count for fitc/vfe");
  fit->add_option("--latent-dim", latent_dim, "Latent dimension per qualitative variable");
  fit->add_option("--restarts", restarts, "Optimizer restarts");
  fit->add_option("--chains", chains, "MCMC chains (bayes)");
  fit->add_option("--warmup", warmup, "Warmup iterations per chain (bayes)");
  fit->add_option("--draws", draws, "Posterior draws per chain (bayes)");
  fit->add_option("--max-iters", max_iters, "Optimizer iteration cap");
  fit->add_option("--seed", seed, "Random seed");
  fit->add_option("--threads", threads, "Worker threads (0 = all cores)");

  // ---- predict ----
  std::string pr_model, pr_data, pr_out = "-";
  double pr_level = 0.95;
  int pr_samples = 10000;
  std::uint64_t pr_seed = 0;
  auto* predict = app.add_subcommand("predict", "Predict with a fitted model");
  predict->add_option("--model", pr_model, "Model JSON path")->required();
  predict->add_option("--data", pr_data, "Query inputs CSV")->required();
  predict->add_option("--out", pr_out, "Output CSV path (- for stdout)");
  predict->add_option("--level", pr_level, "Central interval level");
  predict->add_option("--interval-samples", pr_samples,
                      "Monte Carlo samples per interval");
  predict->add_option("--seed", pr_seed, "Random seed for interval sampling");

  // ---- latent ----
  std::string la_model, la_var, la_out = "-";
  std::uint64_t la_seed = 0;
  auto* latent = app.add_subcommand("latent", "Export latent coordinates as CSV");
  latent->add_option("--model", la_model, "Model JSON path")->required();
  latent->add_option("--variable", la_var, "Qualitative variable name")->required();
  latent->add_option("--out", la_out, "Output CSV path (- for stdout)");
  latent->add_option("--seed", la_seed, "Seed for the representative-space solve");

  // ---- bench ----
  std::string be_config, be_out = ".";
  auto* bench = app.add_subcommand("bench", "Run the replication benchmark harness");
  bench->add_option("--config", be_config, "Experiment config JSON")->required();
  bench->add_option("--out-dir", be_out, "Directory for report.json / metrics.csv");

  // ---- doe ----
  std::string doe_space, doe_out = "-";
  int per_level = 2;
  std::uint64_t doe_seed = 0;
  auto* doe = app.add_subcommand("doe", "Generate a stratified design of experiments");
  doe->add_option("--space", doe_space, "Input space declaration JSON")->required();
  doe->add_option("--per-level", per_level, "Rows per joint level combination");
  doe->add_option("--seed", doe_seed, "Random seed");
  doe->add_option("--out", doe_out, "Output CSV path (- for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage problems share the validation exit code; --help stays 0.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (fit->parsed()) {
    nlohmann::json opts;
    opts["method"] = method;
    opts["approx"] = approx;
    opts["inducing"] = inducing;
    opts["latent_dim"] = latent_dim;
    opts["restarts"] = restarts;
    opts["chains"] = chains;
    opts["warmup"] = warmup;
    opts["draws"] = draws;
    opts["max_iters"] = max_iters;
    opts["seed"] = seed;
    opts["threads"] = threads;
    char* summary = nullptr;
    int code = lvgp_fit(fit_space.c_str(), fit_data.c_str(), opts.dump().c_str(),
                        fit_out.c_str(), &summary);
    if (code == LVGP_OK && summary) std::cout << summary;
    lvgp_free(summary);
    return finish(code);
  }
  if (predict->parsed()) {
    lvgp_model* model = nullptr;
    int code = lvgp_model_open(pr_model.c_str(), &model);
    if (code == LVGP_OK)
      code = lvgp_predict(model, pr_data.c_str(), pr_level, pr_samples, pr_seed,
                          pr_out.c_str());
    lvgp_model_close(model);
    return finish(code);
  }
  if (latent->parsed()) {
    lvgp_model* model = nullptr;
    int code = lvgp_model_open(la_model.c_str(), &model);
    if (code == LVGP_OK)
      code = lvgp_latents(model, la_var.c_str(), la_seed, la_out.c_str());
    lvgp_model_close(model);
    return finish(code);
  }
  if (bench->parsed())
    return finish(lvgp_bench(be_config.c_str(), be_out.c_str()));
  if (doe->parsed())
    return finish(lvgp_doe(doe_space.c_str(), per_level, doe_seed, doe_out.c_str()));
  return 0;
}
