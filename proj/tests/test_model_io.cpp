#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "lvgp/errors.hpp"
#include "lvgp/model_io.hpp"

using namespace lvgp;

namespace {

InputSpace toy_space() {
  return InputSpace({{"x", 0.0, 2.0}}, {{"t", {"a", "b", "c"}}});
}

Dataset raw_training(std::mt19937_64& rng, int N) {
  std::uniform_real_distribution<double> ud(0.0, 2.0);
  std::normal_distribution<double> nd;
  Dataset d;
  d.x.resize(N, 1);
  d.levels.resize(N, 1);
  d.y.resize(N);
  for (int n = 0; n < N; ++n) {
    d.x(n, 0) = ud(rng);
    d.levels(n, 0) = 1 + static_cast<int>(rng() % 3);
    d.y[n] = 3.0 + std::sin(2.0 * d.x(n, 0)) + 0.7 * d.levels(n, 0) + 0.05 * nd(rng);
  }
  return d;
}

Model fit_toy_map(std::mt19937_64& rng) {
  InputSpace space = toy_space();
  Dataset raw = raw_training(rng, 24);
  auto [train, scaling] = standardize(raw, space);
  Model model(space);
  model.scaling = scaling;
  model.estimator = "map";
  model.approx = "exact";
  model.train = train;
  MapConfig config;
  config.restarts = 3;
  config.seed = 2;
  config.threads = 2;
  MapFitResult fit = fit_map(train, model.layout(), model.priors, config);
  model.map_v = fit.v;
  model.map_value = fit.value;
  return model;
}

Dataset raw_query() {
  Dataset q;
  q.x.resize(3, 1);
  q.x << 0.2, 1.0, 1.8;
  q.levels.resize(3, 1);
  q.levels << 1, 2, 3;
  return q;
}

}  // namespace

TEST_CASE("model JSON round trip preserves predictions") {
  std::mt19937_64 rng(3);
  Model model = fit_toy_map(rng);
  model.diagnostics.push_back("note");

  Model back = Model::from_json(model.to_json());
  CHECK(back.estimator == "map");
  CHECK(back.approx == "exact");
  CHECK(!back.is_bayes());
  CHECK(!back.is_sparse());
  CHECK(back.space.qual()[0].levels == std::vector<std::string>{"a", "b", "c"});
  CHECK(back.scaling.y_mean == doctest::Approx(model.scaling.y_mean).epsilon(1e-15));
  CHECK(back.scaling.y_sd == doctest::Approx(model.scaling.y_sd).epsilon(1e-15));
  CHECK((back.map_v - model.map_v).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.train.y - model.train.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.diagnostics == model.diagnostics);

  Dataset q = raw_query();
  Predictions a = predict_model(model, q);
  Predictions b = predict_model(back, q);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.lower - b.lower).cwiseAbs().maxCoeff() == 0.0);

  const std::string path = "/tmp/lvgp_test_model.json";
  model.save(path);
  Model loaded = Model::from_json_file(path);
  CHECK(loaded.to_json() == model.to_json());
  std::remove(path.c_str());
  CHECK_THROWS_AS(Model::from_json_file("/tmp/lvgp_no_such_model.json"),
                  ValidationError);
}

TEST_CASE("MAP predictions are Gaussian intervals on the original scale") {
  std::mt19937_64 rng(5);
  Model model = fit_toy_map(rng);
  Dataset q = raw_query();
  Predictions p = predict_model(model, q, 0.95);
  for (int n = 0; n < 3; ++n) {
    CHECK(p.variance[n] >= 0.0);
    CHECK(p.lower[n] <= p.mean[n]);
    CHECK(p.upper[n] >= p.mean[n]);
    // Central normal interval: mean +/- z_{0.975} sd.
    const double hw = 1.959963984540054 * std::sqrt(p.variance[n]);
    CHECK(p.lower[n] == doctest::Approx(p.mean[n] - hw).epsilon(1e-9));
    CHECK(p.upper[n] == doctest::Approx(p.mean[n] + hw).epsilon(1e-9));
    // Fitted near-noiseless model should track the toy response.
    const double truth =
        3.0 + std::sin(2.0 * q.x(n, 0)) + 0.7 * q.levels(n, 0);
    CHECK(std::abs(p.mean[n] - truth) < 0.5);
  }
  Predictions wide = predict_model(model, q, 0.99);
  for (int n = 0; n < 3; ++n) {
    CHECK(wide.lower[n] <= p.lower[n]);
    CHECK(wide.upper[n] >= p.upper[n]);
  }
}

TEST_CASE("bayes model predictions and latent export") {
  std::mt19937_64 rng(7);
  InputSpace space = toy_space();
  Dataset raw = raw_training(rng, 20);
  auto [train, scaling] = standardize(raw, space);
  Model model(space);
  model.scaling = scaling;
  model.estimator = "bayes";
  model.approx = "exact";
  model.train = train;
  SamplerConfig config;
  config.chains = 2;
  config.warmup = 120;
  config.draws = 40;
  config.seed = 9;
  config.threads = 2;
  PosteriorSamples samples = sample_posterior(train, model.layout(), model.priors,
                                              config);
  model.draws = samples.draws;
  model.chains = samples.chains;
  CHECK(model.is_bayes());

  Dataset q = raw_query();
  Predictions p = predict_model(model, q, 0.95, 10000, 4);
  for (int n = 0; n < 3; ++n) {
    CHECK(std::isfinite(p.mean[n]));
    CHECK(p.lower[n] < p.mean[n]);
    CHECK(p.upper[n] > p.mean[n]);
  }
  // Interval sampling is deterministic in the seed.
  Predictions p2 = predict_model(model, q, 0.95, 10000, 4);
  CHECK((p.lower - p2.lower).cwiseAbs().maxCoeff() == 0.0);

  // One row per (draw, level) plus the representative rows.
  auto rows = export_latents(model, "t", 1);
  const int B = static_cast<int>(model.draws.rows());
  REQUIRE(static_cast<int>(rows.size()) == 3 * B + 3);
  int n_draw = 0, n_rep = 0;
  for (const auto& row : rows) {
    CHECK(row.z.size() == 2);
    if (row.kind == "draw") {
      ++n_draw;
      CHECK(row.draw >= 0);
      CHECK(row.draw < B);
    } else {
      CHECK(row.kind == "representative");
      ++n_rep;
    }
    CHECK((row.level == "a" || row.level == "b" || row.level == "c"));
  }
  CHECK(n_draw == 3 * B);
  CHECK(n_rep == 3);

  CHECK_THROWS_AS(export_latents(model, "bogus", 1), ValidationError);
}

TEST_CASE("MAP latent export has one row per level") {
  std::mt19937_64 rng(11);
  Model model = fit_toy_map(rng);
  auto rows = export_latents(model, "t", 0);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].kind == "map");
  CHECK(rows[0].level == "a");
  CHECK(rows[2].level == "c");
  for (const auto& row : rows) CHECK(row.z.size() == 2);
  // The first level sits at the origin in the constrained frame.
  CHECK(rows[0].z[0] == 0.0);
  CHECK(rows[0].z[1] == 0.0);
}
