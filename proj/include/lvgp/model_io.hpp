#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "lvgp/inference.hpp"
#include "lvgp/input_space.hpp"
#include "lvgp/priors.hpp"
#include "lvgp/sparse.hpp"

namespace lvgp {

/// A fitted model as persisted to JSON: the space declaration, scaling,
/// priors, the standardized training data, and either a single optimum
/// (map/mle) or posterior draws (bayes). Sparse fits additionally carry the
/// inducing set and the approximation tag.
struct Model {
  InputSpace space;
  ScalingInfo scaling;
  PriorSpec priors;
  int latent_dim = 2;
  double noise_floor = 1e-8;
  std::string estimator;  // map | mle | bayes
  std::string approx;     // exact | fitc | vfe

  Dataset train;  // standardized

  Eigen::VectorXd map_v;       // unconstrained optimum (map/mle)
  double map_value = 0.0;
  Eigen::MatrixXd draws;       // B x dim unconstrained draws (bayes)
  int chains = 0;

  std::optional<InducingSet> inducing;  // sparse only

  std::vector<std::string> diagnostics;  // human-readable fit notes

  explicit Model(InputSpace s) : space(std::move(s)) {}

  ParamLayout layout() const {
    return ParamLayout::for_space(space, latent_dim, noise_floor);
  }
  bool is_bayes() const { return estimator == "bayes"; }
  bool is_sparse() const { return approx != "exact"; }

  std::string to_json() const;
  static Model from_json(const std::string& text);
  static Model from_json_file(const std::string& path);
  void save(const std::string& path) const;
};

struct Predictions {
  Eigen::VectorXd mean, variance, lower, upper;  // original response scale
};

/// Predict at validated (raw-scale) query inputs. MAP/MLE models use
/// Gaussian quantile intervals; Bayes models use the Monte Carlo mixture
/// interval algorithm with `interval_samples` draws per point.
Predictions predict_model(const Model& model, const Dataset& query,
                          double level = 0.95, int interval_samples = 10000,
                          std::uint64_t seed = 0, int threads = 0);

/// Latent coordinate export for one qualitative variable. For MAP/MLE, one
/// row per level ("map" kind). For Bayes, per-draw rows ("draw" kind, with
/// the draw index) followed by the representative latent rows ("representative").
struct LatentExportRow {
  std::string kind;  // map | draw | representative
  int draw = -1;
  std::string level;
  std::vector<double> z;
};
std::vector<LatentExportRow> export_latents(const Model& model,
                                            const std::string& variable,
                                            std::uint64_t seed = 0);

}  // namespace lvgp
