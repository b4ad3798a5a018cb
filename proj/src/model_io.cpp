#include "lvgp/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lvgp/errors.hpp"
#include "lvgp/gp_exact.hpp"
#include "lvgp/latent_interpret.hpp"

namespace lvgp {

namespace {

nlohmann::json mat_json(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

nlohmann::json imat_json(const Eigen::MatrixXi& m) {
  nlohmann::json out = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::MatrixXd json_mat(const nlohmann::json& j, int cols_hint = -1) {
  const int rows = static_cast<int>(j.size());
  int cols = cols_hint;
  if (cols < 0) cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

Eigen::MatrixXi json_imat(const nlohmann::json& j, int cols_hint = -1) {
  const int rows = static_cast<int>(j.size());
  int cols = cols_hint;
  if (cols < 0) cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXi m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<int>();
  return m;
}

Eigen::VectorXd json_vec(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

// Acklam's rational approximation of the standard normal quantile,
// refined by one Halley step; absolute error well below 1e-9.
double norm_quantile(double p) {
  if (p <= 0.0 || p >= 1.0) throw ValidationError("quantile argument must be in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, x;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

SparseMethod method_from_tag(const std::string& approx) {
  if (approx == "fitc") return SparseMethod::FITC;
  if (approx == "vfe") return SparseMethod::VFE;
  throw ValidationError("unknown sparse approximation tag '" + approx + "'");
}

}  // namespace

std::string Model::to_json() const {
  nlohmann::json j;
  j["format"] = "lvgp-model-v1";
  j["space"] = nlohmann::json::parse(space.to_json());
  j["scaling"] = {{"x_shift", vec_json(scaling.x_shift)},
                  {"x_scale", vec_json(scaling.x_scale)},
                  {"y_mean", scaling.y_mean},
                  {"y_sd", scaling.y_sd}};
  j["priors"] = nlohmann::json::parse(priors.to_json());
  j["latent_dim"] = latent_dim;
  j["noise_floor"] = noise_floor;
  j["estimator"] = estimator;
  j["approx"] = approx;

  j["train"] = {{"x", mat_json(train.x)},
                {"levels", imat_json(train.levels)},
                {"y", vec_json(train.y)}};

  ParamLayout lay = layout();
  nlohmann::json names = nlohmann::json::array();
  for (int k = 0; k < lay.size(); ++k) names.push_back(lay.param_name(k));
  j["param_names"] = names;

  if (is_bayes()) {
    j["draws"] = mat_json(draws);
    j["chains"] = chains;
  } else {
    j["map"] = {{"v", vec_json(map_v)}, {"value", map_value}};
  }

  if (inducing) {
    nlohmann::json ij;
    ij["x"] = mat_json(inducing->x);
    nlohmann::json psis = nlohmann::json::array();
    for (const auto& psi : inducing->psi) psis.push_back(mat_json(psi));
    ij["psi"] = psis;
    j["inducing"] = ij;
  }
  j["diagnostics"] = diagnostics;
  return j.dump(2);
}

Model Model::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad model JSON: ") + e.what());
  }
  if (!j.contains("format") || j["format"] != "lvgp-model-v1")
    throw ValidationError("unrecognized model format tag");
  try {
    Model m(InputSpace::from_json(j["space"].dump()));
    m.scaling.x_shift = json_vec(j["scaling"]["x_shift"]);
    m.scaling.x_scale = json_vec(j["scaling"]["x_scale"]);
    m.scaling.y_mean = j["scaling"]["y_mean"].get<double>();
    m.scaling.y_sd = j["scaling"]["y_sd"].get<double>();
    m.priors = PriorSpec::from_json(j["priors"].dump());
    m.latent_dim = j["latent_dim"].get<int>();
    m.noise_floor = j["noise_floor"].get<double>();
    m.estimator = j["estimator"].get<std::string>();
    m.approx = j["approx"].get<std::string>();

    m.train.x = json_mat(j["train"]["x"], m.space.num_quant());
    m.train.levels = json_imat(j["train"]["levels"], m.space.num_qual());
    m.train.y = json_vec(j["train"]["y"]);

    if (m.is_bayes()) {
      m.draws = json_mat(j["draws"]);
      m.chains = j.value("chains", 0);
    } else {
      m.map_v = json_vec(j["map"]["v"]);
      m.map_value = j["map"]["value"].get<double>();
    }
    if (j.contains("inducing")) {
      InducingSet ind;
      ind.x = json_mat(j["inducing"]["x"], m.space.num_quant());
      for (const auto& psi : j["inducing"]["psi"]) ind.psi.push_back(json_mat(psi));
      m.inducing = std::move(ind);
    }
    if (j.contains("diagnostics"))
      m.diagnostics = j["diagnostics"].get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad model JSON field: ") + e.what());
  }
}

Model Model::from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

void Model::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write model file '" + path + "'");
  f << to_json() << "\n";
}

Predictions predict_model(const Model& model, const Dataset& query, double level,
                          int interval_samples, std::uint64_t seed, int threads) {
  ParamLayout lay = model.layout();
  Eigen::MatrixXd xq = model.scaling.scale_x(query.x);

  auto one_predict = [&](const HyperParams& theta) {
    if (model.is_sparse()) {
      if (!model.inducing) throw ValidationError("sparse model lacks an inducing set");
      return sparse_predict(theta, *model.inducing, model.train, xq, query.levels,
                            method_from_tag(model.approx));
    }
    FactorizedModel fm =
        factorize(theta, model.train.x, model.train.levels, model.train.y);
    return predict(fm, xq, query.levels);
  };

  Predictions out;
  const double sd2 = model.scaling.y_sd * model.scaling.y_sd;
  if (!model.is_bayes()) {
    HyperParams theta = lay.unpack(model.map_v);
    auto [mean, var] = one_predict(theta);
    const double z = norm_quantile(0.5 + level / 2.0);
    out.mean.resize(mean.size());
    out.variance = var * sd2;
    out.lower.resize(mean.size());
    out.upper.resize(mean.size());
    for (int i = 0; i < mean.size(); ++i) {
      const double s = std::sqrt(var[i]);
      out.mean[i] = model.scaling.unscale_y(mean[i]);
      out.lower[i] = model.scaling.unscale_y(mean[i] - z * s);
      out.upper[i] = model.scaling.unscale_y(mean[i] + z * s);
    }
    return out;
  }

  const int B = static_cast<int>(model.draws.rows());
  PredictiveMixture mix;
  mix.means.resize(B, query.n());
  mix.variances.resize(B, query.n());
  for (int b = 0; b < B; ++b) {
    HyperParams theta = lay.unpack(model.draws.row(b).transpose());
    auto [mean, var] = one_predict(theta);
    mix.means.row(b) = mean;
    mix.variances.row(b) = var;
  }
  (void)threads;
  Eigen::VectorXd mean = mix.mixture_mean();
  Eigen::VectorXd var = mix.mixture_variance();
  Eigen::MatrixX2d bounds = prediction_interval(mix, level, interval_samples, seed);
  out.mean.resize(mean.size());
  out.variance = var * sd2;
  out.lower.resize(mean.size());
  out.upper.resize(mean.size());
  for (int i = 0; i < mean.size(); ++i) {
    out.mean[i] = model.scaling.unscale_y(mean[i]);
    out.lower[i] = model.scaling.unscale_y(bounds(i, 0));
    out.upper[i] = model.scaling.unscale_y(bounds(i, 1));
  }
  return out;
}

std::vector<LatentExportRow> export_latents(const Model& model,
                                            const std::string& variable,
                                            std::uint64_t seed) {
  int j = -1;
  for (int q = 0; q < model.space.num_qual(); ++q)
    if (model.space.qual()[q].name == variable) j = q;
  if (j < 0) throw ValidationError("unknown qualitative variable '" + variable + "'");

  ParamLayout lay = model.layout();
  const auto& labels = model.space.qual()[j].levels;
  std::vector<LatentExportRow> rows;

  auto push_rows = [&](const Eigen::MatrixXd& z, const std::string& kind, int draw) {
    for (int l = 0; l < z.rows(); ++l) {
      LatentExportRow row;
      row.kind = kind;
      row.draw = draw;
      row.level = labels[l];
      for (int d = 0; d < z.cols(); ++d) row.z.push_back(z(l, d));
      rows.push_back(std::move(row));
    }
  };

  if (!model.is_bayes()) {
    HyperParams theta = lay.unpack(model.map_v);
    push_rows(theta.latent_maps[j].z, "map", -1);
    return rows;
  }

  std::vector<Eigen::MatrixXd> draws_z;
  for (int b = 0; b < model.draws.rows(); ++b) {
    HyperParams theta = lay.unpack(model.draws.row(b).transpose());
    push_rows(theta.latent_maps[j].z, "draw", b);
    draws_z.push_back(theta.latent_maps[j].z);
  }
  RepresentativeConfig rc;
  rc.seed = seed;
  RepresentativeResult rep = representative_latent(draws_z, lay.latent_dim(j), rc);
  push_rows(rep.z, "representative", -1);
  return rows;
}

}  // namespace lvgp
