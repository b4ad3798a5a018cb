#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lvgp/input_space.hpp"

namespace lvgp::bench {

/// Deterministic engineering test function over a box domain.
struct TestFunction {
  std::string name;
  std::vector<QuantVar> inputs;  // names and declared ranges
  std::function<double(const Eigen::VectorXd&)> eval;

  int dim() const { return static_cast<int>(inputs.size()); }
  int input_index(const std::string& var) const;  // throws on unknown name
};

TestFunction borehole();  // inputs (rw, r, Tu, Hu, Tl, Hl, L, Kw)
TestFunction otl();       // inputs (Rb1, Rb2, Rf, Rc1, Rc2, B)
TestFunction piston();    // inputs (M, S, V0, k, P0, T, T0)

/// Exposed intermediate of the OTL circuit for testing.
double otl_vb1(double rb1, double rb2);

/// Test function over a mixed space: quantitative inputs plus qualitative
/// level indices.
struct MixedFunction {
  std::string name;
  InputSpace space;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXi&)> eval;
};

/// Replace the named quantitative inputs by a single qualitative variable
/// whose levels enumerate the Cartesian grid of equally spaced values
/// (endpoints included). Evaluation substitutes the grid values back into
/// the original function.
MixedFunction discretize(const TestFunction& func,
                         const std::vector<std::pair<std::string, int>>& vars);

/// Synthetic all-qualitative stand-in: a random function over the joint
/// level grid, drawn from an LVGP prior with random latent maps.
MixedFunction synthetic_qualitative(const std::vector<int>& levels,
                                    std::uint64_t seed);

// ---- metrics ----

/// Relative root mean-squared error: sqrt(sum (y-yhat)^2 / sum (y-ybar)^2).
double rrmse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

/// Negatively oriented interval score for a central interval at the given
/// level: (u-l) + (2/a)(l-y)_+ + (2/a)(y-u)_+ with a = 1 - level.
double interval_score(double y, double l, double u, double level = 0.95);
double mis(const Eigen::VectorXd& y, const Eigen::VectorXd& lower,
           const Eigen::VectorXd& upper, double level = 0.95);
double coverage(const Eigen::VectorXd& y, const Eigen::VectorXd& lower,
                const Eigen::VectorXd& upper);

/// Monte Carlo total Sobol index (Jansen estimator) for one input of a test
/// function, sampling uniformly over the declared ranges.
double total_sobol(const TestFunction& func, const std::string& var, int n,
                   std::uint64_t seed);

// ---- replication harness ----

struct BenchConfig {
  std::string function = "borehole";  // borehole | otl | piston | synthetic
  int per_level = 2;
  int replicates = 25;
  int test_size = 1000;
  std::vector<std::string> methods = {"map-exact", "bayes-exact"};
  int inducing = 50;
  int latent_dim = 2;
  int restarts = 8;
  int chains = 4;
  int warmup = 500;
  int draws = 250;
  int interval_samples = 10000;
  std::uint64_t seed = 0;
  int threads = 0;

  std::string to_json() const;
  static BenchConfig from_json(const std::string& text);
};

struct MetricRow {
  int replicate = 0;
  std::string method;
  int train_n = 0;
  double rrmse = 0.0, mis = 0.0, coverage = 0.0, seconds = 0.0;
  bool ok = true;
  std::string error;
};

struct LatentRow {
  std::string method, variable;
  int level = 0;  // 1-based
  std::vector<double> z;
};

struct ExperimentReport {
  BenchConfig config;
  std::vector<MetricRow> rows;
  std::vector<LatentRow> latents;  // from replicate 0, per method
  std::vector<std::string> warnings;

  std::string to_json() const;
  std::string metrics_csv() const;
};

/// Run the replication protocol: per replicate a fresh stratified DoE,
/// a fit per requested method, and metrics over a fresh uniform test set.
/// Per-replicate failures are recorded in the report and the run continues.
ExperimentReport run_experiment(const BenchConfig& config);

/// Write report.json, metrics.csv, and per-method latent CSVs.
void write_report(const ExperimentReport& report, const std::string& out_dir);

}  // namespace lvgp::bench
