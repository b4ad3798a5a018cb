#include "lvgp/latent_interpret.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "lvgp/errors.hpp"
#include "lvgp/latent.hpp"
#include "lvgp/lbfgs.hpp"

namespace lvgp {

Eigen::MatrixXd level_cov(const Eigen::MatrixXd& z) {
  const int L = static_cast<int>(z.rows());
  Eigen::MatrixXd k(L, L);
  for (int a = 0; a < L; ++a) {
    k(a, a) = 1.0;
    for (int b = a + 1; b < L; ++b) {
      k(a, b) = std::exp(-0.5 * (z.row(a) - z.row(b)).squaredNorm());
      k(b, a) = k(a, b);
    }
  }
  return k;
}

namespace {

// Free-entry parameterization of the constrained frame: row l (0-based)
// contributes min(l, d) free entries.
struct FreePattern {
  int L, d;
  std::vector<std::pair<int, int>> entries;

  FreePattern(int L_, int d_) : L(L_), d(d_) {
    for (int l = 0; l < L; ++l)
      for (int r = 0; r < std::min(l, d); ++r) entries.emplace_back(l, r);
  }
  Eigen::MatrixXd expand(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(L, d);
    for (size_t k = 0; k < entries.size(); ++k)
      z(entries[k].first, entries[k].second) = v[k];
    return z;
  }
  Eigen::VectorXd collapse(const Eigen::MatrixXd& z) const {
    Eigen::VectorXd v(entries.size());
    for (size_t k = 0; k < entries.size(); ++k)
      v[k] = z(entries[k].first, entries[k].second);
    return v;
  }
};

}  // namespace

RepresentativeResult representative_latent(const std::vector<Eigen::MatrixXd>& draws,
                                           int d, const RepresentativeConfig& config) {
  if (draws.empty()) throw ValidationError("representative latent needs at least one draw");
  const int L = static_cast<int>(draws[0].rows());
  const int B = static_cast<int>(draws.size());
  for (const auto& z : draws)
    if (z.rows() != L || z.cols() != d)
      throw ValidationError("latent draws disagree on L or d");

  std::vector<Eigen::MatrixXd> k_draws(B);
  for (int b = 0; b < B; ++b) k_draws[b] = level_cov(draws[b]);

  FreePattern pattern(L, d);

  // Frobenius discrepancy, smoothed near zero so the gradient stays
  // defined when a draw is matched exactly. The smoothing threshold is
  // below the reporting tolerance.
  constexpr double kSmooth = 1e-8;
  Objective objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
    Eigen::MatrixXd z = pattern.expand(v);
    Eigen::MatrixXd k = level_cov(z);
    Eigen::MatrixXd gk = Eigen::MatrixXd::Zero(L, L);
    double total = 0.0;
    for (int b = 0; b < B; ++b) {
      Eigen::MatrixXd diff = k - k_draws[b];
      const double norm = diff.norm();
      if (norm >= kSmooth) {
        total += norm;
        gk += diff / (B * norm);
      } else {
        total += (norm * norm + kSmooth * kSmooth) / (2.0 * kSmooth);
        gk += diff / (B * kSmooth);
      }
    }
    // Chain through the level covariance entries.
    Eigen::MatrixXd gz = Eigen::MatrixXd::Zero(L, d);
    for (int a = 0; a < L; ++a)
      for (int c = 0; c < L; ++c) {
        if (a == c) continue;
        gz.row(a) -= gk(a, c) * k(a, c) * (z.row(a) - z.row(c));
      }
    grad = pattern.collapse(gz);
    return total / B;
  };

  // First start: the draw closest on average to all others, moved into the
  // constrained frame.
  int best_draw = 0;
  {
    double best_avg = std::numeric_limits<double>::infinity();
    for (int b = 0; b < B; ++b) {
      double avg = 0.0;
      for (int b2 = 0; b2 < B; ++b2)
        if (b2 != b) avg += (k_draws[b] - k_draws[b2]).norm();
      if (avg < best_avg) {
        best_avg = avg;
        best_draw = b;
      }
    }
  }

  LbfgsOptions opts;
  opts.max_iters = config.max_iters;
  opts.grad_tol = 1e-8;

  RepresentativeResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::string failures;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(L)));
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    Eigen::VectorXd start;
    if (r == 0) {
      start = pattern.collapse(latent_from_raw(draws[best_draw]));
    } else {
      start.resize(pattern.entries.size());
      for (int k = 0; k < start.size(); ++k) start[k] = normal(rng);
    }
    LbfgsResult res = lbfgs_minimize(objective, start, opts);
    if (!std::isfinite(res.value)) {
      failures += " [" + res.message + "]";
      continue;
    }
    if (res.value < best.objective) {
      best.objective = res.value;
      best.z = pattern.expand(res.x);
    }
  }
  if (!std::isfinite(best.objective))
    throw NumericalError("representative latent optimization failed:" + failures);

  // Canonicalize reflections: first nonzero entry per column nonnegative.
  for (int c = 0; c < d; ++c)
    for (int l = 0; l < L; ++l) {
      if (std::abs(best.z(l, c)) > 1e-9) {
        if (best.z(l, c) < 0) best.z.col(c) = -best.z.col(c);
        break;
      }
    }
  // Normalize negative zeros left behind by reflections.
  best.z = best.z.unaryExpr([](double v) { return v == 0.0 ? 0.0 : v; });
  return best;
}

}  // namespace lvgp
