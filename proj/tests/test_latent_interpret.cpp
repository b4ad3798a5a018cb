#include <cmath>
#include <random>

#include "doctest.h"
#include "lvgp/errors.hpp"
#include "lvgp/latent.hpp"
#include "lvgp/latent_interpret.hpp"

using namespace lvgp;

namespace {

Eigen::MatrixXd rotate2(const Eigen::MatrixXd& z, double phi) {
  Eigen::Matrix2d q;
  q << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return z * q.transpose();
}

}  // namespace

TEST_CASE("level covariance oracles") {
  Eigen::MatrixXd z(2, 2);
  z << 0, 0, 2, 0;
  Eigen::MatrixXd k = level_cov(z);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(1, 1) == 1.0);
  CHECK(k(0, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(k(1, 0) == k(0, 1));

  // Identical rows give the all-ones matrix.
  Eigen::MatrixXd same = Eigen::MatrixXd::Constant(3, 2, 0.4);
  Eigen::MatrixXd k1 = level_cov(same);
  CHECK((k1.array() - 1.0).abs().maxCoeff() == 0.0);

  // Permuting the levels permutes rows and columns together.
  Eigen::MatrixXd z3(3, 2);
  z3 << 0, 0, 1, 0, 0.3, 0.8;
  Eigen::MatrixXd k3 = level_cov(z3);
  Eigen::MatrixXd zp(3, 2);
  zp.row(0) = z3.row(2);
  zp.row(1) = z3.row(0);
  zp.row(2) = z3.row(1);
  Eigen::MatrixXd kp = level_cov(zp);
  CHECK(kp(0, 1) == doctest::Approx(k3(2, 0)).epsilon(1e-14));
  CHECK(kp(1, 2) == doctest::Approx(k3(0, 1)).epsilon(1e-14));
}

TEST_CASE("a single draw is recovered almost exactly") {
  Eigen::MatrixXd z(4, 2);
  z << 0, 0, 1.2, 0, 0.4, 0.9, -0.5, 0.3;
  RepresentativeConfig config;
  config.seed = 5;
  RepresentativeResult res = representative_latent({z}, 2, config);
  CHECK(res.objective < 1e-6);
  CHECK((level_cov(res.z) - level_cov(z)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("rotated copies collapse to one representative") {
  Eigen::MatrixXd base(4, 2);
  base << 0, 0, 1.0, 0, 0.2, 0.8, -0.6, 0.4;
  std::vector<Eigen::MatrixXd> draws;
  for (double phi : {0.0, 0.7, 1.9, -2.4}) {
    Eigen::MatrixXd rotated = rotate2(base, phi);
    rotated.rowwise() += Eigen::RowVector2d(0.3 * phi, -0.1 * phi);
    draws.push_back(latent_from_raw(rotated));
  }
  RepresentativeConfig config;
  config.seed = 9;
  RepresentativeResult res = representative_latent(draws, 2, config);
  CHECK(res.objective < 1e-6);
  // Distances among the representative's rows equal the common geometry.
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double want = (base.row(a) - base.row(b)).norm();
      CHECK((res.z.row(a) - res.z.row(b)).norm() ==
            doctest::Approx(want).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("representative obeys the constrained frame and sign convention") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  std::vector<Eigen::MatrixXd> draws;
  Eigen::MatrixXd base(5, 2);
  for (int l = 0; l < 5; ++l)
    for (int r = 0; r < 2; ++r) base(l, r) = nd(rng);
  for (int b = 0; b < 6; ++b) {
    Eigen::MatrixXd noisy = base;
    for (int l = 0; l < 5; ++l)
      for (int r = 0; r < 2; ++r) noisy(l, r) += 0.05 * nd(rng);
    draws.push_back(latent_from_raw(noisy));
  }
  RepresentativeResult res = representative_latent(draws, 2, {});
  CHECK(res.z.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.z(1, 1) == 0.0);
  for (int c = 0; c < 2; ++c) {
    for (int l = 0; l < 5; ++l) {
      if (std::abs(res.z(l, c)) > 1e-9) {
        CHECK(res.z(l, c) > 0.0);
        break;
      }
    }
  }
  // Averaging beats (or ties) any single draw under the shared objective.
  auto discrepancy = [&](const Eigen::MatrixXd& z) {
    double total = 0.0;
    for (const auto& d : draws) total += (level_cov(z) - level_cov(d)).norm();
    return total / draws.size();
  };
  CHECK(res.objective == doctest::Approx(discrepancy(res.z)).epsilon(1e-6));
  for (const auto& d : draws) CHECK(res.objective <= discrepancy(d) + 1e-9);
}

TEST_CASE("draw shape mismatches are rejected") {
  CHECK_THROWS_AS(representative_latent({}, 2, {}), ValidationError);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 2);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 2);
  CHECK_THROWS_AS(representative_latent({a, b}, 2, {}), ValidationError);
}
