#include <cmath>
#include <random>

#include "doctest.h"
#include "lvgp/latent.hpp"

using namespace lvgp;

namespace {

Eigen::MatrixXd pairwise(const Eigen::MatrixXd& m) {
  const int L = static_cast<int>(m.rows());
  Eigen::MatrixXd d(L, L);
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) d(a, b) = (m.row(a) - m.row(b)).norm();
  return d;
}

void check_structural_zeros(const Eigen::MatrixXd& z) {
  const int d = static_cast<int>(z.cols());
  for (int l = 0; l < std::min<int>(d, static_cast<int>(z.rows())); ++l)
    for (int r = l; r < d; ++r) CHECK(z(l, r) == 0.0);
}

}  // namespace

TEST_CASE("single level maps to the origin") {
  Eigen::MatrixXd raw(1, 3);
  raw << 4.0, -2.0, 7.0;
  Eigen::MatrixXd z = latent_from_raw(raw);
  CHECK(z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("d=2 worked example") {
  Eigen::MatrixXd raw(3, 2);
  raw << 1, 1, 2, 2, 0, 1;
  Eigen::MatrixXd z = latent_from_raw(raw);
  CHECK(z.row(0).norm() == 0.0);
  CHECK(z(1, 0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(z(1, 1) == 0.0);
  CHECK(z.row(2).norm() == doctest::Approx(1.0));  // |(0,1) - (1,1)|
  Eigen::MatrixXd dr = pairwise(raw), dz = pairwise(z);
  CHECK((dr - dz).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("d=3 structural pattern and distance preservation") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd raw(4, 3);
  for (int l = 0; l < 4; ++l)
    for (int r = 0; r < 3; ++r) raw(l, r) = nd(rng);
  Eigen::MatrixXd z = latent_from_raw(raw);
  CHECK(z.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(z(1, 1) == 0.0);
  CHECK(z(1, 2) == 0.0);
  CHECK(z(2, 2) == 0.0);
  CHECK((pairwise(raw) - pairwise(z)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("random transforms preserve distances and zero pattern") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    const int L = 2 + static_cast<int>(rng() % 7);  // up to 8
    const int d = 1 + static_cast<int>(rng() % 4);  // up to 4
    Eigen::MatrixXd raw(L, d);
    for (int l = 0; l < L; ++l)
      for (int r = 0; r < d; ++r) raw(l, r) = 3.0 * nd(rng);
    Eigen::MatrixXd z = latent_from_raw(raw);
    check_structural_zeros(z);
    CHECK((pairwise(raw) - pairwise(z)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("rotation and translation of raw leave distances unchanged") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd raw(5, 2);
  for (int l = 0; l < 5; ++l)
    for (int r = 0; r < 2; ++r) raw(l, r) = nd(rng);
  const double phi = 0.83;
  Eigen::Matrix2d q;
  q << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  Eigen::MatrixXd moved = raw * q.transpose();
  moved.rowwise() += Eigen::RowVector2d(1.5, -0.25);
  Eigen::MatrixXd z1 = latent_from_raw(raw);
  Eigen::MatrixXd z2 = latent_from_raw(moved);
  CHECK((pairwise(z1) - pairwise(z2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("coincident rows produce finite output") {
  Eigen::MatrixXd raw(3, 2);
  raw << 1, 1, 1, 1, 1, 1;  // all rows identical
  Eigen::MatrixXd z = latent_from_raw(raw);
  CHECK(z.allFinite());
  CHECK(z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("jacobian matches finite differences") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const int L = 2 + static_cast<int>(rng() % 4);
    const int d = 1 + static_cast<int>(rng() % 3);
    Eigen::MatrixXd raw(L, d);
    for (int l = 0; l < L; ++l)
      for (int r = 0; r < d; ++r) raw(l, r) = nd(rng);
    auto [z, jac] = latent_from_raw_with_jacobian(raw);
    CHECK((z - latent_from_raw(raw)).cwiseAbs().maxCoeff() == 0.0);
    const double h = 1e-6;
    for (int k = 0; k < L * d; ++k) {
      Eigen::MatrixXd rp = raw, rm = raw;
      rp(k / d, k % d) += h;
      rm(k / d, k % d) -= h;
      Eigen::MatrixXd fd = (latent_from_raw(rp) - latent_from_raw(rm)) / (2.0 * h);
      for (int m = 0; m < L * d; ++m) {
        const double analytic = jac(k, m);
        const double numeric = fd(m / d, m % d);
        CHECK(analytic == doctest::Approx(numeric).epsilon(1e-4).scale(1.0));
      }
    }
  }
}
