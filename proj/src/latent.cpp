#include "lvgp/latent.hpp"

#include <cmath>

namespace lvgp {

namespace {

// Applies Z := Z * R_ij(phi) in place, where phi = atan2(Z(p, j), Z(p, i))
// with pivot row p, so that Z(p, j) becomes zero. When `jac` is non-null it
// holds one row per raw parameter (d(vec Z)/d raw_k laid out row-major) and
// is updated through both the linear rotation and the angle's dependence on
// the pivot entries.
void apply_givens(Eigen::MatrixXd& Z, int p, int i, int j, Eigen::MatrixXd* jac) {
  const int L = static_cast<int>(Z.rows());
  const int d = static_cast<int>(Z.cols());
  const double a = Z(p, i);
  const double b = Z(p, j);
  const double r2 = a * a + b * b;
  double c = 1.0, s = 0.0;
  if (r2 > 0.0) {
    const double r = std::sqrt(r2);
    c = a / r;
    s = b / r;
  }
  // phi = atan2(b, a); dphi = (a db - b da) / r2. Zero when both pivot
  // entries vanish (the angle is then defined as 0).
  Eigen::VectorXd dphi;
  if (jac) {
    dphi.setZero(jac->rows());
    if (r2 > 0.0)
      dphi = (a * jac->col(p * d + j) - b * jac->col(p * d + i)) / r2;
  }
  // New columns: Zi' = c Zi + s Zj, Zj' = -s Zi + c Zj.
  Eigen::VectorXd zi = Z.col(i), zj = Z.col(j);
  Z.col(i) = c * zi + s * zj;
  Z.col(j) = -s * zi + c * zj;
  Z(p, j) = 0.0;  // exact by construction
  if (jac) {
    for (int l = 0; l < L; ++l) {
      Eigen::VectorXd di = jac->col(l * d + i), dj = jac->col(l * d + j);
      // d(c) = -s dphi, d(s) = c dphi; the phi terms collapse to the new
      // column values.
      jac->col(l * d + i) = c * di + s * dj + Z(l, j) * dphi;
      jac->col(l * d + j) = -s * di + c * dj - Z(l, i) * dphi;
    }
    jac->col(p * d + j).setZero();
  }
}

Eigen::MatrixXd transform(const Eigen::MatrixXd& raw, Eigen::MatrixXd* jac) {
  const int L = static_cast<int>(raw.rows());
  const int d = static_cast<int>(raw.cols());
  Eigen::MatrixXd Z = raw.rowwise() - raw.row(0);
  if (jac) {
    // Row k of *jac = derivative of vec(Z) w.r.t. raw parameter k.
    jac->setZero(L * d, L * d);
    for (int l = 0; l < L; ++l)
      for (int r = 0; r < d; ++r) {
        (*jac)(l * d + r, l * d + r) += 1.0;
        (*jac)(0 * d + r, l * d + r) -= 1.0;
      }
  }
  for (int i = 0; i < d - 1; ++i)
    for (int j = i + 1; j < d; ++j)
      if (i + 1 < L) apply_givens(Z, i + 1, i, j, jac);
  // Structural zeros, exactly.
  Z.row(0).setZero();
  for (int l = 1; l < std::min(L, d); ++l)
    for (int r = l; r < d; ++r) Z(l, r) = 0.0;
  return Z;
}

}  // namespace

Eigen::MatrixXd latent_from_raw(const Eigen::MatrixXd& raw) {
  return transform(raw, nullptr);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> latent_from_raw_with_jacobian(
    const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd jac;
  Eigen::MatrixXd Z = transform(raw, &jac);
  return {std::move(Z), std::move(jac)};
}

LatentMap make_latent_map(const Eigen::MatrixXd& raw) {
  return LatentMap{raw, latent_from_raw(raw)};
}

}  // namespace lvgp
