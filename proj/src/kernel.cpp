#include "lvgp/kernel.hpp"

#include <cmath>

#include "lvgp/errors.hpp"

namespace lvgp {

EmbeddedPoints embed(const Eigen::MatrixXd& x, const Eigen::MatrixXi& levels,
                     const HyperParams& theta) {
  EmbeddedPoints pts;
  pts.x = x;
  const int J = theta.num_qual();
  const int N = static_cast<int>(levels.rows() > 0 ? levels.rows() : x.rows());
  pts.lat.resize(J);
  for (int j = 0; j < J; ++j) {
    const auto& Z = theta.latent_maps[j].z;
    pts.lat[j].resize(N, Z.cols());
    for (int n = 0; n < N; ++n) {
      const int l = levels(n, j);
      if (l < 1 || l > Z.rows())
        throw InternalError("level index out of range for qualitative variable " +
                            std::to_string(j));
      pts.lat[j].row(n) = Z.row(l - 1);
    }
  }
  return pts;
}

double lvgp_cov(const Eigen::VectorXd& x1, const Eigen::VectorXi& lev1,
                const Eigen::VectorXd& x2, const Eigen::VectorXi& lev2,
                const HyperParams& theta) {
  double q = 0.0;
  for (int i = 0; i < theta.num_quant(); ++i) {
    const double dx = (x1[i] - x2[i]) / theta.omega[i];
    q += dx * dx;
  }
  for (int j = 0; j < theta.num_qual(); ++j) {
    const auto& Z = theta.latent_maps[j].z;
    q += (Z.row(lev1[j] - 1) - Z.row(lev2[j] - 1)).squaredNorm();
  }
  return theta.sigma2 * std::exp(-0.5 * q);
}

Eigen::MatrixXd cov(const EmbeddedPoints& a, const EmbeddedPoints& b,
                    const HyperParams& theta) {
  const int Na = a.n(), Nb = b.n();
  const int I = theta.num_quant();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(Na, Nb);
  for (int i = 0; i < I; ++i) {
    const double inv_w = 1.0 / theta.omega[i];
    for (int n = 0; n < Na; ++n)
      for (int m = 0; m < Nb; ++m) {
        const double dx = (a.x(n, i) - b.x(m, i)) * inv_w;
        Q(n, m) += dx * dx;
      }
  }
  for (size_t j = 0; j < a.lat.size(); ++j)
    for (int n = 0; n < Na; ++n)
      for (int m = 0; m < Nb; ++m)
        Q(n, m) += (a.lat[j].row(n) - b.lat[j].row(m)).squaredNorm();
  return theta.sigma2 * (-0.5 * Q.array()).exp();
}

Eigen::MatrixXd cov(const EmbeddedPoints& a, const HyperParams& theta) {
  return cov(a, a, theta);
}

CovGrad cov_grad(const Eigen::MatrixXd& S, const EmbeddedPoints& a,
                 const EmbeddedPoints& b, const HyperParams& theta,
                 const Eigen::MatrixXd& K, bool want_x_grads) {
  const int Na = a.n(), Nb = b.n();
  const int I = theta.num_quant();
  const int J = static_cast<int>(a.lat.size());

  CovGrad g;
  g.log_omega = Eigen::VectorXd::Zero(I);
  if (want_x_grads) {
    g.x_a = Eigen::MatrixXd::Zero(a.x.rows(), a.x.cols());
    g.x_b = Eigen::MatrixXd::Zero(b.x.rows(), b.x.cols());
  }
  g.lat_a.resize(J);
  g.lat_b.resize(J);
  for (int j = 0; j < J; ++j) {
    g.lat_a[j] = Eigen::MatrixXd::Zero(a.lat[j].rows(), a.lat[j].cols());
    g.lat_b[j] = Eigen::MatrixXd::Zero(b.lat[j].rows(), b.lat[j].cols());
  }

  // dK/dlog(sigma2) = K
  g.log_sigma2 = (S.array() * K.array()).sum();

  for (int n = 0; n < Na; ++n) {
    for (int m = 0; m < Nb; ++m) {
      const double w = S(n, m) * K(n, m);
      if (w == 0.0) continue;
      for (int i = 0; i < I; ++i) {
        const double inv_w2 = 1.0 / (theta.omega[i] * theta.omega[i]);
        const double dx = a.x(n, i) - b.x(m, i);
        // dK/dlog(omega_i) = K * dx^2 / omega_i^2
        g.log_omega[i] += w * dx * dx * inv_w2;
        if (want_x_grads) {
          const double t = -w * dx * inv_w2;  // dK/dx_a = -K dx / omega^2
          g.x_a(n, i) += t;
          g.x_b(m, i) -= t;
        }
      }
      for (int j = 0; j < J; ++j) {
        // dK/dz_a = -K (z_a - z_b)
        Eigen::RowVectorXd diff = a.lat[j].row(n) - b.lat[j].row(m);
        g.lat_a[j].row(n) -= w * diff;
        g.lat_b[j].row(m) += w * diff;
      }
    }
  }
  return g;
}

Eigen::MatrixXd scatter_to_levels(const Eigen::MatrixXd& lat_grad,
                                  const Eigen::MatrixXi& levels, int j, int L) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(L, lat_grad.cols());
  for (int n = 0; n < lat_grad.rows(); ++n)
    out.row(levels(n, j) - 1) += lat_grad.row(n);
  return out;
}

std::vector<double> jitter_ladder(double sigma2) {
  std::vector<double> out;
  for (double c = 1e-8; c <= 1e-4 * 1.0000001; c *= 10.0) out.push_back(c * sigma2);
  return out;
}

}  // namespace lvgp
