#pragma once

#include <Eigen/Dense>

namespace lvgp {

/// Per-qualitative-variable latent mapping. `raw` holds the L x d free
/// parameters; `z` is the constrained L x d matrix: row 1 at the origin and
/// z(l, r) = 0 for l <= d, r >= l, obtained by translating to the first
/// level and sweeping Givens rotations that zero the upper-triangular
/// pattern. Pairwise row distances of `z` equal those of `raw`.
struct LatentMap {
  Eigen::MatrixXd raw;  // L x d
  Eigen::MatrixXd z;    // L x d
  int d() const { return static_cast<int>(raw.cols()); }
  int L() const { return static_cast<int>(raw.rows()); }
};

/// Transform raw latent parameters into the constrained frame. For d = 2
/// this is translate-to-first-level followed by one rotation putting the
/// second level on the horizontal axis; for general d it is the sequential
/// Givens sweep. A zero rotation angle is used when both pivot entries
/// vanish (coincident raw rows).
Eigen::MatrixXd latent_from_raw(const Eigen::MatrixXd& raw);

/// Same transform, also returning the (L*d) x (L*d) Jacobian J with
/// J(k, m) = dZ_m / d raw_k, both indices in row-major order (row l,
/// column r maps to index l*d + r). The Jacobian is exact: the rotation
/// angles' dependence on the raw entries is differentiated in closed form,
/// so a gradient over Z entries pulls back to raw parameters as J * g.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> latent_from_raw_with_jacobian(
    const Eigen::MatrixXd& raw);

LatentMap make_latent_map(const Eigen::MatrixXd& raw);

}  // namespace lvgp
