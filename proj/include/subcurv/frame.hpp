#pragma once

#include <Eigen/Dense>

namespace subcurv {

// Ordered set of tangent vectors at a point, stored as matrix columns.
struct Frame {
  Eigen::MatrixXd vectors;  // dim x count

  int dim() const { return static_cast<int>(vectors.rows()); }
  int count() const { return static_cast<int>(vectors.cols()); }
  Eigen::VectorXd vector(int k) const { return vectors.col(k); }
};

// Gram-Schmidt against the bilinear form `metric`, with one
// re-orthogonalization pass. Input columns must be independent; a column
// whose orthogonal remainder has squared length below `tol` throws
// DegenerateFrameError. The first output vector is the rescaled first
// input (positive multiple), so orientation of the leading vector is
// preserved deterministically.
Frame gram_schmidt(const Eigen::MatrixXd& vectors, const Eigen::MatrixXd& metric,
                   double tol = 1e-12);

// Null space of a wide matrix via reduced row echelon form. Deterministic:
// free columns are taken in increasing coordinate order and each basis
// vector is scaled so its first nonzero entry is +1.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& m, double tol = 1e-12);

}  // namespace subcurv
