#include "subcurv/frame.hpp"

#include <cmath>
#include <vector>

#include "subcurv/errors.hpp"

namespace subcurv {

Frame gram_schmidt(const Eigen::MatrixXd& vectors, const Eigen::MatrixXd& metric,
                   double tol) {
  const int n = static_cast<int>(vectors.rows());
  const int k = static_cast<int>(vectors.cols());
  if (metric.rows() != n || metric.cols() != n)
    throw DegenerateFrameError("gram_schmidt: metric dimension mismatch");
  Eigen::MatrixXd q(n, k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd v = vectors.col(j);
    // Two projection passes: the second removes the O(eps) residue the
    // first leaves when input columns are nearly parallel.
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < j; ++i)
        v -= q.col(i).dot(metric * v) * q.col(i);
    const double len2 = v.dot(metric * v);
    if (!(len2 > tol))
      throw DegenerateFrameError("gram_schmidt: dependent or null column");
    q.col(j) = v / std::sqrt(len2);
  }
  return Frame{q};
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& m, double tol) {
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  Eigen::MatrixXd r = m;

  std::vector<int> pivot_col;
  int lead = 0;
  for (int row = 0; row < rows && lead < cols; ++row) {
    // Largest magnitude in the current column decides the pivot row.
    int prow = -1;
    double pmax = tol;
    while (lead < cols) {
      prow = -1;
      pmax = tol;
      for (int i = row; i < rows; ++i)
        if (std::abs(r(i, lead)) > pmax) {
          pmax = std::abs(r(i, lead));
          prow = i;
        }
      if (prow >= 0) break;
      ++lead;
    }
    if (lead >= cols || prow < 0) break;
    r.row(row).swap(r.row(prow));
    r.row(row) /= r(row, lead);
    for (int i = 0; i < rows; ++i)
      if (i != row) r.row(i) -= r(i, lead) * r.row(row);
    pivot_col.push_back(lead);
    ++lead;
  }

  std::vector<bool> is_pivot(static_cast<std::size_t>(cols), false);
  for (int c : pivot_col) is_pivot[static_cast<std::size_t>(c)] = true;

  std::vector<int> free_cols;
  for (int c = 0; c < cols; ++c)
    if (!is_pivot[static_cast<std::size_t>(c)]) free_cols.push_back(c);

  Eigen::MatrixXd basis(cols, static_cast<int>(free_cols.size()));
  for (std::size_t f = 0; f < free_cols.size(); ++f) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(cols);
    v(free_cols[f]) = 1.0;
    for (std::size_t p = 0; p < pivot_col.size(); ++p)
      v(pivot_col[p]) = -r(static_cast<int>(p), free_cols[f]);
    // Scale so the first nonzero entry is exactly +1, a canonical
    // representative independent of input row scaling.
    for (int i = 0; i < cols; ++i) {
      if (std::abs(v(i)) > tol) {
        v /= v(i);
        break;
      }
    }
    basis.col(static_cast<int>(f)) = v;
  }
  return basis;
}

}  // namespace subcurv
