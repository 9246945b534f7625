#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

#include "subcurv/dual.hpp"
#include "subcurv/errors.hpp"

// Small dense linear algebra generic over the scalar level. Everything is
// written as explicit loops so the same code runs on double and on nested
// duals; chart dimensions never exceed 8, so there is nothing to gain from
// blocked kernels here.

namespace subcurv {

template <class S>
using Tens3S = std::vector<MatS<S>>;  // [k](i,j)

using Tens3 = Tens3S<double>;

template <class S>
MatS<S> matmul(const MatS<S>& a, const MatS<S>& b) {
  MatS<S> r(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      S acc(0.0);
      for (int k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      r(i, j) = acc;
    }
  return r;
}

template <class S>
VecS<S> matvec(const MatS<S>& a, const VecS<S>& v) {
  VecS<S> r(a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    S acc(0.0);
    for (int k = 0; k < a.cols(); ++k) acc += a(i, k) * v[k];
    r[i] = acc;
  }
  return r;
}

template <class S>
MatS<S> transpose_of(const MatS<S>& a) {
  MatS<S> r(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(j, i) = a(i, j);
  return r;
}

template <class S>
S dot(const VecS<S>& u, const VecS<S>& v) {
  S acc(0.0);
  for (int i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

// u^T G v
template <class S>
S inner(const VecS<S>& u, const MatS<S>& g, const VecS<S>& v) {
  S acc(0.0);
  for (int i = 0; i < u.size(); ++i)
    for (int j = 0; j < v.size(); ++j) acc += u[i] * g(i, j) * v[j];
  return acc;
}

template <class S>
MatS<S> identity_like(int n) {
  MatS<S> r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = S(i == j ? 1.0 : 0.0);
  return r;
}

// Gaussian elimination with partial pivoting; pivots compared by the value
// part so the elimination order is identical at every derivative level.
template <class S>
MatS<S> solve_linear(MatS<S> a, MatS<S> b) {
  const int n = static_cast<int>(a.rows());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(value_of(a(col, col)));
    for (int r = col + 1; r < n; ++r) {
      double m = std::abs(value_of(a(r, col)));
      if (m > best) {
        best = m;
        piv = r;
      }
    }
    if (best < 1e-14) throw SingularMetricError("matrix numerically singular in solve");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
      for (int j = 0; j < b.cols(); ++j) std::swap(b(col, j), b(piv, j));
    }
    S inv = S(1.0) / a(col, col);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      S f = a(r, col) * inv;
      for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      for (int j = 0; j < b.cols(); ++j) b(r, j) -= f * b(col, j);
    }
  }
  for (int i = 0; i < n; ++i) {
    S inv = S(1.0) / a(i, i);
    for (int j = 0; j < b.cols(); ++j) b(i, j) = b(i, j) * inv;
  }
  return b;
}

template <class S>
MatS<S> inverse_of(const MatS<S>& a) {
  return solve_linear<S>(a, identity_like<S>(static_cast<int>(a.rows())));
}

}  // namespace subcurv
