#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <utility>

// Forward-mode dual numbers with a dynamic vector of partials. Nesting one
// level (Dual<Dual<double>>) carries exact first and second derivatives
// through arbitrary compositions; that is the deepest level the library needs.
//
// An empty partials vector means "constant": it behaves as a zero vector of
// whatever dimension the surrounding computation uses, which lets plain
// numeric literals mix freely with seeded variables.

namespace subcurv {
template <class T>
struct Dual;
}

// The traits specialization must precede any instantiation of an Eigen
// matrix over Dual, including the inline seeding helpers below.
namespace Eigen {

template <class T>
struct NumTraits<subcurv::Dual<T>> {
  using Self = subcurv::Dual<T>;
  using Real = Self;
  using NonInteger = Self;
  using Literal = Self;
  using Nested = Self;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 4,
    MulCost = 8
  };
  static inline Self epsilon() { return Self(NumTraits<double>::epsilon()); }
  static inline Self dummy_precision() { return Self(NumTraits<double>::dummy_precision()); }
  static inline Self highest() { return Self(NumTraits<double>::highest()); }
  static inline Self lowest() { return Self(NumTraits<double>::lowest()); }
  static inline int digits10() { return NumTraits<double>::digits10(); }
};

}  // namespace Eigen

namespace subcurv {

template <class T>
struct Dual {
  // Capacity 8 matches the chart-dimension cap and keeps every partial
  // vector on the stack; derivative arithmetic never touches the heap.
  using Partials = Eigen::Matrix<T, Eigen::Dynamic, 1, 0, 8, 1>;

  T val{};
  Partials der{};

  Dual() = default;
  Dual(T v) : val(std::move(v)) {}  // NOLINT: implicit lift of a constant
  template <class U = T>
    requires(!std::is_same_v<U, double>)
  Dual(double v) : val(v) {}  // NOLINT: lift a literal through nested levels
  Dual(T v, Partials d) : val(std::move(v)), der(std::move(d)) {}

  int nder() const { return static_cast<int>(der.size()); }
};

using D1 = Dual<double>;
using D2 = Dual<D1>;

template <class S>
using VecS = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MatS = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) {
  return value_of(x.val);
}

namespace dual_detail {

// ca*a + cb*b on partial vectors, treating an empty vector as zero.
template <class T>
typename Dual<T>::Partials lin2(const typename Dual<T>::Partials& a, const T& ca,
                                const typename Dual<T>::Partials& b, const T& cb) {
  using P = typename Dual<T>::Partials;
  if (a.size() == 0 && b.size() == 0) return P{};
  if (b.size() == 0) {
    P r(a.size());
    for (int i = 0; i < a.size(); ++i) r[i] = a[i] * ca;
    return r;
  }
  if (a.size() == 0) {
    P r(b.size());
    for (int i = 0; i < b.size(); ++i) r[i] = b[i] * cb;
    return r;
  }
  P r(a.size());
  for (int i = 0; i < a.size(); ++i) r[i] = a[i] * ca + b[i] * cb;
  return r;
}

template <class T>
typename Dual<T>::Partials scale(const typename Dual<T>::Partials& a, const T& c) {
  typename Dual<T>::Partials r(a.size());
  for (int i = 0; i < a.size(); ++i) r[i] = a[i] * c;
  return r;
}

}  // namespace dual_detail

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.val + b.val, dual_detail::lin2<T>(a.der, T(1), b.der, T(1))};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.val - b.val, dual_detail::lin2<T>(a.der, T(1), b.der, T(-1))};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.val * b.val, dual_detail::lin2<T>(a.der, b.val, b.der, a.val)};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T inv = T(1) / b.val;
  T q = a.val * inv;
  return {q, dual_detail::lin2<T>(a.der, inv, b.der, T(0) - q * inv)};
}
template <class T>
Dual<T> operator-(const Dual<T>& a) {
  return {T(0) - a.val, dual_detail::scale<T>(a.der, T(-1))};
}
template <class T>
Dual<T> operator+(const Dual<T>& a) {
  return a;
}

#define SUBCURV_MIXED_OP(OP)                                             \
  template <class T>                                                     \
  Dual<T> operator OP(const Dual<T>& a, const T& b) {                    \
    return a OP Dual<T>(b);                                              \
  }                                                                      \
  template <class T>                                                     \
  Dual<T> operator OP(const T& a, const Dual<T>& b) {                    \
    return Dual<T>(a) OP b;                                              \
  }                                                                      \
  template <class T>                                                     \
    requires(!std::is_same_v<T, double>)                                 \
  Dual<T> operator OP(const Dual<T>& a, double b) {                      \
    return a OP Dual<T>(b);                                              \
  }                                                                      \
  template <class T>                                                     \
    requires(!std::is_same_v<T, double>)                                 \
  Dual<T> operator OP(double a, const Dual<T>& b) {                      \
    return Dual<T>(a) OP b;                                              \
  }

SUBCURV_MIXED_OP(+)
SUBCURV_MIXED_OP(-)
SUBCURV_MIXED_OP(*)
SUBCURV_MIXED_OP(/)
#undef SUBCURV_MIXED_OP

// Comparisons act on value parts, the usual forward-mode convention; Eigen's
// product kernels require at least equality to compile.
#define SUBCURV_CMP_OP(OP)                                               \
  template <class T>                                                     \
  bool operator OP(const Dual<T>& a, const Dual<T>& b) {                 \
    return value_of(a) OP value_of(b);                                   \
  }                                                                      \
  template <class T>                                                     \
  bool operator OP(const Dual<T>& a, double b) {                         \
    return value_of(a) OP b;                                             \
  }                                                                      \
  template <class T>                                                     \
  bool operator OP(double a, const Dual<T>& b) {                         \
    return a OP value_of(b);                                             \
  }

SUBCURV_CMP_OP(==)
SUBCURV_CMP_OP(!=)
SUBCURV_CMP_OP(<)
SUBCURV_CMP_OP(<=)
SUBCURV_CMP_OP(>)
SUBCURV_CMP_OP(>=)
#undef SUBCURV_CMP_OP

template <class T>
Dual<T>& operator+=(Dual<T>& a, const Dual<T>& b) {
  a = a + b;
  return a;
}
template <class T>
Dual<T>& operator-=(Dual<T>& a, const Dual<T>& b) {
  a = a - b;
  return a;
}
template <class T>
Dual<T>& operator*=(Dual<T>& a, const Dual<T>& b) {
  a = a * b;
  return a;
}
template <class T>
Dual<T>& operator/=(Dual<T>& a, const Dual<T>& b) {
  a = a / b;
  return a;
}

// Elementary functions, chain rule applied recursively through nesting.

template <class T>
Dual<T> sin(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return {sin(x.val), dual_detail::scale<T>(x.der, cos(x.val))};
}
template <class T>
Dual<T> cos(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return {cos(x.val), dual_detail::scale<T>(x.der, T(0) - sin(x.val))};
}
template <class T>
Dual<T> tan(const Dual<T>& x) {
  using std::cos;
  using std::tan;
  T c = cos(x.val);
  return {tan(x.val), dual_detail::scale<T>(x.der, T(1) / (c * c))};
}
template <class T>
Dual<T> exp(const Dual<T>& x) {
  using std::exp;
  T e = exp(x.val);
  return {e, dual_detail::scale<T>(x.der, e)};
}
template <class T>
Dual<T> log(const Dual<T>& x) {
  using std::log;
  return {log(x.val), dual_detail::scale<T>(x.der, T(1) / x.val)};
}
template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  using std::sqrt;
  T s = sqrt(x.val);
  return {s, dual_detail::scale<T>(x.der, T(1) / (T(2) * s))};
}
template <class T>
Dual<T> pow(const Dual<T>& x, double p) {
  using std::pow;
  T v = pow(x.val, p);
  return {v, dual_detail::scale<T>(x.der, T(p) * pow(x.val, p - 1.0))};
}
template <class T>
Dual<T> pow(const Dual<T>& x, int p) {
  return pow(x, static_cast<double>(p));
}

// --- seeding and extraction -------------------------------------------------

// Lift a point one derivative level: coordinate i becomes a variable with unit
// partial e_i. Applying this to a plain vector gives first-derivative seeds;
// applying it to those seeds gives the second-derivative (nested) seeds.
template <class S>
VecS<Dual<S>> seed(const VecS<S>& q) {
  const int n = static_cast<int>(q.size());
  if (n > 8) throw std::length_error("seed: more than 8 coordinates");
  VecS<Dual<S>> r(n);
  for (int i = 0; i < n; ++i) {
    typename Dual<S>::Partials d(n);
    for (int j = 0; j < n; ++j) d[j] = S(i == j ? 1.0 : 0.0);
    r[i] = Dual<S>(q[i], std::move(d));
  }
  return r;
}

inline VecS<D1> seed1(const Eigen::VectorXd& p) { return seed<double>(p); }
inline VecS<D2> seed2(const Eigen::VectorXd& p) { return seed<D1>(seed1(p)); }

template <class S>
S value_part(const Dual<S>& x) {
  return x.val;
}
template <class S>
S partial(const Dual<S>& x, int k) {
  return k < x.nder() ? x.der[k] : S(0);
}

// Gradient and Hessian of a doubly seeded evaluation; n is the coordinate
// dimension (needed because constants carry no partials).
inline Eigen::VectorXd gradient_of(const D2& x, int n) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < x.val.nder(); ++i) g[i] = x.val.der[i];
  return g;
}
inline Eigen::MatrixXd hessian_of(const D2& x, int n) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < x.nder(); ++i)
    for (int j = 0; j < x.der[i].nder(); ++j) h(i, j) = x.der[i].der[j];
  return h;
}
inline Eigen::VectorXd gradient_of(const D1& x, int n) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < x.nder(); ++i) g[i] = x.der[i];
  return g;
}

template <class S>
S lift(double v) {
  return S(v);
}

template <class S>
VecS<S> lift_vector(const Eigen::VectorXd& v) {
  VecS<S> r(v.size());
  for (int i = 0; i < v.size(); ++i) r[i] = S(v[i]);
  return r;
}

template <class S>
MatS<S> lift_matrix(const Eigen::MatrixXd& m) {
  MatS<S> r(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = S(m(i, j));
  return r;
}

template <>
inline double lift<double>(double v) {
  return v;
}
template <>
inline VecS<double> lift_vector<double>(const Eigen::VectorXd& v) {
  return v;
}
template <>
inline MatS<double> lift_matrix<double>(const Eigen::MatrixXd& m) {
  return m;
}

}  // namespace subcurv
