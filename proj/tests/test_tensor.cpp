#include "subcurv/tensor.hpp"

#include <Eigen/Dense>

#include "doctest.h"
#include "subcurv/errors.hpp"

using namespace subcurv;

TEST_CASE("sym bilinear symmetrizes and evaluates") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 4.0, 3.0;
  SymBilinear b(m);
  CHECK(b(0, 1) == doctest::Approx(3.0));
  CHECK(b(1, 0) == doctest::Approx(3.0));
  Eigen::VectorXd x(2), y(2);
  x << 1.0, 0.0;
  y << 0.0, 1.0;
  CHECK(b(x, y) == doctest::Approx(3.0));
}

TEST_CASE("tensor value indexing round-trips") {
  TensorValue t(3, 4);
  CHECK(t.size() == 81);
  t(1, 2, 0, 1) = 5.5;
  CHECK(t(1, 2, 0, 1) == 5.5);
  CHECK(t(1, 2, 0, 2) == 0.0);
  int idx[] = {1, 2, 0, 1};
  CHECK(t.at(idx) == 5.5);
  CHECK(t.max_abs() == 5.5);
  CHECK(t.all_finite());
}

TEST_CASE("product of two diagonal bilinear forms, fixed component") {
  // h = diag(1,2), k = diag(3,1):
  // (h o k)(e0,e1,e0,e1) = h00 k11 + h11 k00 - h01 k10 - h10 k01 = 1 + 6 = 7.
  SymBilinear h(Eigen::Vector2d(1.0, 2.0).asDiagonal().toDenseMatrix());
  SymBilinear k(Eigen::Vector2d(3.0, 1.0).asDiagonal().toDenseMatrix());
  TensorValue p = kulkarni_nomizu(h, k);
  CHECK(p(0, 1, 0, 1) == doctest::Approx(7.0));
  CHECK(p(1, 0, 1, 0) == doctest::Approx(7.0));
  CHECK(p(1, 0, 0, 1) == doctest::Approx(-7.0));
  CHECK(p(0, 0, 0, 0) == doctest::Approx(0.0));
  CHECK(p(0, 0, 1, 1) == doctest::Approx(0.0));
}

TEST_CASE("product has curvature-type symmetries for generic inputs") {
  Eigen::MatrixXd hm(3, 3), km(3, 3);
  hm << 2.0, 0.3, -0.1, 0.3, 1.5, 0.2, -0.1, 0.2, 1.1;
  km << 1.0, -0.2, 0.4, -0.2, 2.2, 0.1, 0.4, 0.1, 0.9;
  TensorValue p = kulkarni_nomizu(SymBilinear(hm), SymBilinear(km));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          CHECK(p(a, b, c, d) == doctest::Approx(-p(b, a, c, d)));
          CHECK(p(a, b, c, d) == doctest::Approx(-p(a, b, d, c)));
          CHECK(p(a, b, c, d) == doctest::Approx(p(c, d, a, b)));
          // First Bianchi sum.
          CHECK(p(a, b, c, d) + p(b, c, a, d) + p(c, a, b, d) ==
                doctest::Approx(0.0));
        }
}

TEST_CASE("metric contraction of the metric product") {
  // For g o g, tracing slots 0 and 2 with g^{-1} gives 2(n-1) g.
  for (int n : {2, 3}) {
    Eigen::MatrixXd gm = Eigen::MatrixXd::Identity(n, n);
    gm(0, 0) = 4.0;  // non-trivial but diagonal, inverse is exact
    SymBilinear g(gm);
    Eigen::MatrixXd gi = gm.inverse();
    TensorValue gg = kulkarni_nomizu(g, g);
    TensorValue traced = contract(gg, 0, 2, SymBilinear(gi));
    CHECK(traced.valence() == 2);
    for (int b = 0; b < n; ++b)
      for (int d = 0; d < n; ++d)
        CHECK(traced(b, d) == doctest::Approx(2.0 * (n - 1) * gm(b, d)));
  }
}

TEST_CASE("contraction slot bookkeeping on an asymmetric valence-3 tensor") {
  // t(i,j,k) = a(i) b(j) c(k); tracing slots 1,2 with identity leaves
  // a(i) * (b . c).
  TensorValue t(2, 3);
  Eigen::Vector2d a(1.0, 2.0), b(3.0, 5.0), c(7.0, 11.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) t(i, j, k) = a(i) * b(j) * c(k);
  SymBilinear id(Eigen::MatrixXd::Identity(2, 2));
  TensorValue r = contract(t, 1, 2, id);
  const double bc = b.dot(c);
  CHECK(r(0) == doctest::Approx(1.0 * bc));
  CHECK(r(1) == doctest::Approx(2.0 * bc));
  // Order of the slot pair is immaterial.
  TensorValue r2 = contract(t, 2, 1, id);
  CHECK(r2(0) == doctest::Approx(r(0)));

  // Tracing slots 0,2 instead leaves b(j) * (a . c).
  TensorValue s = contract(t, 0, 2, id);
  const double ac = a.dot(c);
  CHECK(s(0) == doctest::Approx(3.0 * ac));
  CHECK(s(1) == doctest::Approx(5.0 * ac));
}

TEST_CASE("full evaluation multiplies one vector per slot") {
  SymBilinear h(Eigen::Vector2d(1.0, 2.0).asDiagonal().toDenseMatrix());
  SymBilinear k(Eigen::Vector2d(3.0, 1.0).asDiagonal().toDenseMatrix());
  TensorValue p = kulkarni_nomizu(h, k);
  Eigen::VectorXd e0 = Eigen::Vector2d(1.0, 0.0), e1 = Eigen::Vector2d(0.0, 1.0);
  std::vector<Eigen::VectorXd> args = {e0, e1, e0, e1};
  CHECK(tensor_eval(p, args) == doctest::Approx(7.0));
  // Bilinearity in the first slot.
  std::vector<Eigen::VectorXd> args2 = {2.0 * e0 + e1, e1, e0, e1};
  CHECK(tensor_eval(p, args2) == doctest::Approx(14.0));
}

TEST_CASE("arithmetic and shape guards") {
  TensorValue a(2, 2), b(2, 2);
  a(0, 1) = 1.0;
  b(0, 1) = 2.5;
  TensorValue s = a + b;
  CHECK(s(0, 1) == doctest::Approx(3.5));
  TensorValue d = a - b;
  CHECK(d(0, 1) == doctest::Approx(-1.5));
  TensorValue m = 2.0 * a;
  CHECK(m(0, 1) == doctest::Approx(2.0));

  TensorValue wrong(3, 2);
  CHECK_THROWS_AS(a += wrong, Error);
}
