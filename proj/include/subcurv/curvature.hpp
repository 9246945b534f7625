#pragma once

#include <Eigen/Dense>
#include <vector>

#include "subcurv/chart.hpp"
#include "subcurv/linalg.hpp"
#include "subcurv/tensor.hpp"

namespace subcurv {

// Pointwise 2-jet of the metric in chart coordinates.
struct MetricJets {
  int dim = 0;
  Eigen::MatrixXd G, Ginv;
  Tens3 dG;                  // dG[c](i,j) = d_c G_ij
  std::vector<Tens3> d2G;    // d2G[c][d](i,j) = d_c d_d G_ij
  double sqrt_det = 0.0;
};

// Jets through nested forward-mode differentiation of the metric field.
MetricJets metric_jets(const MetricField& g, const Eigen::VectorXd& q);

// Jets through central differences, step h. Exists to cross-check the
// forward-mode path; everything downstream consumes jets identically.
MetricJets metric_jets_fd(const MetricField& g, const Eigen::VectorXd& q,
                          double h = 1e-5);

// gamma[k](i,j) = Gamma^k_ij from the inverse metric and first derivatives.
Tens3 christoffel(const Eigen::MatrixXd& ginv, const Tens3& dG);

// gamma[k](i,j) = Gamma^k_ij.
Tens3 christoffel_from_jets(const MetricJets& j);

// dgamma[c][k](i,j) = d_c Gamma^k_ij.
std::vector<Tens3> christoffel_derivative_from_jets(const MetricJets& j);

// Covariant curvature tensor, index order R(e_a, e_b, e_c, e_d) with the
// convention that the unit round 2-sphere has R(e_theta, e_phi, e_theta,
// e_phi) = +sin(theta)^2, i.e. positive sectional curvature.
TensorValue riemann_from_jets(const MetricJets& j);

// Everything pointwise the identity checks consume, computed once.
struct CurvatureBundle {
  Eigen::VectorXd point;
  MetricJets jets;
  Tens3 gamma;
  std::vector<Tens3> dgamma;
  TensorValue riemann;   // valence 4, covariant
  SymBilinear ricci;     // Ric(e_b, e_d), the (a,c) metric trace of riemann
  double scalar = 0.0;
};

CurvatureBundle curvature_bundle(const MetricField& g, const Eigen::VectorXd& q);

// Trace-free part of the curvature in the standard two-term split; requires
// dim >= 4, throws UnsupportedDimensionError below that.
TensorValue weyl_tensor(const CurvatureBundle& b);

// Residual of reassembling riemann from weyl + the two Kulkarni-Nomizu
// blocks built from the Ricci trace parts. Zero by construction up to
// floating point; exposed so the consistency check is one call.
double curvature_split_residual(const CurvatureBundle& b);

// K(X, Y) = R(X,Y,X,Y) / (|X|^2 |Y|^2 - g(X,Y)^2). Throws
// DegeneratePlaneError when the span is numerically degenerate.
double sectional_curvature(const CurvatureBundle& b, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y, double tol = 1e-10);

// Metric gradient, g^{ij} d_j h.
Eigen::VectorXd metric_gradient(const MetricJets& j, const ScalarField& h,
                                const Eigen::VectorXd& q);

// Hess(h)_ij = d_i d_j h - Gamma^k_ij d_k h.
SymBilinear hessian(const CurvatureBundle& b, const ScalarField& h);

// Metric trace of the covariant Hessian.
double laplacian(const CurvatureBundle& b, const ScalarField& h);

// div(X) = d_i X^i + Gamma^i_ik X^k, the metric divergence.
double divergence(const CurvatureBundle& b, const VectorField& x);

}  // namespace subcurv
