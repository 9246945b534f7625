#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <vector>

#include "subcurv/chart.hpp"
#include "subcurv/frame.hpp"
#include "subcurv/linalg.hpp"

namespace subcurv {

// Chart description of the fibre through one total-space point: a fixed
// subset of the total coordinates with the rest frozen, carrying the induced
// metric.
struct FibreChart {
  ChartDomain domain;
  MetricField metric;
  Eigen::VectorXd point;  // fibre coordinates of the basepoint
};

// A submersion between chart-described manifolds. `jacobian` returns the
// differential of `projection` as a row-major flattened matrix (base rows,
// total columns); carrying it as its own field keeps every evaluation within
// two derivative levels. An empty `conformal_factor` means identically zero,
// in which case the horizontal metric must match the base metric on the
// nose; otherwise it must match after scaling by e^{-2f}. All derived
// tensors below refer to the rescaled metric e^{-2f} g, whose vertical and
// horizontal distributions coincide with those of g.
struct SubmersionSpec {
  ChartDomain total_domain;
  MetricField total_metric;
  ChartDomain base_domain;
  MetricField base_metric;
  MapField projection;
  MapField jacobian;
  ScalarField conformal_factor;

  // Total-coordinate indices spanning the fibres, when the fibres are
  // coordinate boxes; empty otherwise. `fibre_chart` must be set exactly
  // when `fibre_coords` is nonempty.
  std::vector<int> fibre_coords;
  std::function<FibreChart(const Eigen::VectorXd&)> fibre_chart;

  int total_dim() const { return total_domain.dim; }
  int base_dim() const { return base_domain.dim; }
  int fibre_dim() const { return total_domain.dim - base_domain.dim; }

  // Dimension and field sanity, jacobian-vs-projection agreement at sample
  // points (PreconditionError), and full rank of the differential
  // (NotASubmersionError).
  void validate() const;
};

// g-orthonormal bases of the vertical distribution (kernel of the
// differential) and its orthogonal complement at one point. Construction is
// deterministic: kernel vectors come from the echelon-form null space, the
// horizontal block from the metric-dual rows of the differential, both run
// through Gram-Schmidt in that order.
struct SplitFrame {
  Eigen::VectorXd point;
  Frame vertical;
  Frame horizontal;
};

SplitFrame split_frame(const SubmersionSpec& spec, const Eigen::VectorXd& p);

// Max over the sample points (columns) of the scaled horizontal metric
// defect |e^{-2f} g(h_a, h_b) - g_B(dpi h_a, dpi h_b)|, measured on the
// metric-dual rows of the differential and divided by the local scale of the
// pulled-back base metric. Zero exactly for a compatible factor.
double conformal_check(const SubmersionSpec& spec, const Eigen::MatrixXd& points);

// Pointwise data of the submersion: 2-jets of both metrics and the factor,
// projectors with first derivatives, the two fundamental tensors of the
// rescaled metric with first derivatives, their vertical trace, and the
// horizontal lifts of base coordinate vectors. Tensor layout: t[k](a, b) is
// the k-th component of T(e_a, e_b), the derivative layers dt[c] hold the
// coordinate derivative along c.
struct SubPoint {
  Eigen::VectorXd point;
  int n = 0, nb = 0, nf = 0;

  Eigen::MatrixXd G, Ginv;
  Tens3 dG;
  Tens3 gamma;  // Levi-Civita connection of g

  double f = 0.0;
  Eigen::VectorXd df;
  Eigen::MatrixXd d2f;

  Eigen::MatrixXd Gaux, Gauxinv;  // e^{-2f} g and its inverse
  Tens3 gamma_aux;

  Eigen::MatrixXd J;               // nb x n
  std::vector<Eigen::MatrixXd> dJ;  // [c] nb x n
  Eigen::MatrixXd PH, PV;          // endomorphism projectors, n x n
  Tens3 dPH, dPV;

  Tens3 t, a;                  // fundamental tensors of the rescaled metric
  std::vector<Tens3> dt, da;   // [c][k](a, b)
  Eigen::VectorXd nvec;        // vertical trace of t
  Eigen::MatrixXd dnvec;       // (c, k) = d_c of component k

  Eigen::MatrixXd basic_lift;                // n x nb, columns lift base axes
  std::vector<Eigen::MatrixXd> dbasic_lift;  // [c] n x nb
};

SubPoint sub_point(const SubmersionSpec& spec, const Eigen::VectorXd& p);

// Frame components of the fundamental tensors at one point, plus their
// frame-independent squared norms (single-block convention: t over pairs of
// vertical frame vectors, a over pairs of horizontal ones).
struct FundamentalTensors {
  SplitFrame frame;
  std::vector<std::vector<Eigen::VectorXd>> t_vv;  // [j][k] horizontal vector
  std::vector<std::vector<Eigen::VectorXd>> t_vh;  // [j][i] vertical vector
  std::vector<std::vector<Eigen::VectorXd>> a_hh;  // [i][j] vertical vector
  std::vector<std::vector<Eigen::VectorXd>> a_hv;  // [i][k] horizontal vector
  Eigen::VectorXd nvec;
  double normT2 = 0.0, normA2 = 0.0, normN2 = 0.0;
};

FundamentalTensors fundamental_tensors(const SubmersionSpec& spec,
                                       const Eigen::VectorXd& p);

// Covariant derivative of a (1,2)-tensor from its raw coordinate derivative:
// out[c][k](a,b) = dt[c][k](a,b) + gamma-corrections for one upper and two
// lower slots.
std::vector<Tens3> covariant_12(const Tens3& t, const std::vector<Tens3>& dt,
                                const Tens3& gamma);

// Covariant derivative of a vector field, rows indexed by the direction:
// out(c, k) = dv(c, k) + gamma^k_{cm} v^m.
Eigen::MatrixXd covariant_vec(const Eigen::VectorXd& v, const Eigen::MatrixXd& dv,
                              const Tens3& gamma);

// Trace of the covariant derivative.
double divergence_vec(const Eigen::VectorXd& v, const Eigen::MatrixXd& dv,
                      const Tens3& gamma);

// Residuals of the eight projected components of the metric connection
// against their expression through the fundamental tensors, the rescaled
// connection, and the factor, evaluated on seeded unit vectors: lines 0-1
// are the horizontal/vertical parts of nabla_U V, lines 2-3 of nabla_X U,
// lines 4-5 of nabla_U X, lines 6-7 of nabla_X Y. Both sides use the same
// projector-extended fields, so each line vanishes identically.
struct StructuralResiduals {
  std::array<double, 8> line{};
  double max_line = 0.0;
};

StructuralResiduals structural_residuals(const SubmersionSpec& spec,
                                         const Eigen::VectorXd& p, unsigned seed);

// Least-squares fit of one horizontal axis X with second fundamental form
// g(U,V) X over the sample points; residual is the g-norm of the unfitted
// remainder, maximized over points, with `axis` the fit at the worst point.
// Zero residual means totally umbilical fibres (totally geodesic when the
// axis also vanishes).
struct UmbilicalReport {
  double max_residual = 0.0;
  Eigen::VectorXd axis;
};

UmbilicalReport umbilical_check(const SubmersionSpec& spec,
                                const Eigen::MatrixXd& points);

}  // namespace subcurv
