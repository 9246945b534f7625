#pragma once

#include <map>
#include <string>
#include <vector>

#include "subcurv/models.hpp"
#include "subcurv/submersion.hpp"

namespace subcurv {

struct IdentityPointResidual {
  Eigen::VectorXd point;
  double residual = 0.0;
};

// Outcome of checking one curvature relation over a set of sample points.
// `terms` records the largest magnitude seen for each named contribution
// (and per-line maxima for multi-line relations), so the scale behind an
// absolute residual is recoverable.
struct IdentityReport {
  std::string identity_id;
  bool applicable = true;
  std::string reason;  // failed precondition when not applicable
  int points_checked = 0;
  double max_residual = 0.0;
  std::vector<IdentityPointResidual> per_point;
  std::map<std::string, double> terms;
};

// Connection used to differentiate the fundamental tensors and the mean
// curvature vector inside the curvature relations. They are geometric
// objects of the rescaled metric, but the relations mix both geometries;
// `total` differentiates with the total metric's connection, `rescaled`
// with the rescaled metric's own.
enum class TensorDerivativeConnection { total, rescaled };

// The eight projected connection components, as one report per the
// submersion structure equations.
IdentityReport verify_structural(const SubmersionSpec& spec, int points,
                                 unsigned seed = 0);

// Sectional / Ricci / scalar relations for a submersion whose conformal
// factor is constant (within 1e-12 across the sampled points; a constant
// nonzero factor is treated as a homothety of the base). Throws
// PreconditionError on a nonconstant factor.
std::vector<IdentityReport> verify_riemannian_formulas(
    const SubmersionSpec& spec, int points, unsigned seed = 0);

// The conformal counterparts: full curvature tensors restricted to the
// vertical and horizontal blocks, sectional / Ricci / scalar relations with
// conformal-factor terms. Requires the spec to pass conformal_check at
// 1e-9; throws PreconditionError otherwise.
std::vector<IdentityReport> verify_conformal_curvature(
    const SubmersionSpec& spec, int points, unsigned seed = 0,
    TensorDerivativeConnection conn = TensorDerivativeConnection::total);

// Scalar-curvature relations specific to conformally flat total spaces and
// product total spaces, plus the mixed-curvature sum. Preconditions that
// fail are reported as not-applicable with the failed hypothesis named,
// never as errors. `components` supplies the product structure of the
// total space where one is known.
std::vector<IdentityReport> verify_lcf_identities(
    const SubmersionSpec& spec, int points, unsigned seed = 0,
    const std::vector<ComponentInfo>& components = {},
    TensorDerivativeConnection conn = TensorDerivativeConnection::total);

}  // namespace subcurv
