#include "subcurv/chart.hpp"

namespace subcurv {

void ChartDomain::validate() const {
  if (dim < 1 || dim > 8) throw UnsupportedDimensionError("chart dimension out of range");
  if (lo.size() != dim || hi.size() != dim || sample_lo.size() != dim ||
      sample_hi.size() != dim || static_cast<int>(rule.size()) != dim)
    throw Error("chart domain: inconsistent sizes");
  for (int i = 0; i < dim; ++i) {
    if (!(lo(i) < hi(i))) throw Error("chart domain: empty coordinate range");
    if (sample_lo(i) < lo(i) || sample_hi(i) > hi(i) || !(sample_lo(i) < sample_hi(i)))
      throw Error("chart domain: sampling box not inside integration box");
  }
}

double radical_inverse(long long i, int base) {
  double r = 0.0;
  double f = 1.0 / base;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f /= base;
  }
  return r;
}

Eigen::MatrixXd halton_points(const ChartDomain& dom, int count, unsigned seed) {
  dom.validate();
  static constexpr int kPrimes[8] = {2, 3, 5, 7, 11, 13, 17, 19};
  Eigen::MatrixXd pts(dom.dim, count);
  for (int k = 0; k < count; ++k) {
    const long long idx = static_cast<long long>(seed) + k + 1;
    for (int c = 0; c < dom.dim; ++c) {
      const double u = radical_inverse(idx, kPrimes[c]);
      pts(c, k) = dom.sample_lo(c) + u * (dom.sample_hi(c) - dom.sample_lo(c));
    }
  }
  return pts;
}

}  // namespace subcurv
