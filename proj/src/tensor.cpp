#include "subcurv/tensor.hpp"

#include <cmath>

namespace subcurv {

SymBilinear::SymBilinear(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw Error("SymBilinear: matrix not square");
  m_ = 0.5 * (m + m.transpose());
}

TensorValue::TensorValue(int dim, int valence) : dim_(dim), valence_(valence) {
  if (dim < 1 || dim > 8) throw UnsupportedDimensionError("TensorValue: dim out of range");
  if (valence < 0 || valence > 6) throw Error("TensorValue: valence out of range");
  std::size_t n = 1;
  for (int s = 0; s < valence; ++s) n *= static_cast<std::size_t>(dim);
  data_.assign(n, 0.0);
}

std::size_t TensorValue::offset(std::span<const int> idx) const {
  if (static_cast<int>(idx.size()) != valence_)
    throw Error("TensorValue: index arity mismatch");
  std::size_t off = 0;
  for (int s = 0; s < valence_; ++s) {
    const int i = idx[s];
    if (i < 0 || i >= dim_) throw Error("TensorValue: index out of range");
    off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
  }
  return off;
}

TensorValue& TensorValue::operator+=(const TensorValue& o) {
  if (dim_ != o.dim_ || valence_ != o.valence_)
    throw Error("TensorValue: shape mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

TensorValue& TensorValue::operator-=(const TensorValue& o) {
  if (dim_ != o.dim_ || valence_ != o.valence_)
    throw Error("TensorValue: shape mismatch in -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

TensorValue& TensorValue::operator*=(double c) {
  for (double& v : data_) v *= c;
  return *this;
}

double TensorValue::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool TensorValue::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

TensorValue kulkarni_nomizu(const SymBilinear& h, const SymBilinear& k) {
  const int n = h.dim();
  if (k.dim() != n) throw Error("kulkarni_nomizu: dimension mismatch");
  TensorValue out(n, 4);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          out(a, b, c, d) = h(a, c) * k(b, d) + h(b, d) * k(a, c) -
                            h(a, d) * k(b, c) - h(b, c) * k(a, d);
  return out;
}

TensorValue contract(const TensorValue& t, int slot_a, int slot_b,
                     const SymBilinear& metric_inverse) {
  const int v = t.valence();
  const int n = t.dim();
  if (slot_a == slot_b || slot_a < 0 || slot_b < 0 || slot_a >= v || slot_b >= v)
    throw Error("contract: bad slot pair");
  if (metric_inverse.dim() != n) throw Error("contract: metric dimension mismatch");
  const int lo = std::min(slot_a, slot_b);
  const int hi = std::max(slot_a, slot_b);

  TensorValue out(n, v - 2);
  std::vector<int> oidx(static_cast<std::size_t>(v - 2), 0);
  std::vector<int> tidx(static_cast<std::size_t>(v), 0);
  const std::size_t total = out.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int s = v - 3; s >= 0; --s) {
      oidx[static_cast<std::size_t>(s)] = static_cast<int>(rem % static_cast<std::size_t>(n));
      rem /= static_cast<std::size_t>(n);
    }
    // Scatter the surviving indices around the contracted pair.
    int src = 0;
    for (int s = 0; s < v; ++s) {
      if (s == lo || s == hi) continue;
      tidx[static_cast<std::size_t>(s)] = oidx[static_cast<std::size_t>(src++)];
    }
    double sum = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        tidx[static_cast<std::size_t>(lo)] = a;
        tidx[static_cast<std::size_t>(hi)] = b;
        sum += metric_inverse(a, b) * t.at(tidx);
      }
    out.at(oidx) = sum;
  }
  return out;
}

double tensor_eval(const TensorValue& t, std::span<const Eigen::VectorXd> args) {
  const int v = t.valence();
  const int n = t.dim();
  if (static_cast<int>(args.size()) != v) throw Error("tensor_eval: arity mismatch");
  for (const auto& a : args)
    if (a.size() != n) throw Error("tensor_eval: vector dimension mismatch");
  std::vector<int> idx(static_cast<std::size_t>(v), 0);
  double sum = 0.0;
  const std::size_t total = t.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int s = v - 1; s >= 0; --s) {
      idx[static_cast<std::size_t>(s)] = static_cast<int>(rem % static_cast<std::size_t>(n));
      rem /= static_cast<std::size_t>(n);
    }
    double w = t.at(idx);
    if (w == 0.0) continue;
    for (int s = 0; s < v; ++s) w *= args[static_cast<std::size_t>(s)](idx[static_cast<std::size_t>(s)]);
    sum += w;
  }
  return sum;
}

}  // namespace subcurv
