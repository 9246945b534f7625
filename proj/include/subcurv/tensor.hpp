#pragma once

#include <Eigen/Dense>
#include <initializer_list>
#include <span>
#include <vector>

#include "subcurv/errors.hpp"

namespace subcurv {

// Symmetric (0,2)-tensor value at a point. The matrix is symmetrized on
// construction, so the symmetry invariant holds exactly, not to tolerance.
class SymBilinear {
 public:
  SymBilinear() = default;
  explicit SymBilinear(const Eigen::MatrixXd& m);

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    return x.dot(m_ * y);
  }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

// Dense tensor of arbitrary valence over a chart of dimension <= 8,
// components stored row-major over the multi-index.
class TensorValue {
 public:
  TensorValue() = default;
  TensorValue(int dim, int valence);

  int dim() const { return dim_; }
  int valence() const { return valence_; }
  std::size_t size() const { return data_.size(); }

  double at(std::span<const int> idx) const { return data_[offset(idx)]; }
  double& at(std::span<const int> idx) { return data_[offset(idx)]; }

  template <class... I>
  double operator()(I... idx) const {
    const int buf[] = {static_cast<int>(idx)...};
    return at(std::span<const int>(buf, sizeof...(I)));
  }
  template <class... I>
  double& operator()(I... idx) {
    const int buf[] = {static_cast<int>(idx)...};
    return at(std::span<const int>(buf, sizeof...(I)));
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  TensorValue& operator+=(const TensorValue& o);
  TensorValue& operator-=(const TensorValue& o);
  TensorValue& operator*=(double c);
  friend TensorValue operator+(TensorValue a, const TensorValue& b) { return a += b; }
  friend TensorValue operator-(TensorValue a, const TensorValue& b) { return a -= b; }
  friend TensorValue operator*(double c, TensorValue t) { return t *= c; }

  double max_abs() const;
  bool all_finite() const;

 private:
  std::size_t offset(std::span<const int> idx) const;

  int dim_ = 0;
  int valence_ = 0;
  std::vector<double> data_;
};

// (h o k)(X,Y,Z,W) = h(X,Z)k(Y,W) + h(Y,W)k(X,Z) - h(X,W)k(Y,Z) - h(Y,Z)k(X,W)
TensorValue kulkarni_nomizu(const SymBilinear& h, const SymBilinear& k);

// Metric trace over two distinct slots; removes them from the valence.
TensorValue contract(const TensorValue& t, int slot_a, int slot_b,
                     const SymBilinear& metric_inverse);

// Full evaluation against one vector per slot.
double tensor_eval(const TensorValue& t, std::span<const Eigen::VectorXd> args);

}  // namespace subcurv
