#pragma once

#include <Eigen/Dense>
#include <utility>

#include "ggrow/errors.hpp"

namespace ggrow {

// Dense symmetric matrix. Symmetry is exact, not tolerance-based: general
// input is averaged with its transpose once at construction, and all mutators
// write both triangles.
class SymMatrix {
 public:
  SymMatrix() = default;  // 0x0 placeholder; any real use requires dim >= 1

  explicit SymMatrix(int dim) {
    if (dim < 1) throw DimensionError("SymMatrix: dim must be >= 1");
    m_ = Eigen::MatrixXd::Zero(dim, dim);
  }

  explicit SymMatrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw DimensionError("SymMatrix: input must be square and non-empty");
    m_ = 0.5 * (m + m.transpose());
  }

  static SymMatrix identity(int dim) {
    SymMatrix s(dim);
    s.m_.setIdentity();
    return s;
  }

  static SymMatrix zero(int dim) { return SymMatrix(dim); }

  static SymMatrix from_diagonal(const Eigen::VectorXd& diag) {
    SymMatrix s(static_cast<int>(diag.size()));
    s.m_.diagonal() = diag;
    return s;
  }

  int dim() const { return static_cast<int>(m_.rows()); }

  double operator()(int i, int j) const { return m_(i, j); }

  void set(int i, int j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }

  const Eigen::MatrixXd& mat() const { return m_; }

  // Mutable storage for the update kernels; callers must keep both triangles
  // bit-identical (write the upper triangle, then mirror).
  Eigen::MatrixXd& raw() { return m_; }

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Eigen::MatrixXd m_;
};

}  // namespace ggrow
