#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "ggrow/ggrow.hpp"

namespace test {

// Random SPD matrix with eigenvalues uniform in [lo, hi]: Q Lambda Q^T with Q
// from the QR factorisation of a Gaussian matrix. Controlled spectrum keeps
// finite-difference tests well conditioned.
inline ggrow::SymMatrix random_spd(ggrow::RandomStream& rs, int d,
                                   double lo = 0.5, double hi = 2.0) {
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rs.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd lam(d);
  for (int i = 0; i < d; ++i) lam[i] = rs.uniform(lo, hi);
  return ggrow::SymMatrix(
      Eigen::MatrixXd(q * lam.asDiagonal() * q.transpose()));
}

// Dense correlated-noise data matrix (for covariance-input tests).
inline Eigen::MatrixXd random_data(ggrow::RandomStream& rs, int n, int d) {
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rs.normal();
  return x;
}

// log det via eigendecomposition; independent of the Cholesky path.
inline double logdet_eigen(const ggrow::SymMatrix& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      m.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().array().log().sum();
}

// Loss straight from the definition with the eigenvalue log det.
inline double loss_oracle(const ggrow::SymMatrix& s, const ggrow::SymMatrix& q) {
  return s.mat().cwiseProduct(q.mat()).sum() - logdet_eigen(q);
}

inline double min_eigenvalue(const ggrow::SymMatrix& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      m.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const ggrow::SymMatrix& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      m.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// Central finite-difference gradient entry of f_S at Q along the symmetric
// elementary direction E_ij + E_ji (i != j) or E_ii.
inline double fd_gradient_entry(const ggrow::SymMatrix& s,
                                const ggrow::SymMatrix& q, int i, int j,
                                double h = 1e-6) {
  Eigen::MatrixXd plus = q.mat(), minus = q.mat();
  plus(i, j) += h;
  minus(i, j) -= h;
  if (i != j) {
    plus(j, i) += h;
    minus(j, i) -= h;
  }
  return (loss_oracle(s, ggrow::SymMatrix(plus)) -
          loss_oracle(s, ggrow::SymMatrix(minus))) /
         (2.0 * h);
}

// Second directional derivative of f_S at Q along a unit direction H.
inline double fd_second_directional(const ggrow::SymMatrix& s,
                                    const ggrow::SymMatrix& q,
                                    const Eigen::MatrixXd& h_dir,
                                    double h = 1e-4) {
  const double f0 = loss_oracle(s, q);
  const double fp = loss_oracle(s, ggrow::SymMatrix(q.mat() + h * h_dir));
  const double fm = loss_oracle(s, ggrow::SymMatrix(q.mat() - h * h_dir));
  return (fp - 2.0 * f0 + fm) / (h * h);
}

// Fresh scratch directory under the test binary's working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::path("scratch") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace test
