#pragma once

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "ggrow/errors.hpp"
#include "ggrow/sym_matrix.hpp"

namespace ggrow {

namespace detail {

inline void require_same_dim(const SymMatrix& a, const SymMatrix& b,
                             const char* where) {
  if (a.dim() != b.dim())
    throw DimensionError(std::string(where) + ": dimension mismatch (" +
                         std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()) + ")");
}

}  // namespace detail

// Cholesky factorisation doubles as the library's positive-definiteness test:
// it succeeds iff all pivots are > 0. No eigenvalue thresholding anywhere.
inline Eigen::LLT<Eigen::MatrixXd> cholesky_or_throw(const SymMatrix& m,
                                                     const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m.mat());
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError(std::string(what) +
                                   ": matrix is not positive definite");
  return llt;
}

// log det from Cholesky pivots (sum of 2 log L_ii); never via determinant.
inline double log_det_from_cholesky(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline SymMatrix invert_spd(const SymMatrix& m, const char* what) {
  const auto llt = cholesky_or_throw(m, what);
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.dim(), m.dim()));
  return SymMatrix(inv);  // construction symmetrises solver roundoff
}

// A positive-definite iterate Q together with its maintained inverse
// R = Q^{ -1 }. Closed-form updates keep both in sync; a full rebuild from a
// fresh Cholesky runs every 5 d^2 updates so long-run drift stays bounded.
class SpdPair {
 public:
  static SpdPair from_matrix(const SymMatrix& q) {
    SpdPair p(q, invert_spd(q, "SpdPair::from_matrix"));
    p.consistency_bound_ = std::max(p.check_consistency(), 1e-15);
    return p;
  }

  // Adopts caller-supplied Q and R; the consistency bound is measured, not
  // trusted.
  static SpdPair from_parts(SymMatrix q, SymMatrix r) {
    detail::require_same_dim(q, r, "SpdPair::from_parts");
    SpdPair p(std::move(q), std::move(r));
    p.consistency_bound_ = std::max(p.check_consistency(), 1e-15);
    return p;
  }

  int dim() const { return q_.dim(); }
  const SymMatrix& q() const { return q_; }
  const SymMatrix& r() const { return r_; }
  double consistency_bound() const { return consistency_bound_; }

  // ||Q R - I||_F measured fresh.
  double check_consistency() const {
    Eigen::MatrixXd e = q_.mat() * r_.mat();
    e.diagonal().array() -= 1.0;
    return e.norm();
  }

  void rebuild_inverse() {
    r_ = invert_spd(q_, "SpdPair::rebuild_inverse");
    consistency_bound_ = std::max(check_consistency(), 1e-15);
    updates_since_rebuild_ = 0;
  }

  // Hooks for the update kernels; anyone mutating q()/r() through these must
  // preserve exact symmetry and call note_closed_form_update() afterwards.
  SymMatrix& mutable_q() { return q_; }
  SymMatrix& mutable_r() { return r_; }

  void note_closed_form_update() {
    ++updates_since_rebuild_;
    if (updates_since_rebuild_ >= 5L * dim() * dim()) {
      rebuild_inverse();
      return;
    }
    // Amortised drift check: measuring every d updates costs O(d^2) per
    // update, the same order as the update itself.
    if (updates_since_rebuild_ % dim() == 0) {
      const double err = check_consistency();
      if (err > 1e-9)
        rebuild_inverse();
      else
        consistency_bound_ = std::max(err, 1e-15);
    }
  }

 private:
  SpdPair(SymMatrix q, SymMatrix r) : q_(std::move(q)), r_(std::move(r)) {}

  SymMatrix q_;
  SymMatrix r_;
  double consistency_bound_ = 0.0;
  long updates_since_rebuild_ = 0;
};

inline double check_consistency(const SpdPair& pair) {
  return pair.check_consistency();
}

// Gaussian graphical loss f_S(Q) = trace(S Q) - log det Q.
inline double gaussian_loss(const SymMatrix& s, const SpdPair& pair) {
  detail::require_same_dim(s, pair.q(), "gaussian_loss");
  const auto llt = cholesky_or_throw(pair.q(), "gaussian_loss");
  const double tr = s.mat().cwiseProduct(pair.q().mat()).sum();
  return tr - log_det_from_cholesky(llt);
}

// Gradient of f_S at Q: S - Q^{-1}, read off the maintained inverse.
inline SymMatrix loss_gradient(const SymMatrix& s, const SpdPair& pair) {
  detail::require_same_dim(s, pair.q(), "loss_gradient");
  return SymMatrix(s.mat() - pair.r().mat());
}

// Optimality gap f_S(Q) - f_S(S^{-1}) = trace(S Q - I) - log det(S Q); equals
// twice the KL divergence between the corresponding centred Gaussians.
inline double kl_gap(const SymMatrix& s, const SpdPair& pair) {
  detail::require_same_dim(s, pair.q(), "kl_gap");
  const auto llt_s = cholesky_or_throw(s, "kl_gap");  // needs invertible S
  return gaussian_loss(s, pair) -
         (static_cast<double>(s.dim()) + log_det_from_cholesky(llt_s));
}

// Optimal diagonal iterate of the edgeless graph: Q_ii = 1 / S_ii. The
// diagonal of the gradient vanishes identically by construction.
inline SpdPair optimal_diagonal_init(const SymMatrix& s) {
  const int d = s.dim();
  Eigen::VectorXd qd(d), rd(d);
  for (int i = 0; i < d; ++i) {
    const double sii = s(i, i);
    if (!(sii > 0.0))
      throw DegeneracyError(
          "optimal_diagonal_init: non-positive diagonal entry S(" +
          std::to_string(i) + "," + std::to_string(i) +
          "); the edgeless-graph loss is undefined");
    qd[i] = 1.0 / sii;
    rd[i] = sii;
  }
  return SpdPair::from_parts(SymMatrix::from_diagonal(qd),
                             SymMatrix::from_diagonal(rd));
}

}  // namespace ggrow
