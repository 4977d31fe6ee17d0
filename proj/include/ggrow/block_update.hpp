#pragma once

#include <cfloat>
#include <cmath>
#include <string>

#include "ggrow/spd_core.hpp"
#include "ggrow/support.hpp"

namespace ggrow {

// One exact block-coordinate update. For order 1, j == i and only q_ii is
// meaningful.
struct BlockUpdateResult {
  double improvement = 0.0;  // f(Q) - f(Q~), >= 0 up to roundoff
  int i = 0;
  int j = 0;
  double q_ii = 0.0;
  double q_jj = 0.0;
  double q_ij = 0.0;
};

namespace detail {

// gain(x) = (x - 1) - log x: the loss drop of an exact 1-D minimisation with
// ratio x; evaluated via log1p so it stays non-negative and accurate near 1.
inline double gain(double x) { return (x - 1.0) - std::log1p(x - 1.0); }

struct Block2 {  // [[a, b], [b, c]]
  double a, b, c;
};

// Determinant with the scale-relative singularity guard.
inline double det2_or_throw(const Block2& m, const char* what) {
  const double det = m.a * m.c - m.b * m.b;
  const double scale = std::max({std::fabs(m.a * m.c), m.b * m.b, DBL_MIN});
  if (!(std::fabs(det) > 1e-14 * scale))
    throw DegeneracyError(std::string(what) + ": singular 2x2 block");
  return det;
}

// Block validation shared by the wet and dry order-2 paths. Both blocks must
// be PD: R_II because the iterate is PD, S_II because otherwise the block loss
// is unbounded below and no exact minimiser exists.
inline void check_block2(const Block2& m, double det, const char* what,
                         const char* name) {
  if (!(m.a > 0.0) || !(m.c > 0.0) || !(det > 0.0))
    throw DegeneracyError(std::string(what) + ": " + name +
                          " block is not positive definite");
}

// Improvement of the exact order-2 update: sum of gain() over the two
// eigenvalues of P = S_II (R_II)^{-1}. Cancellation-free near the optimum,
// unlike the direct trace - 2 - log det form.
inline double improvement2(const Block2& w, const Block2& v, double detw,
                           double detv) {
  const double tr = (w.a * v.c - 2.0 * w.b * v.b + w.c * v.a) / detv;
  const double det = detw / detv;
  const double disc = std::max(0.0, tr * tr - 4.0 * det);
  const double lam_hi = 0.5 * (tr + std::sqrt(disc));
  const double lam_lo = det / lam_hi;  // stable form of the smaller eigenvalue
  return gain(lam_hi) + gain(lam_lo);
}

// Mirrors the upper triangle onto the lower one; the kernels write the upper
// triangle only, so this keeps symmetry bit-exact.
inline void mirror_upper(Eigen::MatrixXd& m) {
  const int d = static_cast<int>(m.rows());
  for (int b = 1; b < d; ++b)
    for (int a = 0; a < b; ++a) m(b, a) = m(a, b);
}

inline void check_index(int i, int d, const char* what) {
  if (i < 0 || i >= d)
    throw DimensionError(std::string(what) + ": index out of range");
}

}  // namespace detail

// Dry-run improvement of an order-1 update at diagonal coordinate i.
inline double improvement_order1_dry(const SymMatrix& s, const SpdPair& pair,
                                     int i) {
  detail::require_same_dim(s, pair.q(), "improvement_order1_dry");
  detail::check_index(i, pair.dim(), "improvement_order1_dry");
  const double rii = pair.r()(i, i);
  const double sii = s(i, i);
  if (!(rii > 0.0) || !(sii > 0.0))
    throw DegeneracyError(
        "improvement_order1_dry: non-positive diagonal entry");
  return detail::gain(sii / rii);
}

// Dry-run improvement of an order-2 update at edge (i, j): the block
// improvement score trace(S_II (R_II)^{-1}) - 2 - log det(S_II (R_II)^{-1}),
// a pure function of the four block entries.
inline double improvement_order2_dry(const SymMatrix& s, const SpdPair& pair,
                                     int i, int j) {
  detail::require_same_dim(s, pair.q(), "improvement_order2_dry");
  detail::check_index(i, pair.dim(), "improvement_order2_dry");
  detail::check_index(j, pair.dim(), "improvement_order2_dry");
  if (i >= j) throw DimensionError("improvement_order2_dry: need i < j");
  const auto& r = pair.r();
  const detail::Block2 w{s(i, i), s(i, j), s(j, j)};
  const detail::Block2 v{r(i, i), r(i, j), r(j, j)};
  if (w.a == v.a && w.b == v.b && w.c == v.c) return 0.0;  // already optimal
  const double detv = detail::det2_or_throw(v, "improvement_order2_dry");
  detail::check_block2(v, detv, "improvement_order2_dry", "R");
  const double detw = detail::det2_or_throw(w, "improvement_order2_dry");
  detail::check_block2(w, detw, "improvement_order2_dry", "S");
  return detail::improvement2(w, v, detw, detv);
}

// Exact order-1 update at diagonal coordinate i (Lemma-4 closed form with
// I = {i}). Mutates the pair in place; post-update R~_ii = S_ii exactly, so
// the gradient entry (i,i) vanishes.
inline BlockUpdateResult update_order1(const SymMatrix& s, SpdPair& pair,
                                       int i) {
  detail::require_same_dim(s, pair.q(), "update_order1");
  detail::check_index(i, pair.dim(), "update_order1");
  SymMatrix& q = pair.mutable_q();
  SymMatrix& r = pair.mutable_r();
  const double rii = r(i, i);
  const double sii = s(i, i);
  if (!(rii > 0.0))
    throw DegeneracyError("update_order1: R(i,i) <= 0 (inverse drift)");
  if (!(sii > 0.0)) throw DegeneracyError("update_order1: S(i,i) <= 0");

  const double x = sii / rii;
  BlockUpdateResult out;
  out.i = out.j = i;
  out.improvement = detail::gain(x);

  // Q~_ii = Q_ii + 1/S_ii - 1/R_ii; exact no-op when the coordinate is
  // already optimal (x == 1).
  const double qii = q(i, i) + (1.0 / sii - 1.0 / rii);
  q.set(i, i, qii);
  out.q_ii = qii;

  if (x != 1.0) {
    // R~ = R - t u u^T with u = R_{:,i}, t = (1 - x)/R_ii; upper triangle
    // written once and mirrored, then R~_ii pinned to S_ii (Lemma-4 value).
    const double t = (1.0 - x) / rii;
    const Eigen::VectorXd u = r.mat().col(i);
    Eigen::MatrixXd& rm = r.raw();
    const int d = pair.dim();
    for (int b = 0; b < d; ++b) {
      const double tub = t * u[b];
      for (int a = 0; a <= b; ++a) rm(a, b) -= u[a] * tub;
    }
    detail::mirror_upper(rm);
    r.set(i, i, sii);
  }
  pair.note_closed_form_update();
  return out;
}

// Exact order-2 update at edge (i, j) (Lemma-4 closed form with I = {i, j}).
// Q_II gains (S_II)^{-1} - (R_II)^{-1}; R is updated in the uniform rank-2
// form R~ = R - U T U^T with U = R_{:,I} and T = K - K W K, K = (R_II)^{-1},
// W = S_II, which reproduces all four Lemma-4 blocks at once; the I x I block
// is then pinned to S_II exactly. Gradient entries on {(i,i),(j,j),(i,j)}
// vanish after the update.
inline BlockUpdateResult update_order2(const SymMatrix& s, SpdPair& pair,
                                       int i, int j) {
  detail::require_same_dim(s, pair.q(), "update_order2");
  detail::check_index(i, pair.dim(), "update_order2");
  detail::check_index(j, pair.dim(), "update_order2");
  if (i >= j) throw DimensionError("update_order2: need i < j");
  SymMatrix& q = pair.mutable_q();
  SymMatrix& r = pair.mutable_r();
  const detail::Block2 w{s(i, i), s(i, j), s(j, j)};
  const detail::Block2 v{r(i, i), r(i, j), r(j, j)};

  BlockUpdateResult out;
  out.i = i;
  out.j = j;
  if (w.a == v.a && w.b == v.b && w.c == v.c) {
    // Block already optimal: improvement 0, no change.
    out.q_ii = q(i, i);
    out.q_jj = q(j, j);
    out.q_ij = q(i, j);
    return out;
  }
  const double detv = detail::det2_or_throw(v, "update_order2");
  detail::check_block2(v, detv, "update_order2", "R");
  const double detw = detail::det2_or_throw(w, "update_order2");
  detail::check_block2(w, detw, "update_order2", "S");
  out.improvement = detail::improvement2(w, v, detw, detv);

  // Adjugate inverses of the 2x2 blocks.
  const detail::Block2 k{v.c / detv, -v.b / detv, v.a / detv};
  const detail::Block2 winv{w.c / detw, -w.b / detw, w.a / detw};

  out.q_ii = q(i, i) + (winv.a - k.a);
  out.q_jj = q(j, j) + (winv.c - k.c);
  out.q_ij = q(i, j) + (winv.b - k.b);
  q.set(i, i, out.q_ii);
  q.set(j, j, out.q_jj);
  q.set(i, j, out.q_ij);

  // T = K - K W K, symmetrised against 2x2 roundoff.
  const double kw00 = k.a * w.a + k.b * w.b;
  const double kw01 = k.a * w.b + k.b * w.c;
  const double kw10 = k.b * w.a + k.c * w.b;
  const double kw11 = k.b * w.b + k.c * w.c;
  const double t00 = k.a - (kw00 * k.a + kw01 * k.b);
  const double t11 = k.c - (kw10 * k.b + kw11 * k.c);
  const double t01 = 0.5 * ((k.b - (kw00 * k.b + kw01 * k.c)) +
                            (k.b - (kw10 * k.a + kw11 * k.b)));

  // Columns of U copied before R is touched.
  const Eigen::VectorXd u0 = r.mat().col(i);
  const Eigen::VectorXd u1 = r.mat().col(j);
  const Eigen::VectorXd v0 = t00 * u0 + t01 * u1;  // U T, first column
  const Eigen::VectorXd v1 = t01 * u0 + t11 * u1;
  Eigen::MatrixXd& rm = r.raw();
  const int d = pair.dim();
  for (int b = 0; b < d; ++b) {
    const double ub0 = u0[b];
    const double ub1 = u1[b];
    for (int a = 0; a <= b; ++a) rm(a, b) -= v0[a] * ub0 + v1[a] * ub1;
  }
  detail::mirror_upper(rm);
  r.set(i, i, w.a);
  r.set(j, j, w.c);
  r.set(i, j, w.b);

  pair.note_closed_form_update();
  return out;
}

inline BlockUpdateResult update_order2(const SymMatrix& s, SpdPair& pair,
                                       Edge e) {
  return update_order2(s, pair, e.i, e.j);
}

inline double improvement_order2_dry(const SymMatrix& s, const SpdPair& pair,
                                     Edge e) {
  return improvement_order2_dry(s, pair, e.i, e.j);
}

}  // namespace ggrow
