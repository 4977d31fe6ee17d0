#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ggrow/block_update.hpp"

namespace ggrow {

enum class SelectionKind { GS, GSL, BBI, BFCI };

inline const char* to_string(SelectionKind k) {
  switch (k) {
    case SelectionKind::GS:
      return "gs";
    case SelectionKind::GSL:
      return "gsl";
    case SelectionKind::BBI:
      return "bbi";
    case SelectionKind::BFCI:
      return "bfci";
  }
  return "?";
}

struct ScoredCandidate {
  Edge edge;  // i == j for diagonal candidates
  double score = 0.0;
  SelectionKind rule = SelectionKind::GS;
};

// Gauss-Southwell score |<grad f, B(i,j)>|: the gradient entry in the
// orthonormal basis, so off-diagonal coordinates carry a sqrt(2) factor.
inline double score_gs(const SymMatrix& s, const SpdPair& pair, Edge e) {
  const double g = s(e.i, e.j) - pair.r()(e.i, e.j);
  return e.i == e.j ? std::fabs(g) : std::numbers::sqrt2 * std::fabs(g);
}

// Gauss-Southwell-Lipschitz score: squared directional derivative over the
// exact curvature D^2 f(B, B). For an edge the curvature is
// R_ii R_jj + R_ij^2; for a diagonal coordinate it is R_ii^2.
inline double score_gsl(const SymMatrix& s, const SpdPair& pair, Edge e) {
  const auto& r = pair.r();
  const double g = s(e.i, e.j) - r(e.i, e.j);
  if (e.i == e.j) {
    const double curv = r(e.i, e.i) * r(e.i, e.i);
    if (!(curv > 0.0))
      throw DegeneracyError("score_gsl: non-positive curvature (inconsistent pair)");
    return g * g / curv;
  }
  const double curv = r(e.i, e.i) * r(e.j, e.j) + r(e.i, e.j) * r(e.i, e.j);
  if (!(curv > 0.0))
    throw DegeneracyError("score_gsl: non-positive curvature (inconsistent pair)");
  return 2.0 * g * g / curv;
}

// Best-block-improvement score: the exact dry improvement of the {1,2}-update.
inline double score_bbi(const SymMatrix& s, const SpdPair& pair, Edge e) {
  return e.i == e.j ? improvement_order1_dry(s, pair, e.i)
                    : improvement_order2_dry(s, pair, e.i, e.j);
}

// Maximal-score candidate; exact ties go to the lexicographically smallest
// coordinate regardless of input order.
template <typename Scorer>
ScoredCandidate argmax_over(const std::vector<Edge>& candidates,
                            Scorer&& score) {
  if (candidates.empty())
    throw DegeneracyError("argmax_over: empty candidate set");
  ScoredCandidate best{candidates[0], score(candidates[0])};
  for (std::size_t t = 1; t < candidates.size(); ++t) {
    const double sc = score(candidates[t]);
    if (sc > best.score || (sc == best.score && candidates[t] < best.edge)) {
      best.edge = candidates[t];
      best.score = sc;
    }
  }
  return best;
}

}  // namespace ggrow
