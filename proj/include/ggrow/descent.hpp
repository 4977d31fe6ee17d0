#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ggrow/selection.hpp"

namespace ggrow {

enum class StopReason { FRACTION, ITER_CAP, STATIONARY };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::FRACTION:
      return "fraction";
    case StopReason::ITER_CAP:
      return "iter_cap";
    case StopReason::STATIONARY:
      return "stationary";
  }
  return "?";
}

// Stopping rule of the support-restricted descent: stop once the current
// improvement falls to a fraction tau of the first one, with an iteration
// ceiling ceil(alpha m + beta), m = |E|, capped by hard_cap.
struct StoppingConfig {
  double alpha = 1.0;
  double beta = 10.0;
  double tau = 1e-5;
  long hard_cap = 1000000;

  long iteration_cap(long edge_count) const {
    const double soft = std::ceil(alpha * static_cast<double>(edge_count) + beta);
    return soft >= static_cast<double>(hard_cap)
               ? hard_cap
               : std::max(0L, static_cast<long>(soft));
  }

  void validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("StoppingConfig: alpha must be >= 0");
    if (!(beta >= 0.0)) throw ConfigError("StoppingConfig: beta must be >= 0");
    if (!(tau > 0.0 && tau <= 1.0))
      throw ConfigError("StoppingConfig: tau must lie in (0, 1]");
    if (hard_cap < 1) throw ConfigError("StoppingConfig: hard_cap must be >= 1");
  }
};

struct DescentOptions {
  bool record_trajectory = false;  // store the loss after every update
  bool track_spectrum = false;     // min/max eigenvalue over iterates (tests)
  // Caller-tracked loss at entry; avoids a fresh factorisation and keeps long
  // pipelines on one telescoping loss sequence.
  std::optional<double> entry_loss;
};

struct DescentReport {
  long iterations = 0;
  StopReason stop_reason = StopReason::STATIONARY;
  double entry_loss = 0.0;
  double exit_loss = 0.0;
  double initial_improvement = 0.0;
  double final_improvement = 0.0;
  double total_improvement = 0.0;
  std::vector<double> loss_trajectory;  // entry loss first, when recorded
  double lambda_min_seen = std::numeric_limits<double>::infinity();
  double lambda_max_seen = 0.0;
};

namespace detail {

inline void track_spectrum(const SymMatrix& q, DescentReport& rep) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.mat(),
                                                    Eigen::EigenvaluesOnly);
  rep.lambda_min_seen = std::min(rep.lambda_min_seen, es.eigenvalues().minCoeff());
  rep.lambda_max_seen = std::max(rep.lambda_max_seen, es.eigenvalues().maxCoeff());
}

// Dry improvement of a {1,2}-update at a candidate coordinate.
inline double dry_improvement(const SymMatrix& s, const SpdPair& pair, Edge e) {
  return e.i == e.j ? improvement_order1_dry(s, pair, e.i)
                    : improvement_order2_dry(s, pair, e.i, e.j);
}

}  // namespace detail

// Coordinate descent with exact {1,2}-updates restricted to D and the support
// edges. Selects by the given rule (GS, GSL, or BBI), mutates the pair in
// place, and reports the realised improvements and the stop reason. The
// support never grows: updates touch only candidates in D and E.
inline DescentReport descend(const SymMatrix& s, SpdPair& pair,
                             const Support& support, SelectionKind rule,
                             const StoppingConfig& cfg,
                             const DescentOptions& opt = {}) {
  detail::require_same_dim(s, pair.q(), "descend");
  if (support.dim() != pair.dim())
    throw DimensionError("descend: support dimension mismatch");
  if (rule == SelectionKind::BFCI)
    throw ConfigError("descend: BFCI is a growth rule, not a coordinate rule");
  cfg.validate();

  const int d = pair.dim();
  // Precondition: edge(Q) within the support.
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (pair.q()(i, j) != 0.0 && !support.contains(i, j))
        throw SupportError("descend: pair has an active edge (" +
                           std::to_string(i) + "," + std::to_string(j) +
                           ") outside the support");

  // Candidates D and E in lexicographic order (deterministic tie-break).
  std::vector<Edge> cands;
  cands.reserve(static_cast<std::size_t>(d) + support.edges().size());
  for (int i = 0; i < d; ++i) cands.push_back({i, i});
  cands.insert(cands.end(), support.edges().begin(), support.edges().end());
  std::sort(cands.begin(), cands.end());

  const auto score_one = [&](Edge e) -> double {
    switch (rule) {
      case SelectionKind::GS:
        return score_gs(s, pair, e);
      case SelectionKind::GSL:
        return score_gsl(s, pair, e);
      default:
        return score_bbi(s, pair, e);
    }
  };
  const auto apply_one = [&](Edge e) -> BlockUpdateResult {
    return e.i == e.j ? update_order1(s, pair, e.i)
                      : update_order2(s, pair, e.i, e.j);
  };

  DescentReport rep;
  rep.entry_loss = opt.entry_loss ? *opt.entry_loss : gaussian_loss(s, pair);
  double f = rep.entry_loss;
  if (opt.record_trajectory) rep.loss_trajectory.push_back(f);
  if (opt.track_spectrum) detail::track_spectrum(pair.q(), rep);

  const long cap = cfg.iteration_cap(support.edge_count());
  rep.stop_reason = StopReason::ITER_CAP;
  bool have_initial = false;
  for (long t = 1; t <= cap; ++t) {
    const ScoredCandidate best = argmax_over(cands, score_one);
    if (!have_initial) {
      // Absolute floor: if the very first step cannot improve beyond
      // roundoff, the support is already optimal; leave the pair untouched.
      const double dry = detail::dry_improvement(s, pair, best.edge);
      if (dry <= 1e-15 * (1.0 + std::fabs(f))) {
        rep.stop_reason = StopReason::STATIONARY;
        break;
      }
    }
    const BlockUpdateResult res = apply_one(best.edge);
    rep.iterations = t;
    f -= res.improvement;
    rep.final_improvement = res.improvement;
    rep.total_improvement += res.improvement;
    if (!have_initial) {
      rep.initial_improvement = res.improvement;
      have_initial = true;
    }
    if (opt.record_trajectory) rep.loss_trajectory.push_back(f);
    if (opt.track_spectrum) detail::track_spectrum(pair.q(), rep);
    if (res.improvement <= cfg.tau * rep.initial_improvement) {
      rep.stop_reason = StopReason::FRACTION;
      break;
    }
  }
  rep.exit_loss = f;
  return rep;
}

// Checks the geometric rate bound and the per-step gap inequality on a GS
// descent trajectory: with mu = 1/lambda_max^2, L = 1/lambda_min^2 and
// m = |D u E| = d + |E|,
//   f_t - f* <= (1 - mu/(m L))^t (f_0 - f*)            (geometric bound)
//   f_{t-1} - f* <= (m L / mu) (f_{t-1} - f_t)         (per-step bound)
// f* comes from a high-precision oracle run; the lambda bounds from the
// observed iterates, which makes this a necessary-condition check.
inline bool verify_rate_bound(const std::vector<double>& trajectory,
                              double f_star, const Support& support,
                              double lambda_min, double lambda_max,
                              double slack = 1e-9) {
  if (trajectory.empty())
    throw ConfigError("verify_rate_bound: missing trajectory");
  if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min))
    throw ConfigError("verify_rate_bound: invalid eigenvalue bounds");
  const double m =
      static_cast<double>(support.dim()) + static_cast<double>(support.edge_count());
  const double mu = 1.0 / (lambda_max * lambda_max);
  const double big_l = 1.0 / (lambda_min * lambda_min);
  const double rate = 1.0 - mu / (m * big_l);
  const double gap0 = trajectory.front() - f_star;

  double rate_pow = 1.0;
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const double gap = trajectory[t] - f_star;
    if (gap > rate_pow * gap0 + slack) return false;
    if (t > 0) {
      const double drop = trajectory[t - 1] - trajectory[t];
      const double prev_gap = trajectory[t - 1] - f_star;
      if (prev_gap > (m * big_l / mu) * drop + slack) return false;
    }
    rate_pow *= rate;
  }
  return true;
}

}  // namespace ggrow
