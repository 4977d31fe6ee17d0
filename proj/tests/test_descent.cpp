#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"

using namespace ggrow;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Max gradient magnitude over the diagonal and the support edges.
double max_active_gradient(const SymMatrix& s, const SpdPair& pair,
                           const Support& sup) {
  double g = 0.0;
  for (int i = 0; i < pair.dim(); ++i)
    g = std::max(g, std::fabs(s(i, i) - pair.r()(i, i)));
  for (const Edge e : sup.edges())
    g = std::max(g, std::fabs(s(e.i, e.j) - pair.r()(e.i, e.j)));
  return g;
}

Support chordal6() {
  Support sup(6);
  for (const Edge e : std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}, {1, 3},
                                        {2, 3}, {2, 4}, {3, 4}, {3, 5},
                                        {4, 5}})
    sup.add(e.i, e.j);
  return sup;
}

}  // namespace

TEST_CASE("iteration cap follows the affine rule with a hard ceiling") {
  StoppingConfig cfg;  // alpha = 1, beta = 10
  REQUIRE(cfg.iteration_cap(0) == 10);
  REQUIRE(cfg.iteration_cap(7) == 17);
  cfg.alpha = 2.5;
  cfg.beta = 0.0;
  REQUIRE(cfg.iteration_cap(3) == 8);  // ceil(7.5)
  cfg.hard_cap = 5;
  REQUIRE(cfg.iteration_cap(3) == 5);

  StoppingConfig bad;
  bad.tau = 0.0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad.tau = 1.5;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = StoppingConfig{};
  bad.alpha = -1.0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = StoppingConfig{};
  bad.hard_cap = 0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("optimal support stops stationary at iteration zero") {
  RandomStream rs(61);
  const SymMatrix s = test::random_spd(rs, 5);
  SpdPair pair = optimal_diagonal_init(s);
  const SymMatrix q_before = pair.q();

  const DescentReport rep =
      descend(s, pair, Support(5), SelectionKind::GS, StoppingConfig{});

  REQUIRE(rep.iterations == 0);
  REQUIRE(rep.stop_reason == StopReason::STATIONARY);
  REQUIRE(rep.total_improvement == 0.0);
  REQUIRE(rep.exit_loss == rep.entry_loss);
  REQUIRE(pair.q() == q_before);  // untouched
}

TEST_CASE("d=2 single-edge support converges in one real update") {
  RandomStream rs(62);
  for (int rep_i = 0; rep_i < 10; ++rep_i) {
    const SymMatrix s = test::random_spd(rs, 2, 0.3, 3.0);
    SpdPair pair = optimal_diagonal_init(s);
    const double gap = kl_gap(s, pair);
    Support sup(2);
    sup.add(0, 1);

    const DescentReport rep =
        descend(s, pair, sup, SelectionKind::GSL, StoppingConfig{});

    // First 2-update closes the whole gap; the follow-up improvement is 0,
    // which trips the fractional stop.
    REQUIRE(rep.iterations == 2);
    REQUIRE(rep.stop_reason == StopReason::FRACTION);
    REQUIRE_THAT(rep.initial_improvement, WithinAbs(gap, 1e-12));
    REQUIRE(rep.final_improvement <= 1e-14);
    REQUIRE(kl_gap(s, pair) <= 1e-12);
  }
}

TEST_CASE("long runs drive the active gradient to stationarity") {
  // The fractional stop scales with the first improvement, so the residual
  // gradient at tau = 1e-12 scales with the instance; a diagonally dominant
  // instance keeps it below 1e-8 with a wide margin.
  RandomStream rs(63);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) m(i, j) = m(j, i) = 0.003 * rs.normal();
  const SymMatrix s(m);
  const Support sup = chordal6();
  SpdPair pair = optimal_diagonal_init(s);
  StoppingConfig cfg;
  cfg.tau = 1e-12;
  cfg.alpha = 0.0;
  cfg.beta = 100000.0;

  descend(s, pair, sup, SelectionKind::GSL, cfg);
  REQUIRE(max_active_gradient(s, pair, sup) <= 1e-8);

  // Generic instances land proportionally: tau * initial improvement sets
  // the final improvement, so the residual gradient follows its square root.
  const SymMatrix s2 = test::random_spd(rs, 6, 0.4, 2.5);
  SpdPair pair2 = optimal_diagonal_init(s2);
  const DescentReport rep2 = descend(s2, pair2, sup, SelectionKind::GSL, cfg);
  REQUIRE(max_active_gradient(s2, pair2, sup) <=
          20.0 * std::sqrt(cfg.tau * rep2.initial_improvement));
}

TEST_CASE("stationarity residual shrinks monotonically with the tolerance") {
  RandomStream rs(64);
  const SymMatrix s = test::random_spd(rs, 8, 0.4, 2.5);
  Support sup(8);
  for (const Edge e : std::vector<Edge>{{0, 1}, {0, 3}, {1, 4}, {2, 5},
                                        {3, 6}, {4, 7}, {5, 7}, {2, 6}})
    sup.add(e.i, e.j);

  double prev = std::numeric_limits<double>::infinity();
  for (const double tau : {1e-3, 1e-6, 1e-9, 1e-12}) {
    SpdPair pair = optimal_diagonal_init(s);
    StoppingConfig cfg;
    cfg.tau = tau;
    cfg.alpha = 0.0;
    cfg.beta = 100000.0;
    descend(s, pair, sup, SelectionKind::GSL, cfg);
    const double g = max_active_gradient(s, pair, sup);
    REQUIRE(g <= prev + 1e-12);
    prev = g;
  }
}

TEST_CASE("every inner rule yields a monotone recorded trajectory") {
  RandomStream rs(65);
  const SymMatrix s = test::random_spd(rs, 6, 0.4, 2.5);
  const Support sup = chordal6();
  for (const SelectionKind rule :
       {SelectionKind::GS, SelectionKind::GSL, SelectionKind::BBI}) {
    SpdPair pair = optimal_diagonal_init(s);
    DescentOptions opt;
    opt.record_trajectory = true;
    const DescentReport rep =
        descend(s, pair, sup, rule, StoppingConfig{}, opt);

    REQUIRE(rep.loss_trajectory.size() ==
            static_cast<std::size_t>(rep.iterations) + 1);
    REQUIRE(rep.loss_trajectory.front() == rep.entry_loss);
    REQUIRE(rep.loss_trajectory.back() == rep.exit_loss);
    for (std::size_t t = 1; t < rep.loss_trajectory.size(); ++t)
      REQUIRE(rep.loss_trajectory[t] <= rep.loss_trajectory[t - 1] + 1e-12);
    REQUIRE_THAT(gaussian_loss(s, pair), WithinAbs(rep.exit_loss, 1e-10));
  }
}

TEST_CASE("updates never leave the support") {
  RandomStream rs(66);
  const SymMatrix s = test::random_spd(rs, 7, 0.4, 2.5);
  Support sup(7);
  sup.add(1, 2);
  sup.add(3, 5);
  sup.add(0, 6);
  SpdPair pair = optimal_diagonal_init(s);
  descend(s, pair, sup, SelectionKind::BBI, StoppingConfig{});

  for (int i = 0; i < 7; ++i)
    for (int j = i + 1; j < 7; ++j)
      if (!sup.contains(i, j)) REQUIRE(pair.q()(i, j) == 0.0);
}

TEST_CASE("iteration ceiling reports the cap stop") {
  RandomStream rs(67);
  const SymMatrix s = test::random_spd(rs, 6, 0.4, 2.5);
  const Support sup = chordal6();
  SpdPair pair = optimal_diagonal_init(s);
  StoppingConfig cfg;
  cfg.alpha = 0.0;
  cfg.beta = 2.0;
  cfg.tau = 1e-15;  // keep the fractional stop out of the way

  const DescentReport rep = descend(s, pair, sup, SelectionKind::GS, cfg);
  REQUIRE(rep.iterations == 2);
  REQUIRE(rep.stop_reason == StopReason::ITER_CAP);
}

TEST_CASE("descent rejects bad configurations and inconsistent supports") {
  RandomStream rs(68);
  const SymMatrix s = test::random_spd(rs, 4, 0.4, 2.5);
  SpdPair pair = optimal_diagonal_init(s);
  Support sup(4);
  sup.add(0, 1);

  REQUIRE_THROWS_AS(
      descend(s, pair, sup, SelectionKind::BFCI, StoppingConfig{}),
      ConfigError);
  REQUIRE_THROWS_AS(
      descend(s, pair, Support(3), SelectionKind::GS, StoppingConfig{}),
      DimensionError);

  // Pair with an active edge outside the support.
  descend(s, pair, sup, SelectionKind::GSL, StoppingConfig{});
  Support narrower(4);
  narrower.add(2, 3);
  REQUIRE_THROWS_AS(
      descend(s, pair, narrower, SelectionKind::GSL, StoppingConfig{}),
      SupportError);
}

TEST_CASE("caller-tracked entry loss keeps the telescoped exit loss") {
  RandomStream rs(69);
  const SymMatrix s = test::random_spd(rs, 5, 0.4, 2.5);
  Support sup(5);
  sup.add(0, 2);
  sup.add(1, 4);
  SpdPair pair = optimal_diagonal_init(s);
  const double f0 = gaussian_loss(s, pair);

  DescentOptions opt;
  opt.entry_loss = f0;
  const DescentReport rep =
      descend(s, pair, sup, SelectionKind::GSL, StoppingConfig{}, opt);

  REQUIRE(rep.entry_loss == f0);
  REQUIRE(rep.exit_loss == f0 - rep.total_improvement);
  REQUIRE_THAT(gaussian_loss(s, pair), WithinAbs(rep.exit_loss, 1e-10));
}

TEST_CASE("per-step line-search improvements respect the curvature bound") {
  RandomStream rs(70);
  const SymMatrix s = test::random_spd(rs, 5, 0.4, 2.5);
  Support sup(5);
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) sup.add(i, j);

  SpdPair pair = optimal_diagonal_init(s);
  std::vector<Edge> cands;
  for (int i = 0; i < 5; ++i) cands.push_back({i, i});
  for (const Edge e : sup.edges()) cands.push_back(e);
  std::sort(cands.begin(), cands.end());

  // lambda_min is concave along matrix segments, so the running minimum
  // over both endpoints bounds the curvature along each update path.
  double lam_run = test::min_eigenvalue(pair.q());
  for (int t = 0; t < 60; ++t) {
    const ScoredCandidate best =
        argmax_over(cands, [&](Edge e) { return score_gs(s, pair, e); });
    const BlockUpdateResult res =
        best.edge.i == best.edge.j
            ? update_order1(s, pair, best.edge.i)
            : update_order2(s, pair, best.edge);
    lam_run = std::min(lam_run, test::min_eigenvalue(pair.q()));
    const double big_l = 1.0 / (lam_run * lam_run);
    REQUIRE(res.improvement >=
            best.score * best.score / (2.0 * big_l) - 1e-12);
  }
}

TEST_CASE("recorded descents satisfy the geometric rate bound") {
  RandomStream rs(71);
  const SymMatrix s = test::random_spd(rs, 5, 0.4, 2.5);
  Support sup(5);
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) sup.add(i, j);

  SpdPair pair = optimal_diagonal_init(s);
  StoppingConfig cfg;
  cfg.alpha = 0.0;
  cfg.beta = 200.0;
  cfg.tau = 1e-14;
  DescentOptions opt;
  opt.record_trajectory = true;
  opt.track_spectrum = true;
  const DescentReport rep = descend(s, pair, sup, SelectionKind::GS, cfg, opt);
  REQUIRE(rep.lambda_min_seen > 0.0);
  REQUIRE(rep.lambda_max_seen >= rep.lambda_min_seen);

  // High-precision oracle for the restricted optimum (dense support: S^-1).
  SpdPair oracle = optimal_diagonal_init(s);
  StoppingConfig tight = cfg;
  tight.beta = 100000.0;
  descend(s, oracle, sup, SelectionKind::GS, tight);
  const double f_star = gaussian_loss(s, oracle);

  REQUIRE(verify_rate_bound(rep.loss_trajectory, f_star, sup,
                            rep.lambda_min_seen, rep.lambda_max_seen));

  // Trivial single-step case: the d=2 full cover hits the optimum at once.
  const SymMatrix s2 = test::random_spd(rs, 2, 0.3, 3.0);
  SpdPair p2 = optimal_diagonal_init(s2);
  Support sup2(2);
  sup2.add(0, 1);
  DescentOptions o2;
  o2.record_trajectory = true;
  o2.track_spectrum = true;
  const DescentReport r2 =
      descend(s2, p2, sup2, SelectionKind::GS, StoppingConfig{}, o2);
  REQUIRE(verify_rate_bound(r2.loss_trajectory, r2.exit_loss, sup2,
                            r2.lambda_min_seen, r2.lambda_max_seen));

  REQUIRE_THROWS_AS(verify_rate_bound({}, 0.0, sup, 0.5, 2.0), ConfigError);
  REQUIRE_THROWS_AS(
      verify_rate_bound(rep.loss_trajectory, f_star, sup, 0.0, 2.0),
      ConfigError);
  REQUIRE_THROWS_AS(
      verify_rate_bound(rep.loss_trajectory, f_star, sup, 2.0, 0.5),
      ConfigError);
}
