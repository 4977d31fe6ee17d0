#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ggrow/matrix_io.hpp"
#include "ggrow/prng.hpp"
#include "ggrow/spd_core.hpp"
#include "ggrow/support.hpp"

namespace ggrow {

enum class ScenarioFamily { RANDOM, CLIQUE, HUB, EXTERNAL };

inline const char* to_string(ScenarioFamily f) {
  switch (f) {
    case ScenarioFamily::RANDOM:
      return "random";
    case ScenarioFamily::CLIQUE:
      return "clique";
    case ScenarioFamily::HUB:
      return "hub";
    case ScenarioFamily::EXTERNAL:
      return "external";
  }
  return "?";
}

inline ScenarioFamily parse_scenario_family(const std::string& name) {
  if (name == "random") return ScenarioFamily::RANDOM;
  if (name == "clique") return ScenarioFamily::CLIQUE;
  if (name == "hub") return ScenarioFamily::HUB;
  if (name == "external") return ScenarioFamily::EXTERNAL;
  throw ConfigError("unknown scenario family '" + name +
                    "' (expected random, clique, hub, or external)");
}

// Synthetic-problem description: graph family, dimension, true edge count
// (random family only), signal parameter eta, sample size, and seed.
struct ScenarioSpec {
  ScenarioFamily family = ScenarioFamily::RANDOM;
  int d = 50;
  int m = 0;  // RANDOM only
  double eta = 0.25;
  int n = 0;
  std::uint64_t seed = 0;
  std::string external_path;  // EXTERNAL only

  void validate() const {
    if (family == ScenarioFamily::EXTERNAL) {
      if (external_path.empty())
        throw ConfigError("ScenarioSpec: external family needs external_path");
      return;
    }
    if (d < 2) throw ConfigError("ScenarioSpec: d must be >= 2");
    if (!(eta > 0.0)) throw ConfigError("ScenarioSpec: eta must be > 0");
    if (n < 0) throw ConfigError("ScenarioSpec: n must be >= 0");
    if (family == ScenarioFamily::RANDOM && (m < 0 || m > max_edges(d)))
      throw ConfigError("ScenarioSpec: random family needs 0 <= m <= " +
                        std::to_string(max_edges(d)));
  }
};

struct GroundTruth {
  SymMatrix sigma;         // true covariance, unit diagonal
  SymMatrix theta;         // true precision
  Support true_edges{1};   // edge(theta), lexicographic
};

namespace detail {

// Partition into 5 near-equal groups: the first d % 5 groups get the extra
// node. Matches the 5 blocks/hubs of 10 at d = 50.
inline std::vector<std::pair<int, int>> five_groups(int d) {
  std::vector<std::pair<int, int>> out;
  const int base = d / 5, extra = d % 5;
  int at = 0;
  for (int g = 0; g < 5 && at < d; ++g) {
    const int size = base + (g < extra ? 1 : 0);
    if (size > 0) out.emplace_back(at, size);
    at += size;
  }
  return out;
}

inline std::vector<Edge> pattern_edges(const ScenarioSpec& spec,
                                       RandomStream& rs) {
  std::vector<Edge> edges;
  switch (spec.family) {
    case ScenarioFamily::RANDOM: {
      // m distinct edges drawn by partial Fisher-Yates over U, then sorted so
      // value assignment is lexicographic.
      std::vector<Edge> all;
      all.reserve(static_cast<std::size_t>(max_edges(spec.d)));
      for (int i = 0; i < spec.d; ++i)
        for (int j = i + 1; j < spec.d; ++j) all.push_back({i, j});
      for (int t = 0; t < spec.m; ++t) {
        const auto pick =
            t + static_cast<long>(rs.uniform_below(
                    static_cast<std::uint64_t>(all.size() - t)));
        std::swap(all[static_cast<std::size_t>(t)],
                  all[static_cast<std::size_t>(pick)]);
      }
      edges.assign(all.begin(), all.begin() + spec.m);
      std::sort(edges.begin(), edges.end());
      break;
    }
    case ScenarioFamily::CLIQUE:
      for (const auto& [start, size] : five_groups(spec.d))
        for (int i = start; i < start + size; ++i)
          for (int j = i + 1; j < start + size; ++j) edges.push_back({i, j});
      break;
    case ScenarioFamily::HUB:
      for (const auto& [start, size] : five_groups(spec.d))
        for (int j = start + 1; j < start + size; ++j)
          edges.push_back({start, j});
      break;
    case ScenarioFamily::EXTERNAL:
      throw ConfigError("generate_base: external family has no pattern");
  }
  return edges;
}

}  // namespace detail

// Base matrix A of the synthetic protocol: the family's sparsity pattern with
// non-zero entries Z = Rademacher * Uniform[0.5, 1.5] i.i.d., zero diagonal.
inline SymMatrix generate_base(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.family == ScenarioFamily::EXTERNAL)
    throw ConfigError("generate_base: external family is loaded, not generated");
  RandomStream rs(derive_seed(spec.seed, 1));
  const std::vector<Edge> edges = detail::pattern_edges(spec, rs);
  SymMatrix a(spec.d);
  for (const Edge& e : edges) {
    const double sign = rs.rademacher();
    const double mag = rs.uniform(0.5, 1.5);
    a.set(e.i, e.j, sign * mag);
  }
  return a;
}

// Non-negative diagonal shift d* with lambda_min(A + diag(d*)) >= -1e-10:
// approximate solution of the SDP "minimise sum(d) s.t. A + diag(d) PSD" by
// eigenvector subgradient steps, with the always-feasible uniform shift
// max(0, -lambda_min(A)) as fallback; the cheaper feasible vector wins.
// Feasibility is certified, minimality is not.
inline Eigen::VectorXd psd_shift(const SymMatrix& a) {
  const int d = a.dim();
  for (int i = 0; i < d; ++i)
    if (a(i, i) != 0.0)
      throw ConfigError("psd_shift: input must have a zero diagonal");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  const auto min_pair = [&](const Eigen::MatrixXd& m) {
    es.compute(m);
    if (es.info() != Eigen::Success)
      throw Error("psd_shift: eigensolver failed to converge");
    return std::make_pair(es.eigenvalues()(0), es.eigenvectors().col(0).eval());
  };

  const auto [lam0, v0] = min_pair(a.mat());
  if (lam0 >= -1e-10) return Eigen::VectorXd::Zero(d);

  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(d, -lam0);
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd work = a.mat();
  bool feasible = false;
  double lam = lam0;
  Eigen::VectorXd v = v0;
  for (int it = 0; it < 500; ++it) {
    if (lam >= -1e-10) {
      feasible = true;
      break;
    }
    const double denom = v.array().square().square().sum();
    if (!(denom > 0.0)) break;
    const Eigen::VectorXd delta = (-lam / denom) * v.array().square().matrix();
    shift += delta;
    work.diagonal() += delta;
    std::tie(lam, v) = min_pair(work);
  }
  if (feasible && shift.sum() < uniform.sum()) return shift;
  return uniform;
}

namespace detail {

// Shared tail of the synthetic and external pipelines: treat m as the raw
// precision, normalise its inverse to a correlation matrix Sigma, and scale m
// back so that theta = Sigma^{-1} exactly up to inversion error. Writing
// theta = D m D with D = diag(sqrt((m^{-1})_ii)) keeps m's zero pattern
// bit-exactly and pins diag(Sigma) to 1.
inline GroundTruth truth_from_precision(const SymMatrix& m,
                                        const std::optional<Support>& pattern,
                                        const char* what) {
  const int d = m.dim();
  const SymMatrix minv = invert_spd(m, what);
  Eigen::VectorXd sd(d);
  for (int i = 0; i < d; ++i) {
    if (!(minv(i, i) > 0.0))
      throw NotPositiveDefiniteError(std::string(what) +
                                     ": inverse has a non-positive diagonal");
    sd[i] = std::sqrt(minv(i, i));
  }
  GroundTruth truth;
  truth.sigma = SymMatrix(d);
  truth.theta = SymMatrix(d);
  for (int i = 0; i < d; ++i) {
    truth.sigma.set(i, i, 1.0);
    truth.theta.set(i, i, m(i, i) * sd[i] * sd[i]);
    for (int j = i + 1; j < d; ++j) {
      truth.sigma.set(i, j, minv(i, j) / (sd[i] * sd[j]));
      truth.theta.set(i, j, m(i, j) * sd[i] * sd[j]);
    }
  }
  truth.true_edges = Support(d);
  if (pattern) {
    for (const Edge& e : pattern->edges()) truth.true_edges.add(e.i, e.j);
  } else {
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        if (std::fabs(truth.theta(i, j)) > 1e-12) truth.true_edges.add(i, j);
  }
  return truth;
}

}  // namespace detail

// Ground truth of a synthetic scenario: B = A + diag(d*), M = B + eta I,
// Sigma = corr(M^{-1}), Theta = Sigma^{-1}; Theta inherits A's pattern.
inline GroundTruth build_truth(const ScenarioSpec& spec);

// External pipeline: the file's (optionally block-extracted) matrix is
// treated as the raw precision M and pushed through the same
// invert / correlation-normalise / re-invert tail. Edges are read off Theta
// under the 1e-12 threshold.
inline GroundTruth load_external(const std::string& path, int offset = 0,
                                 int size = -1) {
  const SymMatrix full = read_matrix_any(path);
  if (size < 0) size = full.dim() - offset;
  if (offset < 0 || size < 1 || offset + size > full.dim())
    throw ConfigError("load_external: block [" + std::to_string(offset) +
                      ", " + std::to_string(offset + size) +
                      ") does not fit in a " + std::to_string(full.dim()) +
                      "-dimensional matrix");
  const SymMatrix m(
      Eigen::MatrixXd(full.mat().block(offset, offset, size, size)));
  return detail::truth_from_precision(m, std::nullopt, "load_external");
}

inline GroundTruth build_truth(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.family == ScenarioFamily::EXTERNAL)
    return load_external(spec.external_path);
  const SymMatrix a = generate_base(spec);
  const Eigen::VectorXd dstar = psd_shift(a);
  Eigen::MatrixXd m = a.mat();
  m.diagonal() += dstar;
  m.diagonal().array() += spec.eta;
  Support pattern(spec.d);
  for (int i = 0; i < spec.d; ++i)
    for (int j = i + 1; j < spec.d; ++j)
      if (a(i, j) != 0.0) pattern.add(i, j);
  return detail::truth_from_precision(SymMatrix(m), pattern, "build_truth");
}

// n i.i.d. rows of N(0, Sigma): Cholesky factor of Sigma times standard
// normal vectors, one row at a time off a single stream.
inline Eigen::MatrixXd sample_gaussian(const GroundTruth& truth, int n,
                                       std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample_gaussian: n must be >= 1");
  const auto llt = cholesky_or_throw(truth.sigma, "sample_gaussian");
  const Eigen::MatrixXd l = llt.matrixL();
  const int d = truth.sigma.dim();
  RandomStream rs(seed);
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd z(d);
  for (int row = 0; row < n; ++row) {
    for (int c = 0; c < d; ++c) z[c] = rs.normal();
    x.row(row) = (l * z).transpose();
  }
  return x;
}

// Classical biased estimate (1/n) X^T X; PSD by construction.
inline SymMatrix sample_covariance(const Eigen::MatrixXd& data) {
  if (data.rows() < 1 || data.cols() < 1)
    throw DimensionError("sample_covariance: empty data");
  const Eigen::MatrixXd s =
      (data.transpose() * data) / static_cast<double>(data.rows());
  return SymMatrix(s);
}

// Ridge regularisation S = Sigma_hat + gamma^2 I with
// gamma^2 = rho * mean(diag); PD whenever the diagonal is not all zero.
inline SymMatrix apply_ridge(const SymMatrix& sigma_hat, double rho = 1e-6) {
  if (!(rho > 0.0)) throw ConfigError("apply_ridge: rho must be > 0");
  const double gamma2 = rho * sigma_hat.mat().diagonal().mean();
  if (!(gamma2 > 0.0))
    throw DegeneracyError(
        "apply_ridge: input diagonal is degenerate (all-zero estimate)");
  Eigen::MatrixXd s = sigma_hat.mat();
  s.diagonal().array() += gamma2;
  return SymMatrix(s);
}

// ---- Scenario / truth serialisation ---------------------------------------

inline void write_scenario_json(const std::filesystem::path& path,
                                const ScenarioSpec& spec) {
  nlohmann::json j;
  j["family"] = to_string(spec.family);
  j["d"] = spec.d;
  j["eta"] = spec.eta;
  j["n"] = spec.n;
  j["seed"] = spec.seed;
  if (spec.family == ScenarioFamily::RANDOM) j["m"] = spec.m;
  if (spec.family == ScenarioFamily::EXTERNAL)
    j["external_path"] = spec.external_path;
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
  detail::finish_write(out, path);
}

inline ScenarioSpec read_scenario_json(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
  ScenarioSpec spec;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "family")
        spec.family = parse_scenario_family(value.get<std::string>());
      else if (key == "d")
        spec.d = value.get<int>();
      else if (key == "m")
        spec.m = value.get<int>();
      else if (key == "eta")
        spec.eta = value.get<double>();
      else if (key == "n")
        spec.n = value.get<int>();
      else if (key == "seed")
        spec.seed = value.get<std::uint64_t>();
      else if (key == "external_path")
        spec.external_path = value.get<std::string>();
      else
        throw ConfigError("'" + path.string() + "': unknown scenario field '" +
                          key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
  spec.validate();
  return spec;
}

// True edge list as CSV: header i,j then one 0-based pair per row.
inline void write_edges_csv(const std::filesystem::path& path,
                            const Support& edges) {
  auto out = detail::open_out(path);
  out << "i,j\n";
  std::vector<Edge> sorted = edges.edges();
  std::sort(sorted.begin(), sorted.end());
  for (const Edge& e : sorted) out << e.i << ',' << e.j << '\n';
  detail::finish_write(out, path);
}

inline Support read_edges_csv(const std::filesystem::path& path, int d) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("i,j", 0) != 0)
    throw IoError("'" + path.string() + "': missing edges CSV header");
  Support sup(d);
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto toks = detail::split_csv_line(line);
    if (toks.size() != 2)
      throw IoError("'" + path.string() + "' line " + std::to_string(lineno) +
                    ": expected 2 columns");
    try {
      sup.add(static_cast<int>(parse_double(toks[0], "edges csv")),
              static_cast<int>(parse_double(toks[1], "edges csv")));
    } catch (const Error& e) {
      throw IoError("'" + path.string() + "' line " + std::to_string(lineno) +
                    ": " + e.what());
    }
  }
  return sup;
}

}  // namespace ggrow
