#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ggrow/descent.hpp"
#include "ggrow/matrix_io.hpp"
#include "ggrow/parallel.hpp"
#include "ggrow/prng.hpp"

namespace ggrow {

enum class GrowthMethod { GSL, BBI, BFCI, PREC, PCORR };

inline const char* to_string(GrowthMethod m) {
  switch (m) {
    case GrowthMethod::GSL:
      return "gsl";
    case GrowthMethod::BBI:
      return "bbi";
    case GrowthMethod::BFCI:
      return "bfci";
    case GrowthMethod::PREC:
      return "prec";
    case GrowthMethod::PCORR:
      return "pcorr";
  }
  return "?";
}

inline GrowthMethod parse_growth_method(const std::string& name) {
  if (name == "gsl") return GrowthMethod::GSL;
  if (name == "bbi") return GrowthMethod::BBI;
  if (name == "bfci") return GrowthMethod::BFCI;
  if (name == "prec") return GrowthMethod::PREC;
  if (name == "pcorr") return GrowthMethod::PCORR;
  throw ConfigError("unknown growth method '" + name +
                    "' (expected gsl, bbi, bfci, prec, or pcorr)");
}

inline bool is_naive(GrowthMethod m) {
  return m == GrowthMethod::PREC || m == GrowthMethod::PCORR;
}

// Growth selection rule; for BFCI an optional dedicated stopping config for
// the per-candidate correction descents (defaults to the outer one, matching
// "identical stopping rules for approximate full correction").
struct SelectionRule {
  SelectionKind kind = SelectionKind::GSL;
  std::optional<StoppingConfig> fci_stopping{};
};

struct GrowthStep {
  int k = 0;
  Edge edge{};
  double loss_after = std::numeric_limits<double>::quiet_NaN();
  long inner_iterations = 0;
  double selection_score = 0.0;
};

struct GrowthTrace {
  GrowthMethod method = GrowthMethod::GSL;
  int d = 0;
  int k_max = 0;          // steps actually reached
  std::uint64_t seed = 0; // consumed only by the naive tie-break
  std::vector<GrowthStep> steps;
};

// Raised when an inner failure aborts a growth; carries the steps completed
// so far.
class GrowthAbort : public Error {
 public:
  GrowthAbort(const std::string& msg, GrowthTrace partial)
      : Error(msg), partial_trace(std::move(partial)) {}

  GrowthTrace partial_trace;
};

struct GrowOptions {
  // Inner coordinate rule of the approximate full corrections (Algorithm 2);
  // GSL unless stated otherwise.
  SelectionKind correction_rule = SelectionKind::GSL;
  int jobs = 1;  // parallelism of the BFCI candidate scan
};

// Fully-corrective improvement score of a free edge: clone the pair, activate
// the edge on top of edge(Q), run the support-restricted descent to the given
// stopping rule, and report the realised loss decrease. Never mutates `pair`.
inline double score_fci(const SymMatrix& s, const SpdPair& pair, Edge e,
                        const StoppingConfig& cfg,
                        SelectionKind inner_rule = SelectionKind::GSL) {
  detail::require_same_dim(s, pair.q(), "score_fci");
  const int d = pair.dim();
  detail::check_index(e.i, d, "score_fci");
  detail::check_index(e.j, d, "score_fci");
  if (e.i >= e.j) throw DimensionError("score_fci: need i < j");
  if (pair.q()(e.i, e.j) != 0.0)
    throw SupportError("score_fci: edge is not in the free set");
  Support sup(d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (pair.q()(i, j) != 0.0) sup.add(i, j);
  sup.add(e.i, e.j);
  SpdPair clone = pair;
  return descend(s, clone, sup, inner_rule, cfg).total_improvement;
}

namespace detail {

inline int resolve_k_max(int k_max, int d, const char* what) {
  const long m_all = max_edges(d);
  if (k_max < 0) k_max = static_cast<int>(m_all);
  if (k_max < 1 || k_max > m_all)
    throw ConfigError(std::string(what) + ": k_max must lie in [1, " +
                      std::to_string(m_all) + "]");
  return k_max;
}

// One BFCI candidate: support-restricted correction on a cloned pair.
struct FciCandidate {
  Edge edge{};
  double score = 0.0;
  long iterations = 0;
  SpdPair pair;
};

}  // namespace detail

// Sequential graph growth (Algorithm 3; the BFCI variant realises
// Algorithm 1 with approximate full corrections). Starts from the optimal
// diagonal iterate; each step selects the best free edge under the rule,
// activates it, and applies an approximate full correction warm-started at
// the current iterate. Partial growth (k_max < M) is first-class.
inline GrowthTrace grow(const SymMatrix& s, const SelectionRule& rule,
                        const StoppingConfig& cfg, int k_max = -1,
                        const GrowOptions& opt = {}) {
  const int d = s.dim();
  k_max = detail::resolve_k_max(k_max, d, "grow");
  cfg.validate();
  if (rule.fci_stopping) rule.fci_stopping->validate();
  if (rule.kind == SelectionKind::GS)
    throw ConfigError("grow: GS is a descent rule; growth uses GSL, BBI, or BFCI");

  GrowthTrace trace;
  trace.method = rule.kind == SelectionKind::GSL   ? GrowthMethod::GSL
                 : rule.kind == SelectionKind::BBI ? GrowthMethod::BBI
                                                   : GrowthMethod::BFCI;
  trace.d = d;

  SpdPair pair = optimal_diagonal_init(s);
  Support sup(d);
  double f = gaussian_loss(s, pair);
  const StoppingConfig& fci_cfg = rule.fci_stopping ? *rule.fci_stopping : cfg;

  for (int k = 1; k <= k_max; ++k) {
    try {
      const std::vector<Edge> free = sup.free_edges();
      GrowthStep step;
      step.k = k;
      if (rule.kind == SelectionKind::BFCI) {
        // Score every free edge by its approximate full correction on a
        // clone, then adopt the winner's corrected clone as the next iterate.
        std::vector<std::optional<detail::FciCandidate>> cands(free.size());
        parallel_for(opt.jobs, static_cast<long>(free.size()), [&](long idx) {
          const Edge e = free[static_cast<std::size_t>(idx)];
          Support sub = sup;
          sub.add(e.i, e.j);
          detail::FciCandidate cand{e, 0.0, 0, pair};
          DescentOptions dopt;
          dopt.entry_loss = f;
          const DescentReport rep =
              descend(s, cand.pair, sub, opt.correction_rule, fci_cfg, dopt);
          cand.score = rep.total_improvement;
          cand.iterations = rep.iterations;
          cands[static_cast<std::size_t>(idx)] = std::move(cand);
        });
        // Deterministic reduction in lexicographic candidate order; strict
        // inequality keeps the lex-smallest edge on exact ties.
        std::size_t best = 0;
        for (std::size_t t = 1; t < cands.size(); ++t)
          if (cands[t]->score > cands[best]->score) best = t;
        detail::FciCandidate& win = *cands[best];
        step.edge = win.edge;
        step.selection_score = win.score;
        step.inner_iterations = win.iterations;
        sup.add(win.edge.i, win.edge.j);
        pair = std::move(win.pair);
        f -= win.score;
      } else {
        const auto scorer = [&](Edge e) {
          return rule.kind == SelectionKind::GSL ? score_gsl(s, pair, e)
                                                 : score_bbi(s, pair, e);
        };
        const ScoredCandidate best = argmax_over(free, scorer);
        step.edge = best.edge;
        step.selection_score = best.score;
        sup.add(best.edge.i, best.edge.j);
        DescentOptions dopt;
        dopt.entry_loss = f;
        const DescentReport rep =
            descend(s, pair, sup, opt.correction_rule, cfg, dopt);
        step.inner_iterations = rep.iterations;
        f -= rep.total_improvement;
      }
      step.loss_after = f;
      trace.steps.push_back(step);
      trace.k_max = k;
    } catch (const Error& e) {
      throw GrowthAbort(std::string("grow: aborted at step ") +
                            std::to_string(k) + ": " + e.what(),
                        trace);
    }
  }
  return trace;
}

// Naive orderings of Remark 4: rank the free edges once by precision
// magnitude |Omega_ij| (PREC) or partial-correlation magnitude
// |Omega_ij| / sqrt(Omega_ii Omega_jj) (PCORR), Omega = S^{-1}; ties are
// broken by seeded random keys. Loss trajectories are off by default (these
// are orderings, not descents); when requested they come from sequential
// warm-started prefix corrections so traces stay comparable with grow().
inline GrowthTrace grow_naive(const SymMatrix& s, GrowthMethod method,
                              int k_max, std::uint64_t seed,
                              bool with_losses = false,
                              const StoppingConfig& cfg = {},
                              SelectionKind correction_rule = SelectionKind::GSL) {
  if (!is_naive(method))
    throw ConfigError("grow_naive: method must be prec or pcorr");
  const int d = s.dim();
  k_max = detail::resolve_k_max(k_max, d, "grow_naive");
  const SymMatrix omega = invert_spd(s, "grow_naive");

  struct Ranked {
    Edge e;
    double score;
    std::uint64_t key;
  };
  RandomStream rs(seed);
  std::vector<Ranked> ranked;
  ranked.reserve(static_cast<std::size_t>(max_edges(d)));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double mag = std::fabs(omega(i, j));
      const double score = method == GrowthMethod::PREC
                               ? mag
                               : mag / std::sqrt(omega(i, i) * omega(j, j));
      ranked.push_back({{i, j}, score, rs.next_u64()});
    }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.key != b.key) return a.key < b.key;
    return a.e < b.e;
  });

  GrowthTrace trace;
  trace.method = method;
  trace.d = d;
  trace.k_max = k_max;
  trace.seed = seed;
  trace.steps.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    GrowthStep step;
    step.k = k;
    step.edge = ranked[static_cast<std::size_t>(k - 1)].e;
    step.selection_score = ranked[static_cast<std::size_t>(k - 1)].score;
    trace.steps.push_back(step);
  }

  if (with_losses) {
    cfg.validate();
    SpdPair pair = optimal_diagonal_init(s);
    Support sup(d);
    double f = gaussian_loss(s, pair);
    for (auto& step : trace.steps) {
      try {
        sup.add(step.edge.i, step.edge.j);
        DescentOptions dopt;
        dopt.entry_loss = f;
        const DescentReport rep =
            descend(s, pair, sup, correction_rule, cfg, dopt);
        step.inner_iterations = rep.iterations;
        f -= rep.total_improvement;
        step.loss_after = f;
      } catch (const Error& e) {
        GrowthTrace partial = trace;
        partial.k_max = step.k - 1;
        partial.steps.resize(static_cast<std::size_t>(step.k - 1));
        throw GrowthAbort(std::string("grow_naive: aborted at step ") +
                              std::to_string(step.k) + ": " + e.what(),
                          partial);
      }
    }
  }
  return trace;
}

// Edge -> activation rank; edges never activated map to the censored marker
// k_max + 1.
inline std::map<Edge, int> activation_ranks(const GrowthTrace& trace) {
  std::map<Edge, int> out;
  for (int i = 0; i < trace.d; ++i)
    for (int j = i + 1; j < trace.d; ++j) out[{i, j}] = trace.k_max + 1;
  for (const auto& step : trace.steps) out[step.edge] = step.k;
  return out;
}

// ---- Trace serialisation -------------------------------------------------
// JSON lines: one record per step, {"k","i","j","loss","inner_iters","score"};
// CSV carries the same columns plus a header row. Missing losses (naive
// orderings without --with-losses) are null / nan. Field names are a stable
// contract; indices are 0-based.

inline void write_trace_jsonl(const std::filesystem::path& path,
                              const GrowthTrace& trace) {
  auto out = detail::open_out(path);
  for (const auto& st : trace.steps) {
    out << "{\"k\":" << st.k << ",\"i\":" << st.edge.i << ",\"j\":" << st.edge.j
        << ",\"loss\":"
        << (std::isnan(st.loss_after) ? std::string("null")
                                      : format_g17(st.loss_after))
        << ",\"inner_iters\":" << st.inner_iterations
        << ",\"score\":" << format_g17(st.selection_score) << "}\n";
  }
  detail::finish_write(out, path);
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const GrowthTrace& trace) {
  auto out = detail::open_out(path);
  out << "k,i,j,loss,inner_iters,score\n";
  for (const auto& st : trace.steps)
    out << st.k << ',' << st.edge.i << ',' << st.edge.j << ','
        << format_g17(st.loss_after) << ',' << st.inner_iterations << ','
        << format_g17(st.selection_score) << '\n';
  detail::finish_write(out, path);
}

namespace detail {

inline void validate_steps(std::vector<GrowthStep>& steps,
                           const std::filesystem::path& path) {
  for (std::size_t t = 0; t < steps.size(); ++t)
    if (steps[t].k != static_cast<int>(t) + 1)
      throw IoError("'" + path.string() + "': step records must have k = 1.." +
                    std::to_string(steps.size()) + " in order");
}

}  // namespace detail

// Reads step records; method/d/seed are context the caller supplies (the
// line format deliberately carries steps only).
inline std::vector<GrowthStep> read_trace_jsonl(
    const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<GrowthStep> steps;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("'" + path.string() + "' line " + std::to_string(lineno) +
                    ": " + e.what());
    }
    if (!j.is_object() || !j.contains("k") || !j.contains("i") ||
        !j.contains("j") || !j.contains("loss") ||
        !j.contains("inner_iters") || !j.contains("score"))
      throw IoError("'" + path.string() + "' line " + std::to_string(lineno) +
                    ": missing trace fields");
    GrowthStep st;
    st.k = j["k"].get<int>();
    st.edge.i = j["i"].get<int>();
    st.edge.j = j["j"].get<int>();
    st.loss_after = j["loss"].is_null()
                        ? std::numeric_limits<double>::quiet_NaN()
                        : j["loss"].get<double>();
    st.inner_iterations = j["inner_iters"].get<long>();
    st.selection_score = j["score"].get<double>();
    steps.push_back(st);
  }
  detail::validate_steps(steps, path);
  return steps;
}

inline std::vector<GrowthStep> read_trace_csv(
    const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("k,i,j,loss,inner_iters,score", 0) != 0)
    throw IoError("'" + path.string() + "': missing trace CSV header");
  std::vector<GrowthStep> steps;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto toks = detail::split_csv_line(line);
    if (toks.size() != 6)
      throw IoError("'" + path.string() + "' line " + std::to_string(lineno) +
                    ": expected 6 columns");
    const char* where = "trace csv";
    GrowthStep st;
    st.k = static_cast<int>(parse_double(toks[0], where));
    st.edge.i = static_cast<int>(parse_double(toks[1], where));
    st.edge.j = static_cast<int>(parse_double(toks[2], where));
    st.loss_after = parse_double(toks[3], where);
    st.inner_iterations = static_cast<long>(parse_double(toks[4], where));
    st.selection_score = parse_double(toks[5], where);
    steps.push_back(st);
  }
  detail::validate_steps(steps, path);
  return steps;
}

inline GrowthTrace assemble_trace(GrowthMethod method, int d,
                                  std::vector<GrowthStep> steps,
                                  std::uint64_t seed = 0) {
  GrowthTrace t;
  t.method = method;
  t.d = d;
  t.seed = seed;
  t.k_max = static_cast<int>(steps.size());
  t.steps = std::move(steps);
  for (const auto& st : t.steps)
    if (st.edge.i < 0 || st.edge.j >= d || st.edge.i >= st.edge.j)
      throw IoError("assemble_trace: edge (" + std::to_string(st.edge.i) +
                    "," + std::to_string(st.edge.j) +
                    ") is not an upper-diagonal pair for d = " +
                    std::to_string(d));
  return t;
}

}  // namespace ggrow
