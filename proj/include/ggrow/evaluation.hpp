#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ggrow/growth.hpp"
#include "ggrow/synthetic.hpp"

namespace ggrow {

// Confusion counts and rates after the first k activations.
struct ConfusionRow {
  int k = 0;
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0, recall = 0.0, fpr = 0.0;
};

struct RecoveryReport {
  std::string method;
  std::string scenario;
  int d = 0;
  long m_true = 0;
  std::vector<ConfusionRow> per_k;
  double auc_roc = 0.0;
};

namespace detail {

// Trapezoid area under (fpr, recall) with pinned endpoints (0,0) and (1,1).
inline double auc_trapezoid(const std::vector<ConfusionRow>& rows) {
  double area = 0.0, x0 = 0.0, y0 = 0.0;
  for (const auto& r : rows) {
    area += (r.fpr - x0) * (r.recall + y0) * 0.5;
    x0 = r.fpr;
    y0 = r.recall;
  }
  area += (1.0 - x0) * (1.0 + y0) * 0.5;
  return area;
}

}  // namespace detail

// Per-prefix confusion counts of a trace against the true edge set, plus the
// ROC area. Rates at the degenerate margins are pinned: recall = 1 when there
// are no true edges, fpr = 0 when there are no false ones.
inline RecoveryReport score_recovery(const GrowthTrace& trace,
                                     const Support& true_edges,
                                     std::string scenario = "") {
  if (trace.d != true_edges.dim())
    throw DimensionError("score_recovery: trace dimension " +
                         std::to_string(trace.d) + " != truth dimension " +
                         std::to_string(true_edges.dim()));
  const long m_all = max_edges(trace.d);
  RecoveryReport rep;
  rep.method = to_string(trace.method);
  rep.scenario = std::move(scenario);
  rep.d = trace.d;
  rep.m_true = true_edges.edge_count();
  rep.per_k.reserve(trace.steps.size());

  std::set<Edge> seen;
  long tp = 0, fp = 0;
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const GrowthStep& st = trace.steps[t];
    if (st.k != static_cast<int>(t) + 1)
      throw ConfigError("score_recovery: trace steps out of order");
    if (!seen.insert(st.edge).second)
      throw ConfigError("score_recovery: duplicate edge in trace");
    if (true_edges.contains(st.edge.i, st.edge.j))
      ++tp;
    else
      ++fp;
    ConfusionRow row;
    row.k = st.k;
    row.tp = tp;
    row.fp = fp;
    row.fn = rep.m_true - tp;
    row.tn = m_all - rep.m_true - fp;
    row.precision = static_cast<double>(tp) / static_cast<double>(st.k);
    row.recall = rep.m_true > 0
                     ? static_cast<double>(tp) / static_cast<double>(rep.m_true)
                     : 1.0;
    row.fpr = m_all - rep.m_true > 0
                  ? static_cast<double>(fp) /
                        static_cast<double>(m_all - rep.m_true)
                  : 0.0;
    rep.per_k.push_back(row);
  }
  rep.auc_roc = detail::auc_trapezoid(rep.per_k);
  return rep;
}

inline RecoveryReport score_recovery(const GrowthTrace& trace,
                                     const GroundTruth& truth,
                                     std::string scenario = "") {
  return score_recovery(trace, truth.true_edges, std::move(scenario));
}

// Percentile with linear interpolation between order statistics at
// h = (n - 1) p (the numpy "linear" convention; documented in the README).
inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ConfigError("percentile: empty sample");
  if (!(p >= 0.0 && p <= 1.0))
    throw ConfigError("percentile: p must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

// Pointwise median and interdecile band over repetitions.
struct CurveSummary {
  long n_reports = 0;
  std::vector<int> ks;
  std::vector<double> precision_med, precision_p10, precision_p90;
  std::vector<double> recall_med, recall_p10, recall_p90;
  std::vector<double> fpr_med, fpr_p10, fpr_p90;
  double auc_med = 0.0, auc_p10 = 0.0, auc_p90 = 0.0;
};

inline CurveSummary aggregate(const std::vector<RecoveryReport>& reports) {
  if (reports.empty()) throw ConfigError("aggregate: no reports");
  const auto& first = reports.front();
  for (const auto& r : reports) {
    if (r.d != first.d) throw DimensionError("aggregate: mixed dimensions");
    if (r.per_k.size() != first.per_k.size())
      throw ConfigError("aggregate: reports cover different k ranges");
    for (std::size_t t = 0; t < r.per_k.size(); ++t)
      if (r.per_k[t].k != first.per_k[t].k)
        throw ConfigError("aggregate: reports cover different k ranges");
  }
  CurveSummary sum;
  sum.n_reports = static_cast<long>(reports.size());
  const std::size_t n_k = first.per_k.size();
  std::vector<double> buf(reports.size());
  const auto fill = [&](const std::function<double(const ConfusionRow&)>& get,
                        std::size_t t, std::vector<double>& med,
                        std::vector<double>& p10, std::vector<double>& p90) {
    for (std::size_t r = 0; r < reports.size(); ++r)
      buf[r] = get(reports[r].per_k[t]);
    med.push_back(percentile(buf, 0.5));
    p10.push_back(percentile(buf, 0.1));
    p90.push_back(percentile(buf, 0.9));
  };
  for (std::size_t t = 0; t < n_k; ++t) {
    sum.ks.push_back(first.per_k[t].k);
    fill([](const ConfusionRow& r) { return r.precision; }, t,
         sum.precision_med, sum.precision_p10, sum.precision_p90);
    fill([](const ConfusionRow& r) { return r.recall; }, t, sum.recall_med,
         sum.recall_p10, sum.recall_p90);
    fill([](const ConfusionRow& r) { return r.fpr; }, t, sum.fpr_med,
         sum.fpr_p10, sum.fpr_p90);
  }
  for (std::size_t r = 0; r < reports.size(); ++r)
    buf[r] = reports[r].auc_roc;
  sum.auc_med = percentile(buf, 0.5);
  sum.auc_p10 = percentile(buf, 0.1);
  sum.auc_p90 = percentile(buf, 0.9);
  return sum;
}

// Fraction of traces whose first-k prefix contains each edge; one row per
// edge of U in lexicographic order, with the truth flag attached so true
// edges and false positives can be reported separately.
struct DetectionRow {
  Edge edge{};
  double frequency = 0.0;
  bool is_true = false;
};

inline std::vector<DetectionRow> detection_frequency(
    const std::vector<GrowthTrace>& traces, const Support& true_edges, int k) {
  if (traces.empty()) throw ConfigError("detection_frequency: no traces");
  if (k < 1) throw ConfigError("detection_frequency: k must be >= 1");
  const int d = true_edges.dim();
  for (const auto& t : traces) {
    if (t.d != d)
      throw DimensionError("detection_frequency: trace dimension mismatch");
    if (static_cast<int>(t.steps.size()) < k)
      throw ConfigError("detection_frequency: a trace has fewer than k = " +
                        std::to_string(k) + " steps");
  }
  std::map<Edge, long> counts;
  for (const auto& t : traces)
    for (int s = 0; s < k; ++s) ++counts[t.steps[static_cast<std::size_t>(s)].edge];
  std::vector<DetectionRow> rows;
  rows.reserve(static_cast<std::size_t>(max_edges(d)));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      DetectionRow row;
      row.edge = {i, j};
      const auto it = counts.find(row.edge);
      row.frequency = it == counts.end()
                          ? 0.0
                          : static_cast<double>(it->second) /
                                static_cast<double>(traces.size());
      row.is_true = true_edges.contains(i, j);
      rows.push_back(row);
    }
  return rows;
}

// Activation-rank distribution over subsample repetitions.
struct RankSummary {
  Edge edge{};
  long n = 0;           // completed repetitions
  long n_censored = 0;  // ranks at the censored marker k_max + 1
  double p10 = 0.0, p25 = 0.0, median = 0.0, p75 = 0.0, p90 = 0.0;
};

struct RankDistribution {
  int d = 0;
  int k_max = 0;
  long n_requested = 0;
  long n_completed = 0;
  long n_skipped = 0;                   // degenerate subsamples
  std::vector<Edge> edges;              // lexicographic over U
  std::vector<std::vector<int>> ranks;  // [edge][repetition], censored = k_max+1
  std::vector<RankSummary> by_median;   // sorted by (median, edge)
};

// Subsampling stability selection: draw n_sub subsamples of sub_size rows
// without replacement, build S per subsample (s_builder, typically ridge of
// the sample covariance), run the growth, and collect activation ranks.
// Degenerate subsamples (builder or growth hits a numerical degeneracy, e.g.
// a zero-variance column) are skipped and counted. The subsampling stream is
// independent of data-generation streams: repetition r uses
// derive_seed(seed, r).
template <typename SBuilder>
RankDistribution stability_ranks(SBuilder&& s_builder,
                                 const Eigen::MatrixXd& data, long n_sub,
                                 long sub_size, const SelectionRule& rule,
                                 const StoppingConfig& cfg, int k_max,
                                 std::uint64_t seed, int jobs = 1) {
  const long n = data.rows();
  const int d = static_cast<int>(data.cols());
  if (n < 1 || d < 2) throw DimensionError("stability_ranks: need n >= 1, d >= 2");
  if (n_sub < 1) throw ConfigError("stability_ranks: n_sub must be >= 1");
  if (sub_size < 1 || sub_size > n)
    throw ConfigError("stability_ranks: sub_size must lie in [1, n]");
  k_max = detail::resolve_k_max(k_max, d, "stability_ranks");

  RankDistribution dist;
  dist.d = d;
  dist.k_max = k_max;
  dist.n_requested = n_sub;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) dist.edges.push_back({i, j});

  // Per-repetition outcome slots keep the result deterministic under jobs>1.
  std::vector<std::optional<std::map<Edge, int>>> outcome(
      static_cast<std::size_t>(n_sub));
  parallel_for(jobs, n_sub, [&](long rep) {
    RandomStream rs(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    std::vector<long> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0L);
    for (long t = 0; t < sub_size; ++t) {
      const long pick = t + static_cast<long>(rs.uniform_below(
                                static_cast<std::uint64_t>(n - t)));
      std::swap(idx[static_cast<std::size_t>(t)],
                idx[static_cast<std::size_t>(pick)]);
    }
    idx.resize(static_cast<std::size_t>(sub_size));
    std::sort(idx.begin(), idx.end());
    Eigen::MatrixXd sub(sub_size, d);
    for (long r = 0; r < sub_size; ++r)
      sub.row(r) = data.row(idx[static_cast<std::size_t>(r)]);
    try {
      const SymMatrix s = s_builder(sub);
      const GrowthTrace trace = grow(s, rule, cfg, k_max);
      outcome[static_cast<std::size_t>(rep)] = activation_ranks(trace);
    } catch (const DegeneracyError&) {
      // flagged and skipped below
    } catch (const NotPositiveDefiniteError&) {
    } catch (const GrowthAbort&) {
    }
  });

  dist.ranks.assign(dist.edges.size(), {});
  for (long rep = 0; rep < n_sub; ++rep) {
    const auto& res = outcome[static_cast<std::size_t>(rep)];
    if (!res) {
      ++dist.n_skipped;
      continue;
    }
    ++dist.n_completed;
    for (std::size_t e = 0; e < dist.edges.size(); ++e)
      dist.ranks[e].push_back(res->at(dist.edges[e]));
  }
  if (dist.n_completed == 0)
    throw DegeneracyError("stability_ranks: every subsample was degenerate");

  for (std::size_t e = 0; e < dist.edges.size(); ++e) {
    std::vector<double> vals(dist.ranks[e].begin(), dist.ranks[e].end());
    RankSummary rsum;
    rsum.edge = dist.edges[e];
    rsum.n = static_cast<long>(vals.size());
    rsum.n_censored = static_cast<long>(
        std::count(dist.ranks[e].begin(), dist.ranks[e].end(), k_max + 1));
    rsum.p10 = percentile(vals, 0.1);
    rsum.p25 = percentile(vals, 0.25);
    rsum.median = percentile(vals, 0.5);
    rsum.p75 = percentile(vals, 0.75);
    rsum.p90 = percentile(vals, 0.9);
    dist.by_median.push_back(rsum);
  }
  std::sort(dist.by_median.begin(), dist.by_median.end(),
            [](const RankSummary& a, const RankSummary& b) {
              if (a.median != b.median) return a.median < b.median;
              return a.edge < b.edge;
            });
  return dist;
}

// ---- Serialisation ---------------------------------------------------------
// CSV: one row per k (recovery/aggregate) or per edge (ranks, detection).
// JSON mirrors the CSV content under a versioned schema tag.

inline void write_recovery_csv(const std::filesystem::path& path,
                               const RecoveryReport& rep) {
  auto out = detail::open_out(path);
  out << "k,tp,fp,fn,tn,precision,recall,fpr\n";
  for (const auto& r : rep.per_k)
    out << r.k << ',' << r.tp << ',' << r.fp << ',' << r.fn << ',' << r.tn
        << ',' << format_g17(r.precision) << ',' << format_g17(r.recall) << ','
        << format_g17(r.fpr) << '\n';
  detail::finish_write(out, path);
}

inline void write_recovery_json(const std::filesystem::path& path,
                                const RecoveryReport& rep) {
  nlohmann::json j;
  j["schema"] = "ggrow-recovery-v1";
  j["method"] = rep.method;
  j["scenario"] = rep.scenario;
  j["d"] = rep.d;
  j["m_true"] = rep.m_true;
  j["auc_roc"] = rep.auc_roc;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.per_k)
    rows.push_back({{"k", r.k},
                    {"tp", r.tp},
                    {"fp", r.fp},
                    {"fn", r.fn},
                    {"tn", r.tn},
                    {"precision", r.precision},
                    {"recall", r.recall},
                    {"fpr", r.fpr}});
  j["per_k"] = std::move(rows);
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
  detail::finish_write(out, path);
}

inline void write_aggregate_csv(const std::filesystem::path& path,
                                const CurveSummary& sum) {
  auto out = detail::open_out(path);
  out << "k,precision_med,precision_p10,precision_p90,recall_med,recall_p10,"
         "recall_p90,fpr_med,fpr_p10,fpr_p90\n";
  for (std::size_t t = 0; t < sum.ks.size(); ++t)
    out << sum.ks[t] << ',' << format_g17(sum.precision_med[t]) << ','
        << format_g17(sum.precision_p10[t]) << ','
        << format_g17(sum.precision_p90[t]) << ','
        << format_g17(sum.recall_med[t]) << ',' << format_g17(sum.recall_p10[t])
        << ',' << format_g17(sum.recall_p90[t]) << ','
        << format_g17(sum.fpr_med[t]) << ',' << format_g17(sum.fpr_p10[t])
        << ',' << format_g17(sum.fpr_p90[t]) << '\n';
  detail::finish_write(out, path);
}

inline void write_aggregate_json(const std::filesystem::path& path,
                                 const CurveSummary& sum) {
  nlohmann::json j;
  j["schema"] = "ggrow-aggregate-v1";
  j["n_reports"] = sum.n_reports;
  j["auc_med"] = sum.auc_med;
  j["auc_p10"] = sum.auc_p10;
  j["auc_p90"] = sum.auc_p90;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < sum.ks.size(); ++t)
    rows.push_back({{"k", sum.ks[t]},
                    {"precision_med", sum.precision_med[t]},
                    {"precision_p10", sum.precision_p10[t]},
                    {"precision_p90", sum.precision_p90[t]},
                    {"recall_med", sum.recall_med[t]},
                    {"recall_p10", sum.recall_p10[t]},
                    {"recall_p90", sum.recall_p90[t]},
                    {"fpr_med", sum.fpr_med[t]},
                    {"fpr_p10", sum.fpr_p10[t]},
                    {"fpr_p90", sum.fpr_p90[t]}});
  j["per_k"] = std::move(rows);
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
  detail::finish_write(out, path);
}

inline void write_detection_csv(const std::filesystem::path& path,
                                const std::vector<DetectionRow>& rows) {
  auto out = detail::open_out(path);
  out << "i,j,frequency,is_true\n";
  for (const auto& r : rows)
    out << r.edge.i << ',' << r.edge.j << ',' << format_g17(r.frequency) << ','
        << (r.is_true ? 1 : 0) << '\n';
  detail::finish_write(out, path);
}

namespace detail {

inline void write_rank_rows(std::ofstream& out,
                            const std::vector<RankSummary>& rows) {
  out << "i,j,n,n_censored,p10,p25,median,p75,p90\n";
  for (const auto& r : rows)
    out << r.edge.i << ',' << r.edge.j << ',' << r.n << ',' << r.n_censored
        << ',' << format_g17(r.p10) << ',' << format_g17(r.p25) << ','
        << format_g17(r.median) << ',' << format_g17(r.p75) << ','
        << format_g17(r.p90) << '\n';
}

}  // namespace detail

// Lexicographic per-edge summary.
inline void write_ranks_csv(const std::filesystem::path& path,
                            const RankDistribution& dist) {
  auto out = detail::open_out(path);
  std::vector<RankSummary> rows = dist.by_median;
  std::sort(rows.begin(), rows.end(),
            [](const RankSummary& a, const RankSummary& b) {
              return a.edge < b.edge;
            });
  detail::write_rank_rows(out, rows);
  detail::finish_write(out, path);
}

// Median-ordered edge list (rank ties lexicographic).
inline void write_ranks_ordered_csv(const std::filesystem::path& path,
                                    const RankDistribution& dist) {
  auto out = detail::open_out(path);
  detail::write_rank_rows(out, dist.by_median);
  detail::finish_write(out, path);
}

inline void write_ranks_json(const std::filesystem::path& path,
                             const RankDistribution& dist) {
  nlohmann::json j;
  j["schema"] = "ggrow-ranks-v1";
  j["d"] = dist.d;
  j["k_max"] = dist.k_max;
  j["censored_rank"] = dist.k_max + 1;
  j["n_requested"] = dist.n_requested;
  j["n_completed"] = dist.n_completed;
  j["n_skipped"] = dist.n_skipped;
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t e = 0; e < dist.edges.size(); ++e)
    edges.push_back({{"i", dist.edges[e].i},
                     {"j", dist.edges[e].j},
                     {"ranks", dist.ranks[e]}});
  j["per_edge"] = std::move(edges);
  nlohmann::json ordered = nlohmann::json::array();
  for (const auto& r : dist.by_median)
    ordered.push_back({{"i", r.edge.i},
                       {"j", r.edge.j},
                       {"n", r.n},
                       {"n_censored", r.n_censored},
                       {"p10", r.p10},
                       {"p25", r.p25},
                       {"median", r.median},
                       {"p75", r.p75},
                       {"p90", r.p90}});
  j["by_median"] = std::move(ordered);
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
  detail::finish_write(out, path);
}

}  // namespace ggrow
