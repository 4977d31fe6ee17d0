#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ggrow/evaluation.hpp"
#include "ggrow/version.hpp"

// Command layer: the CLI subcommands as plain functions over validated config
// structs, so tests and the acceptance runner can drive them in-process.
// Every command writes a manifest.json (command, resolved config, seeds,
// library version, PRNG name) next to its outputs. Errors surface as the
// library's exception types; the binary maps them to exit codes.

namespace ggrow {

namespace detail {

inline std::string rep_trace_name(long rep) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trace_rep%03ld.jsonl", rep);
  return buf;
}

inline nlohmann::json to_json(const StoppingConfig& cfg) {
  return {{"alpha", cfg.alpha},
          {"beta", cfg.beta},
          {"tau", cfg.tau},
          {"hard_cap", cfg.hard_cap}};
}

inline void write_manifest(const std::filesystem::path& dir,
                           const std::string& command,
                           nlohmann::json config,
                           nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json j;
  j["schema"] = "ggrow-manifest-v1";
  j["library_version"] = kLibraryVersion;
  j["prng"] = kPrngName;
  j["command"] = command;
  j["config"] = std::move(config);
  for (auto& [key, value] : extra.items()) j[key] = std::move(value);
  auto out = open_out(dir / "manifest.json");
  out << j.dump(2) << '\n';
  finish_write(out, dir / "manifest.json");
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create directory '" + dir.string() +
                  "': " + ec.message());
}

inline void require_out(const std::filesystem::path& out, const char* what) {
  if (out.empty())
    throw ConfigError(std::string(what) + ": output directory is required");
}

}  // namespace detail

// Truth files of a scenario: covariance, precision, edge list, resolved spec.
inline void write_truth_files(const std::filesystem::path& dir,
                              const GroundTruth& truth,
                              const ScenarioSpec& spec) {
  detail::ensure_dir(dir);
  write_matrix_csv(dir / "sigma.csv", truth.sigma);
  write_matrix_csv(dir / "theta.csv", truth.theta);
  write_edges_csv(dir / "edges.csv", truth.true_edges);
  write_scenario_json(dir / "spec.json", spec);
}

// ---- generate --------------------------------------------------------------

struct GenerateConfig {
  ScenarioSpec scenario;
  int external_offset = 0;   // EXTERNAL family: block start
  int external_size = -1;    // EXTERNAL family: block size (-1 = rest)
  std::filesystem::path out;
};

// Builds the scenario's ground truth and writes sigma.csv, theta.csv,
// edges.csv, spec.json, and (when n >= 1) data.csv sampled from
// derive_seed(seed, 2); stream 1 belongs to the structure draw.
inline void cmd_generate(const GenerateConfig& cfg) {
  detail::require_out(cfg.out, "generate");
  ScenarioSpec spec = cfg.scenario;
  spec.validate();
  GroundTruth truth;
  if (spec.family == ScenarioFamily::EXTERNAL) {
    truth = load_external(spec.external_path, cfg.external_offset,
                          cfg.external_size);
    spec.d = truth.sigma.dim();  // resolved for the echo
  } else {
    truth = build_truth(spec);
  }
  detail::ensure_dir(cfg.out);

  nlohmann::json echo = {{"family", to_string(spec.family)},
                         {"d", spec.d},
                         {"eta", spec.eta},
                         {"n", spec.n},
                         {"seed", spec.seed},
                         {"out", cfg.out.string()}};
  if (spec.family == ScenarioFamily::RANDOM) echo["m"] = spec.m;
  if (spec.family == ScenarioFamily::EXTERNAL) {
    echo["external_path"] = spec.external_path;
    echo["external_offset"] = cfg.external_offset;
    echo["external_size"] = cfg.external_size;
  }
  detail::write_manifest(cfg.out, "generate", echo,
                         {{"data_seed", derive_seed(spec.seed, 2)}});

  write_truth_files(cfg.out, truth, spec);
  if (spec.n >= 1) {
    const Eigen::MatrixXd x =
        sample_gaussian(truth, spec.n, derive_seed(spec.seed, 2));
    write_data_csv(cfg.out / "data.csv", x);
  }
}

// ---- grow ------------------------------------------------------------------

struct GrowConfig {
  std::filesystem::path input;   // data CSV (rows x d), exclusive with matrix
  std::filesystem::path matrix;  // square matrix file (CSV or JSON)
  bool no_ridge = false;
  double rho = 1e-6;
  std::vector<GrowthMethod> methods{GrowthMethod::GSL};
  int k_max = -1;
  StoppingConfig stopping{};
  SelectionKind correction_rule = SelectionKind::GSL;
  bool with_losses = false;  // loss trajectories for naive orderings
  std::uint64_t seed = 0;    // naive tie-breaking
  int jobs = 1;
  std::filesystem::path out;
};

namespace detail {

// Naive tie-break stream: one fixed substream per method so the listing order
// of --methods never changes a trace.
inline std::uint64_t naive_seed(std::uint64_t seed, GrowthMethod m) {
  return derive_seed(seed, 100 + static_cast<std::uint64_t>(m));
}

inline SymMatrix load_input_matrix(const std::filesystem::path& input,
                                   const std::filesystem::path& matrix,
                                   bool no_ridge, double rho,
                                   const char* what) {
  if (input.empty() == matrix.empty())
    throw ConfigError(std::string(what) +
                      ": exactly one of the data input and the matrix input "
                      "must be given");
  SymMatrix s = matrix.empty()
                    ? sample_covariance(read_data_csv(input))
                    : read_matrix_any(matrix);
  if (!no_ridge) s = apply_ridge(s, rho);
  return s;
}

}  // namespace detail

// Runs each requested method on one shared matrix S (sample covariance of
// --input, or --matrix directly; ridge-regularised unless --no-ridge) and
// writes <out>/<method>/trace.jsonl + trace.csv. A growth abort still writes
// the partial trace before propagating.
inline void cmd_grow(const GrowConfig& cfg) {
  detail::require_out(cfg.out, "grow");
  if (cfg.methods.empty()) throw ConfigError("grow: no methods requested");
  {
    std::set<GrowthMethod> uniq(cfg.methods.begin(), cfg.methods.end());
    if (uniq.size() != cfg.methods.size())
      throw ConfigError("grow: duplicate method in --methods");
  }
  cfg.stopping.validate();
  const SymMatrix s = detail::load_input_matrix(cfg.input, cfg.matrix,
                                                cfg.no_ridge, cfg.rho, "grow");
  detail::ensure_dir(cfg.out);

  nlohmann::json methods_echo = nlohmann::json::array();
  for (const auto m : cfg.methods) methods_echo.push_back(to_string(m));
  detail::write_manifest(
      cfg.out, "grow",
      {{"input", cfg.input.string()},
       {"matrix", cfg.matrix.string()},
       {"no_ridge", cfg.no_ridge},
       {"rho", cfg.rho},
       {"methods", methods_echo},
       {"k_max", cfg.k_max},
       {"stopping", detail::to_json(cfg.stopping)},
       {"correction_rule", to_string(cfg.correction_rule)},
       {"with_losses", cfg.with_losses},
       {"seed", cfg.seed},
       {"jobs", cfg.jobs},
       {"out", cfg.out.string()}},
      {{"d", s.dim()}});

  const auto write_both = [&](const std::filesystem::path& dir,
                              const GrowthTrace& trace) {
    detail::ensure_dir(dir);
    write_trace_jsonl(dir / "trace.jsonl", trace);
    write_trace_csv(dir / "trace.csv", trace);
  };

  for (const GrowthMethod method : cfg.methods) {
    const std::filesystem::path mdir = cfg.out / to_string(method);
    try {
      GrowthTrace trace;
      if (is_naive(method)) {
        trace = grow_naive(s, method, cfg.k_max,
                           detail::naive_seed(cfg.seed, method),
                           cfg.with_losses, cfg.stopping, cfg.correction_rule);
      } else {
        SelectionRule rule;
        rule.kind = method == GrowthMethod::GSL   ? SelectionKind::GSL
                    : method == GrowthMethod::BBI ? SelectionKind::BBI
                                                  : SelectionKind::BFCI;
        GrowOptions opt;
        opt.correction_rule = cfg.correction_rule;
        opt.jobs = cfg.jobs;
        trace = grow(s, rule, cfg.stopping, cfg.k_max, opt);
      }
      write_both(mdir, trace);
    } catch (const GrowthAbort& abort) {
      write_both(mdir, abort.partial_trace);
      throw;
    }
  }
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateConfig {
  std::vector<std::filesystem::path> traces;  // .jsonl or .csv
  std::filesystem::path truth_edges;          // edges.csv of the truth
  int d = 0;
  int detect_k = 0;  // > 0: also write detection frequencies at this k
  std::filesystem::path out;
};

namespace detail {

inline std::vector<GrowthStep> read_trace_any(
    const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_trace_csv(path)
                                    : read_trace_jsonl(path);
}

// Human label of an on-disk trace: the method directory when the file sits in
// one, the stem otherwise.
inline std::string trace_label(const std::filesystem::path& path) {
  const std::string parent = path.parent_path().filename().string();
  return parent.empty() ? path.stem().string() : parent;
}

}  // namespace detail

// Joins stored traces with a truth edge list: per-trace recovery reports,
// an aggregate across them when there are several, and optional detection
// frequencies of the first detect_k activations.
inline void cmd_evaluate(const EvaluateConfig& cfg) {
  detail::require_out(cfg.out, "evaluate");
  if (cfg.traces.empty()) throw ConfigError("evaluate: no trace files given");
  if (cfg.d < 2) throw ConfigError("evaluate: --d (truth dimension) is required");
  if (cfg.truth_edges.empty())
    throw ConfigError("evaluate: --truth (edges CSV) is required");
  const Support truth = read_edges_csv(cfg.truth_edges, cfg.d);

  std::vector<GrowthTrace> traces;
  std::vector<RecoveryReport> reports;
  for (const auto& path : cfg.traces) {
    GrowthTrace trace =
        assemble_trace(GrowthMethod::GSL, cfg.d, detail::read_trace_any(path));
    RecoveryReport rep = score_recovery(trace, truth, path.string());
    rep.method = detail::trace_label(path);
    reports.push_back(std::move(rep));
    traces.push_back(std::move(trace));
  }

  detail::ensure_dir(cfg.out);
  nlohmann::json traces_echo = nlohmann::json::array();
  for (const auto& p : cfg.traces) traces_echo.push_back(p.string());
  detail::write_manifest(cfg.out, "evaluate",
                         {{"traces", traces_echo},
                          {"truth_edges", cfg.truth_edges.string()},
                          {"d", cfg.d},
                          {"detect_k", cfg.detect_k},
                          {"out", cfg.out.string()}});

  for (std::size_t t = 0; t < reports.size(); ++t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "recovery_%03zu", t);
    write_recovery_csv(cfg.out / (std::string(buf) + ".csv"), reports[t]);
    write_recovery_json(cfg.out / (std::string(buf) + ".json"), reports[t]);
  }
  if (reports.size() > 1) {
    const CurveSummary sum = aggregate(reports);
    write_aggregate_csv(cfg.out / "aggregate.csv", sum);
    write_aggregate_json(cfg.out / "aggregate.json", sum);
  }
  if (cfg.detect_k > 0)
    write_detection_csv(cfg.out / "detection.csv",
                        detection_frequency(traces, truth, cfg.detect_k));
}

// ---- stability -------------------------------------------------------------

struct StabilityConfig {
  std::filesystem::path input;  // data CSV
  bool no_ridge = false;
  double rho = 1e-6;
  GrowthMethod method = GrowthMethod::GSL;  // growth methods only
  StoppingConfig stopping{};
  SelectionKind correction_rule = SelectionKind::GSL;
  int k_max = -1;
  long n_sub = 500;
  long sub_size = -1;  // -1: floor(n / 2)
  std::uint64_t seed = 0;
  int jobs = 1;
  std::filesystem::path out;
};

// Subsampling stability selection over one data file; writes the per-edge
// rank table (lexicographic and median-ordered) and the raw ranks JSON.
inline void cmd_stability(const StabilityConfig& cfg) {
  detail::require_out(cfg.out, "stability");
  if (cfg.input.empty()) throw ConfigError("stability: --input is required");
  if (is_naive(cfg.method))
    throw ConfigError(
        "stability: prec/pcorr are one-shot orderings; stability needs a "
        "growth method (gsl, bbi, or bfci)");
  cfg.stopping.validate();
  const Eigen::MatrixXd data = read_data_csv(cfg.input);
  const long sub_size = cfg.sub_size < 0 ? data.rows() / 2 : cfg.sub_size;

  SelectionRule rule;
  rule.kind = cfg.method == GrowthMethod::GSL   ? SelectionKind::GSL
              : cfg.method == GrowthMethod::BBI ? SelectionKind::BBI
                                                : SelectionKind::BFCI;
  const auto builder = [&](const Eigen::MatrixXd& sub) {
    SymMatrix s = sample_covariance(sub);
    if (!cfg.no_ridge) s = apply_ridge(s, cfg.rho);
    return s;
  };
  const RankDistribution dist =
      stability_ranks(builder, data, cfg.n_sub, sub_size, rule, cfg.stopping,
                      cfg.k_max, cfg.seed, cfg.jobs);

  detail::ensure_dir(cfg.out);
  detail::write_manifest(cfg.out, "stability",
                         {{"input", cfg.input.string()},
                          {"no_ridge", cfg.no_ridge},
                          {"rho", cfg.rho},
                          {"method", to_string(cfg.method)},
                          {"stopping", detail::to_json(cfg.stopping)},
                          {"correction_rule", to_string(cfg.correction_rule)},
                          {"k_max", cfg.k_max},
                          {"n_sub", cfg.n_sub},
                          {"sub_size", sub_size},
                          {"seed", cfg.seed},
                          {"jobs", cfg.jobs},
                          {"out", cfg.out.string()}},
                         {{"n_completed", dist.n_completed},
                          {"n_skipped", dist.n_skipped}});
  write_ranks_csv(cfg.out / "ranks.csv", dist);
  write_ranks_ordered_csv(cfg.out / "ranks_ordered.csv", dist);
  write_ranks_json(cfg.out / "ranks.json", dist);
}

// ---- bench -----------------------------------------------------------------

struct BenchConfig {
  std::vector<ScenarioFamily> families{ScenarioFamily::RANDOM,
                                       ScenarioFamily::CLIQUE,
                                       ScenarioFamily::HUB};
  int d = 50;
  int m = 40;  // RANDOM family
  std::vector<double> etas{0.25};
  std::vector<int> ns{30, 90, 160};
  int reps = 100;
  int bfci_reps = 10;
  std::vector<GrowthMethod> methods{
      GrowthMethod::GSL, GrowthMethod::BBI, GrowthMethod::PREC,
      GrowthMethod::PCORR};
  int k_max = -1;
  StoppingConfig stopping{};
  SelectionKind correction_rule = SelectionKind::GSL;
  bool with_losses = false;  // losses for naive orderings
  double rho = 1e-6;
  std::uint64_t seed = 0;
  bool resume = false;  // reuse completed traces already on disk
  int jobs = 1;
  std::filesystem::path out;
};

namespace detail {

struct BenchRow {
  std::string scenario;
  ScenarioFamily family{};
  int d = 0;
  long m_true = 0;
  double eta = 0.0;
  int n = 0;
  GrowthMethod method{};
  int k_resolved = 0;
  int reps = 0;
  int completed = 0;
  int k_ref = 0;
  double auc_med = 0, auc_p10 = 0, auc_p90 = 0;
  double prec_med = 0, prec_p10 = 0, prec_p90 = 0;
  double rec_med = 0, rec_p10 = 0, rec_p90 = 0;
};

inline void write_bench_report_csv(const std::filesystem::path& path,
                                   const std::vector<BenchRow>& rows) {
  auto out = open_out(path);
  out << "scenario,family,d,m_true,eta,n,method,k_max,reps,completed,k_ref,"
         "auc_med,auc_p10,auc_p90,precision_kref_med,precision_kref_p10,"
         "precision_kref_p90,recall_kref_med,recall_kref_p10,recall_kref_p90\n";
  for (const auto& r : rows)
    out << r.scenario << ',' << to_string(r.family) << ',' << r.d << ','
        << r.m_true << ',' << format_g17(r.eta) << ',' << r.n << ','
        << to_string(r.method) << ',' << r.k_resolved << ',' << r.reps << ','
        << r.completed << ',' << r.k_ref << ',' << format_g17(r.auc_med) << ','
        << format_g17(r.auc_p10) << ',' << format_g17(r.auc_p90) << ','
        << format_g17(r.prec_med) << ',' << format_g17(r.prec_p10) << ','
        << format_g17(r.prec_p90) << ',' << format_g17(r.rec_med) << ','
        << format_g17(r.rec_p10) << ',' << format_g17(r.rec_p90) << '\n';
  finish_write(out, path);
}

inline void write_bench_report_json(const std::filesystem::path& path,
                                    const std::vector<BenchRow>& rows) {
  nlohmann::json j;
  j["schema"] = "ggrow-bench-v1";
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"scenario", r.scenario},
                   {"family", to_string(r.family)},
                   {"d", r.d},
                   {"m_true", r.m_true},
                   {"eta", r.eta},
                   {"n", r.n},
                   {"method", to_string(r.method)},
                   {"k_max", r.k_resolved},
                   {"reps", r.reps},
                   {"completed", r.completed},
                   {"k_ref", r.k_ref},
                   {"auc_med", r.auc_med},
                   {"auc_p10", r.auc_p10},
                   {"auc_p90", r.auc_p90},
                   {"precision_kref_med", r.prec_med},
                   {"precision_kref_p10", r.prec_p10},
                   {"precision_kref_p90", r.prec_p90},
                   {"recall_kref_med", r.rec_med},
                   {"recall_kref_p10", r.rec_p10},
                   {"recall_kref_p90", r.rec_p90}});
  j["cells"] = std::move(arr);
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  finish_write(out, path);
}

inline std::string scenario_tag(const ScenarioSpec& spec) {
  std::string tag = std::string(to_string(spec.family)) + "_d" +
                    std::to_string(spec.d);
  if (spec.family == ScenarioFamily::RANDOM)
    tag += "_m" + std::to_string(spec.m);
  tag += "_eta" + format_g17(spec.eta);
  return tag;
}

}  // namespace detail

// Full sweep scenario x n x method x repetition. Per scenario the ground
// truth goes to scenarios/<tag>/truth/; per cell, repetition traces go to
// scenarios/<tag>/n<N>/<method>/trace_repNNN.jsonl with an aggregate
// recovery summary beside them; one global report.csv/json row per cell.
// Repetition r of every method shares the same data draw, so methods are
// compared on common samples; BFCI runs its own (smaller) repetition count.
// Failed repetitions are recorded in the manifest and the sweep continues.
// With resume = true, traces already on disk with the full step count are
// reused instead of recomputed.
inline void cmd_bench(const BenchConfig& cfg) {
  detail::require_out(cfg.out, "bench");
  if (cfg.families.empty() || cfg.etas.empty() || cfg.ns.empty() ||
      cfg.methods.empty())
    throw ConfigError("bench: families, etas, ns, and methods must be non-empty");
  for (const auto f : cfg.families)
    if (f == ScenarioFamily::EXTERNAL)
      throw ConfigError("bench: the external family is not sweepable");
  for (const int n : cfg.ns)
    if (n < 1) throw ConfigError("bench: sample sizes must be >= 1");
  for (const double eta : cfg.etas)
    if (!(eta > 0.0)) throw ConfigError("bench: eta values must be > 0");
  if (cfg.reps < 1) throw ConfigError("bench: reps must be >= 1");
  {
    std::set<GrowthMethod> uniq(cfg.methods.begin(), cfg.methods.end());
    if (uniq.size() != cfg.methods.size())
      throw ConfigError("bench: duplicate method in --methods");
    if (uniq.count(GrowthMethod::BFCI) &&
        (cfg.bfci_reps < 1 || cfg.bfci_reps > cfg.reps))
      throw ConfigError("bench: bfci_reps must lie in [1, reps]");
  }
  cfg.stopping.validate();
  const int k_resolved = detail::resolve_k_max(cfg.k_max, cfg.d, "bench");

  detail::ensure_dir(cfg.out / "scenarios");
  nlohmann::json families_echo = nlohmann::json::array();
  for (const auto f : cfg.families) families_echo.push_back(to_string(f));
  nlohmann::json methods_echo = nlohmann::json::array();
  for (const auto m : cfg.methods) methods_echo.push_back(to_string(m));
  const nlohmann::json config_echo = {
      {"families", families_echo},
      {"d", cfg.d},
      {"m", cfg.m},
      {"etas", cfg.etas},
      {"ns", cfg.ns},
      {"reps", cfg.reps},
      {"bfci_reps", cfg.bfci_reps},
      {"methods", methods_echo},
      {"k_max", cfg.k_max},
      {"stopping", detail::to_json(cfg.stopping)},
      {"correction_rule", to_string(cfg.correction_rule)},
      {"with_losses", cfg.with_losses},
      {"rho", cfg.rho},
      {"seed", cfg.seed},
      {"resume", cfg.resume},
      {"jobs", cfg.jobs},
      {"out", cfg.out.string()}};

  std::vector<detail::BenchRow> rows;
  nlohmann::json cells = nlohmann::json::array();
  std::uint64_t scenario_index = 0;

  for (const ScenarioFamily family : cfg.families) {
    for (const double eta : cfg.etas) {
      ScenarioSpec spec;
      spec.family = family;
      spec.d = cfg.d;
      spec.m = family == ScenarioFamily::RANDOM ? cfg.m : 0;
      spec.eta = eta;
      spec.seed = derive_seed(cfg.seed, scenario_index++);
      spec.validate();
      const std::string tag = detail::scenario_tag(spec);
      const std::filesystem::path sdir = cfg.out / "scenarios" / tag;
      const GroundTruth truth = build_truth(spec);
      write_truth_files(sdir / "truth", truth, spec);
      const long m_true = truth.true_edges.edge_count();
      const int k_ref =
          m_true >= 1 ? std::min<int>(k_resolved, static_cast<int>(m_true))
                      : k_resolved;

      for (std::size_t n_index = 0; n_index < cfg.ns.size(); ++n_index) {
        const int n = cfg.ns[n_index];
        const std::filesystem::path ndir = sdir / ("n" + std::to_string(n));
        long needed = 0;
        for (const auto m : cfg.methods)
          needed = std::max<long>(
              needed, m == GrowthMethod::BFCI ? cfg.bfci_reps : cfg.reps);

        // Shared per-repetition inputs, drawn serially for determinism.
        std::vector<std::uint64_t> data_seeds(static_cast<std::size_t>(needed));
        std::vector<SymMatrix> s_mats(static_cast<std::size_t>(needed));
        for (long rep = 0; rep < needed; ++rep) {
          data_seeds[static_cast<std::size_t>(rep)] = derive_seed(
              spec.seed, (static_cast<std::uint64_t>(n_index) + 1) * 1000000 +
                             static_cast<std::uint64_t>(rep));
          const Eigen::MatrixXd x = sample_gaussian(
              truth, n, data_seeds[static_cast<std::size_t>(rep)]);
          s_mats[static_cast<std::size_t>(rep)] =
              apply_ridge(sample_covariance(x), cfg.rho);
        }

        for (const GrowthMethod method : cfg.methods) {
          const std::filesystem::path mdir = ndir / to_string(method);
          detail::ensure_dir(mdir);
          const long method_reps =
              method == GrowthMethod::BFCI ? cfg.bfci_reps : cfg.reps;
          std::vector<std::optional<GrowthTrace>> done(
              static_cast<std::size_t>(method_reps));
          std::vector<std::string> failures(
              static_cast<std::size_t>(method_reps));
          const auto t0 = std::chrono::steady_clock::now();

          parallel_for(cfg.jobs, method_reps, [&](long rep) {
            const std::filesystem::path tpath =
                mdir / detail::rep_trace_name(rep);
            if (cfg.resume && std::filesystem::exists(tpath)) {
              try {
                std::vector<GrowthStep> steps = read_trace_jsonl(tpath);
                if (static_cast<int>(steps.size()) == k_resolved) {
                  done[static_cast<std::size_t>(rep)] = assemble_trace(
                      method, cfg.d, std::move(steps),
                      is_naive(method)
                          ? detail::naive_seed(
                                data_seeds[static_cast<std::size_t>(rep)],
                                method)
                          : 0);
                  return;
                }
              } catch (const Error&) {
                // unusable file: recompute below
              }
            }
            try {
              GrowthTrace trace;
              const SymMatrix& s = s_mats[static_cast<std::size_t>(rep)];
              if (is_naive(method)) {
                trace = grow_naive(
                    s, method, cfg.k_max,
                    detail::naive_seed(
                        data_seeds[static_cast<std::size_t>(rep)], method),
                    cfg.with_losses, cfg.stopping, cfg.correction_rule);
              } else {
                SelectionRule rule;
                rule.kind = method == GrowthMethod::GSL ? SelectionKind::GSL
                            : method == GrowthMethod::BBI
                                ? SelectionKind::BBI
                                : SelectionKind::BFCI;
                GrowOptions opt;
                opt.correction_rule = cfg.correction_rule;
                trace = grow(s, rule, cfg.stopping, cfg.k_max, opt);
              }
              write_trace_jsonl(tpath, trace);
              done[static_cast<std::size_t>(rep)] = std::move(trace);
            } catch (const GrowthAbort& abort) {
              write_trace_jsonl(tpath, abort.partial_trace);
              failures[static_cast<std::size_t>(rep)] = abort.what();
            } catch (const Error& e) {
              failures[static_cast<std::size_t>(rep)] = e.what();
            }
          });

          const auto wall_ms =
              std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();

          std::vector<RecoveryReport> reports;
          nlohmann::json failed = nlohmann::json::array();
          for (long rep = 0; rep < method_reps; ++rep) {
            if (done[static_cast<std::size_t>(rep)]) {
              reports.push_back(score_recovery(
                  *done[static_cast<std::size_t>(rep)], truth, tag));
            } else {
              failed.push_back(
                  {{"rep", rep},
                   {"error", failures[static_cast<std::size_t>(rep)]}});
            }
          }

          detail::BenchRow row;
          row.scenario = tag;
          row.family = family;
          row.d = cfg.d;
          row.m_true = m_true;
          row.eta = eta;
          row.n = n;
          row.method = method;
          row.k_resolved = k_resolved;
          row.reps = static_cast<int>(method_reps);
          row.completed = static_cast<int>(reports.size());
          row.k_ref = k_ref;
          if (!reports.empty()) {
            const CurveSummary sum = aggregate(reports);
            write_aggregate_csv(mdir / "aggregate.csv", sum);
            write_aggregate_json(mdir / "aggregate.json", sum);
            std::vector<double> prec, rec;
            for (const auto& r : reports) {
              prec.push_back(r.per_k[static_cast<std::size_t>(k_ref - 1)].precision);
              rec.push_back(r.per_k[static_cast<std::size_t>(k_ref - 1)].recall);
            }
            row.auc_med = sum.auc_med;
            row.auc_p10 = sum.auc_p10;
            row.auc_p90 = sum.auc_p90;
            row.prec_med = percentile(prec, 0.5);
            row.prec_p10 = percentile(prec, 0.1);
            row.prec_p90 = percentile(prec, 0.9);
            row.rec_med = percentile(rec, 0.5);
            row.rec_p10 = percentile(rec, 0.1);
            row.rec_p90 = percentile(rec, 0.9);
          } else {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.auc_med = row.auc_p10 = row.auc_p90 = nan;
            row.prec_med = row.prec_p10 = row.prec_p90 = nan;
            row.rec_med = row.rec_p10 = row.rec_p90 = nan;
          }
          rows.push_back(row);

          cells.push_back({{"scenario", tag},
                           {"n", n},
                           {"method", to_string(method)},
                           {"reps", method_reps},
                           {"completed", row.completed},
                           {"failed", failed},
                           {"scenario_seed", spec.seed},
                           {"data_seeds", data_seeds},
                           {"wall_ms", wall_ms}});
        }
      }
    }
  }

  detail::write_bench_report_csv(cfg.out / "report.csv", rows);
  detail::write_bench_report_json(cfg.out / "report.json", rows);
  detail::write_manifest(cfg.out, "bench", config_echo, {{"cells", cells}});
}

}  // namespace ggrow
