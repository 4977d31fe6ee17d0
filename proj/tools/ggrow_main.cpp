// ggrow: regularisation-free Gaussian graphical model inference by sequential
// graph growth. Subcommands: generate, grow, evaluate, stability, bench.
//
// Configuration precedence: command line > environment (GGROW_OUT,
// GGROW_JOBS) > --config JSON document > built-in defaults. The JSON document
// carries the long flag names as keys plus an optional "command"; unknown
// keys are rejected.
//
// Exit codes: 0 success, 2 configuration error, 3 compute error
// (non-positive-definite input, degeneracy, aborted growth), 4 I/O error.

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ggrow/commands.hpp"

namespace {

using nlohmann::json;

ggrow::SelectionKind parse_inner_rule(const std::string& name) {
  if (name == "gs") return ggrow::SelectionKind::GS;
  if (name == "gsl") return ggrow::SelectionKind::GSL;
  if (name == "bbi") return ggrow::SelectionKind::BBI;
  throw ggrow::ConfigError("inner rule must be gs, gsl, or bbi (got '" + name +
                           "')");
}

std::vector<ggrow::GrowthMethod> parse_methods(
    const std::vector<std::string>& names) {
  std::vector<ggrow::GrowthMethod> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(ggrow::parse_growth_method(n));
  return out;
}

std::vector<ggrow::ScenarioFamily> parse_families(
    const std::vector<std::string>& names) {
  std::vector<ggrow::ScenarioFamily> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(ggrow::parse_scenario_family(n));
  return out;
}

// One subcommand: CLI11 options bound to locals, plus per-key JSON appliers
// writing to the same locals. After parsing, JSON values are applied only for
// options the command line (or environment) did not set.
struct SubBinding {
  CLI::App* sub = nullptr;
  std::map<std::string, std::pair<CLI::Option*, std::function<void(const json&)>>>
      by_key;
  std::function<void()> run;

  void bind(const std::string& key, CLI::Option* opt,
            std::function<void(const json&)> apply) {
    by_key[key] = {opt, std::move(apply)};
  }

  void overlay(const json& doc) const {
    for (const auto& [key, value] : doc.items()) {
      if (key == "command") continue;
      const auto it = by_key.find(key);
      if (it == by_key.end())
        throw ggrow::ConfigError("config: unknown field '" + key +
                                 "' for command '" + sub->get_name() + "'");
      if (it->second.first->count() > 0) continue;  // CLI/env wins
      try {
        it->second.second(value);
      } catch (const json::exception& e) {
        throw ggrow::ConfigError("config: bad value for '" + key +
                                 "': " + e.what());
      }
    }
  }

  // CLI11 reads environment variables only for subcommands named on the
  // command line; when the config document picks the command, its env-backed
  // options must be filled in by hand to keep env ahead of the document.
  void apply_env() const {
    for (const auto& [key, entry] : by_key) {
      CLI::Option* opt = entry.first;
      const std::string ename = opt->get_envname();
      if (ename.empty() || opt->count() > 0) continue;
      const char* value = std::getenv(ename.c_str());
      if (!value || !*value) continue;
      opt->add_result(std::string(value));
      opt->run_callback();
    }
  }
};

// Shared stopping-rule flags (tau, alpha, beta, hard-cap) and the correction
// inner rule.
struct StoppingArgs {
  double tau = 1e-5;
  double alpha = 1.0;
  double beta = 10.0;
  long hard_cap = 1000000;
  std::string inner_rule = "gsl";

  void add_to(SubBinding& b) {
    b.bind("tau", b.sub->add_option("--tau", tau, "stopping fraction tau"),
           [this](const json& v) { tau = v.get<double>(); });
    b.bind("alpha",
           b.sub->add_option("--alpha", alpha, "iteration cap slope alpha"),
           [this](const json& v) { alpha = v.get<double>(); });
    b.bind("beta",
           b.sub->add_option("--beta", beta, "iteration cap offset beta"),
           [this](const json& v) { beta = v.get<double>(); });
    b.bind("hard-cap",
           b.sub->add_option("--hard-cap", hard_cap, "absolute iteration cap"),
           [this](const json& v) { hard_cap = v.get<long>(); });
    b.bind("inner-rule",
           b.sub->add_option("--inner-rule", inner_rule,
                             "correction coordinate rule (gs, gsl, bbi)"),
           [this](const json& v) { inner_rule = v.get<std::string>(); });
  }

  ggrow::StoppingConfig config() const {
    ggrow::StoppingConfig cfg;
    cfg.tau = tau;
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.hard_cap = hard_cap;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Gaussian graphical model inference by sequential graph growth"};
  app.set_version_flag("--version", std::string(ggrow::kLibraryVersion));
  app.require_subcommand(0, 1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config document (command line flags win)");

  std::vector<SubBinding*> bindings;

  // ---- generate ----
  SubBinding gen;
  struct {
    std::string family = "random";
    int d = 50;
    int m = 0;
    double eta = 0.25;
    int n = 0;
    std::uint64_t seed = 0;
    std::string external;
    int offset = 0;
    int size = -1;
    std::string out;
  } ga;
  gen.sub = app.add_subcommand("generate",
                               "synthesise a scenario: truth matrices, edge "
                               "list, and sampled data");
  gen.bind("family",
           gen.sub->add_option("--family", ga.family,
                               "random, clique, hub, or external"),
           [&](const json& v) { ga.family = v.get<std::string>(); });
  gen.bind("d", gen.sub->add_option("--d", ga.d, "dimension"),
           [&](const json& v) { ga.d = v.get<int>(); });
  gen.bind("m",
           gen.sub->add_option("--m", ga.m, "true edge count (random family)"),
           [&](const json& v) { ga.m = v.get<int>(); });
  gen.bind("eta", gen.sub->add_option("--eta", ga.eta, "signal parameter"),
           [&](const json& v) { ga.eta = v.get<double>(); });
  gen.bind("n", gen.sub->add_option("--n", ga.n, "sample size (0: truth only)"),
           [&](const json& v) { ga.n = v.get<int>(); });
  gen.bind("seed", gen.sub->add_option("--seed", ga.seed, "master seed"),
           [&](const json& v) { ga.seed = v.get<std::uint64_t>(); });
  gen.bind("external",
           gen.sub->add_option("--external", ga.external,
                               "matrix file for the external family"),
           [&](const json& v) { ga.external = v.get<std::string>(); });
  gen.bind("offset",
           gen.sub->add_option("--offset", ga.offset,
                               "external block start (0-based)"),
           [&](const json& v) { ga.offset = v.get<int>(); });
  gen.bind("size",
           gen.sub->add_option("--size", ga.size,
                               "external block size (-1: to the end)"),
           [&](const json& v) { ga.size = v.get<int>(); });
  gen.bind("out",
           gen.sub->add_option("--out", ga.out, "output directory")
               ->envname("GGROW_OUT"),
           [&](const json& v) { ga.out = v.get<std::string>(); });
  gen.run = [&]() {
    ggrow::GenerateConfig cfg;
    cfg.scenario.family = ggrow::parse_scenario_family(ga.family);
    cfg.scenario.d = ga.d;
    cfg.scenario.m = ga.m;
    cfg.scenario.eta = ga.eta;
    cfg.scenario.n = ga.n;
    cfg.scenario.seed = ga.seed;
    cfg.scenario.external_path = ga.external;
    cfg.external_offset = ga.offset;
    cfg.external_size = ga.size;
    cfg.out = ga.out;
    ggrow::cmd_generate(cfg);
  };
  bindings.push_back(&gen);

  // ---- grow ----
  SubBinding grw;
  struct {
    std::string input;
    std::string matrix;
    bool no_ridge = false;
    double rho = 1e-6;
    std::vector<std::string> methods{"gsl"};
    int kmax = -1;
    StoppingArgs stopping;
    bool with_losses = false;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out;
  } wa;
  grw.sub = app.add_subcommand(
      "grow", "run growth methods on a data file or a covariance matrix");
  grw.bind("input",
           grw.sub->add_option("--input", wa.input, "data CSV (rows x d)"),
           [&](const json& v) { wa.input = v.get<std::string>(); });
  grw.bind("matrix",
           grw.sub->add_option("--matrix", wa.matrix,
                               "square matrix file (CSV or JSON)"),
           [&](const json& v) { wa.matrix = v.get<std::string>(); });
  grw.bind("no-ridge",
           grw.sub->add_flag("--no-ridge", wa.no_ridge,
                             "skip the ridge regularisation"),
           [&](const json& v) { wa.no_ridge = v.get<bool>(); });
  grw.bind("rho", grw.sub->add_option("--rho", wa.rho, "ridge scale"),
           [&](const json& v) { wa.rho = v.get<double>(); });
  grw.bind("methods",
           grw.sub
               ->add_option("--methods,--method", wa.methods,
                            "gsl, bbi, bfci, prec, pcorr (comma-separated)")
               ->delimiter(','),
           [&](const json& v) { wa.methods = v.get<std::vector<std::string>>(); });
  grw.bind("kmax",
           grw.sub->add_option("--kmax", wa.kmax, "growth steps (-1: full)"),
           [&](const json& v) { wa.kmax = v.get<int>(); });
  wa.stopping.add_to(grw);
  grw.bind("with-losses",
           grw.sub->add_flag("--with-losses", wa.with_losses,
                             "loss trajectories for prec/pcorr"),
           [&](const json& v) { wa.with_losses = v.get<bool>(); });
  grw.bind("seed",
           grw.sub->add_option("--seed", wa.seed, "naive tie-break seed"),
           [&](const json& v) { wa.seed = v.get<std::uint64_t>(); });
  grw.bind("jobs",
           grw.sub->add_option("--jobs", wa.jobs, "worker threads")
               ->envname("GGROW_JOBS"),
           [&](const json& v) { wa.jobs = v.get<int>(); });
  grw.bind("out",
           grw.sub->add_option("--out", wa.out, "output directory")
               ->envname("GGROW_OUT"),
           [&](const json& v) { wa.out = v.get<std::string>(); });
  grw.run = [&]() {
    ggrow::GrowConfig cfg;
    cfg.input = wa.input;
    cfg.matrix = wa.matrix;
    cfg.no_ridge = wa.no_ridge;
    cfg.rho = wa.rho;
    cfg.methods = parse_methods(wa.methods);
    cfg.k_max = wa.kmax;
    cfg.stopping = wa.stopping.config();
    cfg.correction_rule = parse_inner_rule(wa.stopping.inner_rule);
    cfg.with_losses = wa.with_losses;
    cfg.seed = wa.seed;
    cfg.jobs = wa.jobs;
    cfg.out = wa.out;
    ggrow::cmd_grow(cfg);
  };
  bindings.push_back(&grw);

  // ---- evaluate ----
  SubBinding ev;
  struct {
    std::vector<std::string> traces;
    std::string truth;
    int d = 0;
    int detect_k = 0;
    std::string out;
  } ea;
  ev.sub = app.add_subcommand("evaluate",
                              "score stored traces against a truth edge list");
  ev.bind("traces",
          ev.sub
              ->add_option("--traces", ea.traces,
                           "trace files (.jsonl or .csv, comma-separated)")
              ->delimiter(','),
          [&](const json& v) { ea.traces = v.get<std::vector<std::string>>(); });
  ev.bind("truth",
          ev.sub->add_option("--truth", ea.truth, "true edges CSV"),
          [&](const json& v) { ea.truth = v.get<std::string>(); });
  ev.bind("d", ev.sub->add_option("--d", ea.d, "truth dimension"),
          [&](const json& v) { ea.d = v.get<int>(); });
  ev.bind("detect-k",
          ev.sub->add_option("--detect-k", ea.detect_k,
                             "also write detection frequencies at this k"),
          [&](const json& v) { ea.detect_k = v.get<int>(); });
  ev.bind("out",
          ev.sub->add_option("--out", ea.out, "output directory")
              ->envname("GGROW_OUT"),
          [&](const json& v) { ea.out = v.get<std::string>(); });
  ev.run = [&]() {
    ggrow::EvaluateConfig cfg;
    cfg.traces.assign(ea.traces.begin(), ea.traces.end());
    cfg.truth_edges = ea.truth;
    cfg.d = ea.d;
    cfg.detect_k = ea.detect_k;
    cfg.out = ea.out;
    ggrow::cmd_evaluate(cfg);
  };
  bindings.push_back(&ev);

  // ---- stability ----
  SubBinding st;
  struct {
    std::string input;
    bool no_ridge = false;
    double rho = 1e-6;
    std::string method = "gsl";
    int kmax = -1;
    StoppingArgs stopping;
    long nsub = 500;
    long subsize = -1;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out;
  } sa;
  st.sub = app.add_subcommand(
      "stability", "activation-rank stability selection over subsamples");
  st.bind("input",
          st.sub->add_option("--input", sa.input, "data CSV (rows x d)"),
          [&](const json& v) { sa.input = v.get<std::string>(); });
  st.bind("no-ridge",
          st.sub->add_flag("--no-ridge", sa.no_ridge,
                           "skip the ridge regularisation"),
          [&](const json& v) { sa.no_ridge = v.get<bool>(); });
  st.bind("rho", st.sub->add_option("--rho", sa.rho, "ridge scale"),
          [&](const json& v) { sa.rho = v.get<double>(); });
  st.bind("method",
          st.sub->add_option("--method", sa.method, "gsl, bbi, or bfci"),
          [&](const json& v) { sa.method = v.get<std::string>(); });
  st.bind("kmax",
          st.sub->add_option("--kmax", sa.kmax, "growth steps (-1: full)"),
          [&](const json& v) { sa.kmax = v.get<int>(); });
  sa.stopping.add_to(st);
  st.bind("nsub", st.sub->add_option("--nsub", sa.nsub, "subsample count"),
          [&](const json& v) { sa.nsub = v.get<long>(); });
  st.bind("subsize",
          st.sub->add_option("--subsize", sa.subsize,
                             "subsample size (-1: floor(n/2))"),
          [&](const json& v) { sa.subsize = v.get<long>(); });
  st.bind("seed", st.sub->add_option("--seed", sa.seed, "subsampling seed"),
          [&](const json& v) { sa.seed = v.get<std::uint64_t>(); });
  st.bind("jobs",
          st.sub->add_option("--jobs", sa.jobs, "worker threads")
              ->envname("GGROW_JOBS"),
          [&](const json& v) { sa.jobs = v.get<int>(); });
  st.bind("out",
          st.sub->add_option("--out", sa.out, "output directory")
              ->envname("GGROW_OUT"),
          [&](const json& v) { sa.out = v.get<std::string>(); });
  st.run = [&]() {
    ggrow::StabilityConfig cfg;
    cfg.input = sa.input;
    cfg.no_ridge = sa.no_ridge;
    cfg.rho = sa.rho;
    cfg.method = ggrow::parse_growth_method(sa.method);
    cfg.stopping = sa.stopping.config();
    cfg.correction_rule = parse_inner_rule(sa.stopping.inner_rule);
    cfg.k_max = sa.kmax;
    cfg.n_sub = sa.nsub;
    cfg.sub_size = sa.subsize;
    cfg.seed = sa.seed;
    cfg.jobs = sa.jobs;
    cfg.out = sa.out;
    ggrow::cmd_stability(cfg);
  };
  bindings.push_back(&st);

  // ---- bench ----
  SubBinding bn;
  struct {
    std::vector<std::string> families{"random", "clique", "hub"};
    int d = 50;
    int m = 40;
    std::vector<double> etas{0.25};
    std::vector<int> ns{30, 90, 160};
    int reps = 100;
    int bfci_reps = 10;
    std::vector<std::string> methods{"gsl", "bbi", "prec", "pcorr"};
    int kmax = -1;
    StoppingArgs stopping;
    bool with_losses = false;
    double rho = 1e-6;
    std::uint64_t seed = 0;
    bool resume = false;
    int jobs = 1;
    std::string out;
  } ba;
  bn.sub = app.add_subcommand(
      "bench", "full sweep scenario x n x method x repetition");
  bn.bind("families",
          bn.sub
              ->add_option("--families", ba.families,
                           "random, clique, hub (comma-separated)")
              ->delimiter(','),
          [&](const json& v) { ba.families = v.get<std::vector<std::string>>(); });
  bn.bind("d", bn.sub->add_option("--d", ba.d, "dimension"),
          [&](const json& v) { ba.d = v.get<int>(); });
  bn.bind("m",
          bn.sub->add_option("--m", ba.m, "true edge count (random family)"),
          [&](const json& v) { ba.m = v.get<int>(); });
  bn.bind("etas",
          bn.sub->add_option("--etas", ba.etas, "signal parameters")
              ->delimiter(','),
          [&](const json& v) { ba.etas = v.get<std::vector<double>>(); });
  bn.bind("ns",
          bn.sub->add_option("--ns", ba.ns, "sample sizes")->delimiter(','),
          [&](const json& v) { ba.ns = v.get<std::vector<int>>(); });
  bn.bind("reps", bn.sub->add_option("--reps", ba.reps, "repetitions"),
          [&](const json& v) { ba.reps = v.get<int>(); });
  bn.bind("bfci-reps",
          bn.sub->add_option("--bfci-reps", ba.bfci_reps,
                             "repetitions for bfci"),
          [&](const json& v) { ba.bfci_reps = v.get<int>(); });
  bn.bind("methods",
          bn.sub
              ->add_option("--methods", ba.methods,
                           "gsl, bbi, bfci, prec, pcorr (comma-separated)")
              ->delimiter(','),
          [&](const json& v) { ba.methods = v.get<std::vector<std::string>>(); });
  bn.bind("kmax",
          bn.sub->add_option("--kmax", ba.kmax, "growth steps (-1: full)"),
          [&](const json& v) { ba.kmax = v.get<int>(); });
  ba.stopping.add_to(bn);
  bn.bind("with-losses",
          bn.sub->add_flag("--with-losses", ba.with_losses,
                           "loss trajectories for prec/pcorr"),
          [&](const json& v) { ba.with_losses = v.get<bool>(); });
  bn.bind("rho", bn.sub->add_option("--rho", ba.rho, "ridge scale"),
          [&](const json& v) { ba.rho = v.get<double>(); });
  bn.bind("seed", bn.sub->add_option("--seed", ba.seed, "master seed"),
          [&](const json& v) { ba.seed = v.get<std::uint64_t>(); });
  bn.bind("resume",
          bn.sub->add_flag("--resume", ba.resume,
                           "reuse completed traces already on disk"),
          [&](const json& v) { ba.resume = v.get<bool>(); });
  bn.bind("jobs",
          bn.sub->add_option("--jobs", ba.jobs, "worker threads")
              ->envname("GGROW_JOBS"),
          [&](const json& v) { ba.jobs = v.get<int>(); });
  bn.bind("out",
          bn.sub->add_option("--out", ba.out, "output directory")
              ->envname("GGROW_OUT"),
          [&](const json& v) { ba.out = v.get<std::string>(); });
  bn.run = [&]() {
    ggrow::BenchConfig cfg;
    cfg.families = parse_families(ba.families);
    cfg.d = ba.d;
    cfg.m = ba.m;
    cfg.etas = ba.etas;
    cfg.ns = ba.ns;
    cfg.reps = ba.reps;
    cfg.bfci_reps = ba.bfci_reps;
    cfg.methods = parse_methods(ba.methods);
    cfg.k_max = ba.kmax;
    cfg.stopping = ba.stopping.config();
    cfg.correction_rule = parse_inner_rule(ba.stopping.inner_rule);
    cfg.with_losses = ba.with_losses;
    cfg.rho = ba.rho;
    cfg.seed = ba.seed;
    cfg.resume = ba.resume;
    cfg.jobs = ba.jobs;
    cfg.out = ba.out;
    ggrow::cmd_bench(cfg);
  };
  bindings.push_back(&bn);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 2;
    }

    SubBinding* picked = nullptr;
    for (SubBinding* b : bindings)
      if (b->sub->parsed()) picked = b;

    json doc;
    if (!config_path.empty()) {
      auto in = ggrow::detail::open_in(config_path);
      try {
        in >> doc;
      } catch (const json::exception& e) {
        throw ggrow::IoError("'" + config_path + "': " + e.what());
      }
      if (!doc.is_object())
        throw ggrow::ConfigError("config: document must be a JSON object");
      if (doc.contains("command")) {
        const std::string cmd = doc["command"].get<std::string>();
        SubBinding* from_doc = nullptr;
        for (SubBinding* b : bindings)
          if (b->sub->get_name() == cmd) from_doc = b;
        if (!from_doc)
          throw ggrow::ConfigError("config: unknown command '" + cmd + "'");
        if (picked && picked != from_doc)
          throw ggrow::ConfigError(
              "config: document command '" + cmd +
              "' conflicts with the command line subcommand");
        picked = from_doc;
      }
    }
    if (!picked)
      throw ggrow::ConfigError(
          "no command given (subcommand or config \"command\" field)");
    picked->apply_env();
    if (!doc.is_null()) picked->overlay(doc);
    picked->run();
    return 0;
  } catch (const ggrow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ggrow::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 4;
  } catch (const ggrow::GrowthAbort& e) {
    std::cerr << "compute error: " << e.what() << '\n';
    return 3;
  } catch (const ggrow::Error& e) {
    std::cerr << "compute error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
