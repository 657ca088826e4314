#pragma once

// Experiment runner: a JSON config names a game and a list of solvers; each
// solver writes a trace CSV, a JSON summary and three SVG plots.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lqgame/baselines.hpp"
#include "lqgame/diagnostics.hpp"
#include "lqgame/game.hpp"
#include "lqgame/io.hpp"
#include "lqgame/modelfree.hpp"
#include "lqgame/outer_loop.hpp"
#include "lqgame/parallel.hpp"
#include "lqgame/svg.hpp"

namespace lqgame {

/// Solver names accepted in a config, in canonical order.
inline const std::vector<std::string>& known_solvers() {
  static const std::vector<std::string> names = {
      "nested_ng",     "nested_natural_ng", "nested_gauss_newton_ng",
      "ag_pg",         "ag_natural_pg",     "ag_gauss_newton",
      "gda_pg",        "gda_natural_pg",    "gda_gauss_newton",
      "modelfree_ng",  "modelfree_natural_ng"};
  return names;
}

struct ExperimentConfig {
  std::string game = "case1";  // "case1", "case2" or a path to a game JSON file
  std::vector<std::string> solvers;
  std::map<std::string, json> overrides;  // solver name -> {key: value}
  std::optional<double> zeta;              // Omega margin; default from the oracle
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::filesystem::path base_dir;  // relative game paths resolve against it

  void validate() const {
    if (solvers.empty()) throw ContractError("config: solver list is empty");
    std::set<std::string> seen;
    for (const auto& s : solvers) {
      const auto& k = known_solvers();
      if (std::find(k.begin(), k.end(), s) == k.end())
        throw ContractError("config: unknown solver '" + s + "'");
      if (!seen.insert(s).second) throw ContractError("config: solver '" + s + "' listed twice");
    }
    for (const auto& [name, _] : overrides) {
      if (!seen.count(name))
        throw ContractError("config: overrides given for '" + name + "', which is not run");
    }
    if (game != "case1" && game != "case2" && !std::filesystem::exists(game_path()))
      throw ContractError("config: game file not found: " + game_path().string());
    if (zeta && !(*zeta > 0.0)) throw ContractError("config: zeta must be positive");
  }

  std::filesystem::path game_path() const {
    std::filesystem::path p(game);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }
};

inline ExperimentConfig experiment_config_from_json(const json& j) {
  static const std::set<std::string> keys = {"game", "solvers", "overrides", "zeta", "seed",
                                             "output_dir"};
  for (const auto& [k, _] : j.items()) {
    if (!keys.count(k)) throw ContractError("config: unknown key '" + k + "'");
  }
  ExperimentConfig c;
  try {
    if (j.contains("game")) c.game = j.at("game").get<std::string>();
    if (j.contains("solvers")) c.solvers = j.at("solvers").get<std::vector<std::string>>();
    if (j.contains("overrides")) {
      for (const auto& [k, v] : j.at("overrides").items()) {
        if (!v.is_object()) throw ContractError("config: overrides for '" + k + "' must be an object");
        c.overrides[k] = v;
      }
    }
    if (j.contains("zeta")) c.zeta = j.at("zeta").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ContractError(std::string("config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ContractError("config " + path + ": " + e.what());
  }
  ExperimentConfig c = experiment_config_from_json(j);
  c.base_dir = std::filesystem::path(path).parent_path();
  return c;
}

inline LqGame resolve_game(const ExperimentConfig& c) {
  if (c.game == "case1") return case1();
  if (c.game == "case2") return case2();
  return load_game(c.game_path().string());
}

/// Reads typed override values and rejects keys nobody asked for.
class Overrides {
 public:
  Overrides(const std::string& solver, const json& j) : solver_(solver), j_(j) {}

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ContractError("override " + solver_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!used_.count(k)) throw ContractError("override " + solver_ + ": unknown key '" + k + "'");
    }
  }

 private:
  std::string solver_;
  json j_;
  std::set<std::string> used_;
};

namespace detail {

inline InnerMethod parse_inner_method(const std::string& s) {
  if (s == "pg") return InnerMethod::PG;
  if (s == "natural_pg") return InnerMethod::NaturalPG;
  if (s == "gauss_newton") return InnerMethod::GaussNewton;
  if (s == "riccati") return InnerMethod::Riccati;
  throw ContractError("unknown inner method '" + s + "'");
}

inline Projection parse_projection(const std::string& s) {
  if (s == "off") return Projection::Off;
  if (s == "whitened_sv_clip") return Projection::WhitenedSvClip;
  throw ContractError("unknown projection '" + s + "'");
}

inline InitialState parse_x0(const std::string& s) {
  if (s == "gaussian") return InitialState::Gaussian;
  if (s == "uniform_cube") return InitialState::UniformCube;
  throw ContractError("unknown initial-state distribution '" + s + "'");
}

inline Flavor parse_flavor(const std::string& s) {
  if (s == "pg") return Flavor::PG;
  if (s == "natural_pg") return Flavor::NaturalPG;
  return Flavor::GaussNewton;
}

struct SolverOutcome {
  OuterTrace trace;
  bool met_tolerance = false;
  std::string error;
};

inline SolverOutcome run_one(const std::string& name, const LqGame& g, const OmegaSet& omega,
                             const Mat& K_zero, const NashSolution* oracle, std::uint64_t seed,
                             const json& overrides) {
  Overrides ov(name, overrides);
  SolverOutcome out;
  const Mat L0 = Mat::Zero(g.m2(), g.d());
  try {
    if (name.rfind("nested_", 0) == 0) {
      const std::string v = name.substr(7);
      const OuterVariant variant = v == "ng"          ? OuterVariant::NG
                                   : v == "natural_ng" ? OuterVariant::NaturalNG
                                                       : OuterVariant::GaussNewtonNG;
      OuterConfig cfg = OuterConfig::defaults(variant);
      cfg.eta = ov.get("eta", cfg.eta);
      cfg.adaptive_eta = ov.get("adaptive_eta", cfg.adaptive_eta && !overrides.contains("eta"));
      cfg.tol = ov.get("tol", cfg.tol);
      cfg.max_iter = ov.get("max_iter", cfg.max_iter);
      cfg.projection = parse_projection(ov.get<std::string>("projection", "off"));
      const std::string im = ov.get<std::string>("inner_method", to_string(cfg.inner.method));
      if (im != to_string(cfg.inner.method)) {
        const bool enforce = cfg.inner.enforce_domain;
        cfg.inner = InnerConfig::defaults(parse_inner_method(im));
        cfg.inner.enforce_domain = enforce;
      }
      cfg.inner.alpha = ov.get("inner_alpha", cfg.inner.alpha);
      if (overrides.contains("inner_alpha")) cfg.inner.adaptive_alpha = false;
      cfg.inner.tol = ov.get("inner_tol", cfg.inner.tol);
      cfg.inner.max_iter = ov.get("inner_max_iter", cfg.inner.max_iter);
      ov.finish();
      NestedResult r = solve_nested(g, L0, cfg, omega, K_zero);
      out.trace = std::move(r.trace);
      out.met_tolerance = out.trace.converged;
    } else if (name.rfind("ag_", 0) == 0 || name.rfind("gda_", 0) == 0) {
      const bool ag = name[0] == 'a';
      const Flavor flavor = parse_flavor(name.substr(ag ? 3 : 4));
      BaselineConfig cfg =
          BaselineConfig::defaults(ag ? BaselineFamily::AG : BaselineFamily::GDA, flavor);
      cfg.eta = ov.get("eta", cfg.eta);
      cfg.inner_iters = ov.get("inner_iters", cfg.inner_iters);
      cfg.inner_tol = ov.get("inner_tol", cfg.inner_tol);
      cfg.tol = ov.get("tol", cfg.tol);
      cfg.max_outer = ov.get("max_outer", cfg.max_outer);
      ov.finish();
      NestedResult r = run_baseline(g, {K_zero, L0}, cfg);
      out.trace = std::move(r.trace);
      out.met_tolerance = out.trace.converged;
    } else {
      const OuterVariant variant =
          name == "modelfree_ng" ? OuterVariant::NG : OuterVariant::NaturalNG;
      EstimatorConfig est;
      est.m = ov.get<std::size_t>("m", 100);
      est.rollout = ov.get<std::size_t>("rollout", 200);
      est.radius = ov.get("radius", 0.05);
      est.seed = ov.get("seed", seed);
      est.x0 = parse_x0(ov.get<std::string>("x0", "gaussian"));
      ModelFreeInnerConfig inner;
      inner.estimator = est;
      inner.estimator.m = ov.get<std::size_t>("inner_m", 100);
      inner.estimator.rollout = ov.get<std::size_t>("inner_rollout", est.rollout);
      inner.estimator.radius = ov.get("inner_radius", est.radius);
      inner.steps = ov.get<std::size_t>("inner_steps", 2);
      inner.alpha = ov.get("inner_alpha", 0.002);
      inner.method = parse_inner_method(ov.get<std::string>("inner_method", "pg"));
      const std::size_t T = ov.get<std::size_t>("T", 50);
      const double eta = ov.get("eta", variant == OuterVariant::NG ? 1e-3 : 2e-4);
      const double gap_tol = ov.get("gap_tol", 0.05);
      const Projection proj = parse_projection(ov.get<std::string>("projection", "off"));
      ov.finish();
      ModelFreeOuterResult r =
          outer_ng_modelfree(g, L0, K_zero, est, inner, T, eta, variant, omega, proj);
      out.trace = std::move(r.trace);
      out.met_tolerance =
          oracle == nullptr || std::abs(oracle->value - out.trace.rows.back().cost) <= gap_tol;
    }
  } catch (const SolveFailure& e) {
    out.trace = e.trace();
    out.trace.converged = false;
    out.error = e.what();
  } catch (const Error& e) {
    out.trace.converged = false;
    out.error = e.what();
  }
  return out;
}

}  // namespace detail

struct ExperimentSummary {
  std::optional<NashSolution> oracle;
  std::optional<AssumptionReport> assumptions;
  std::vector<RunSummary> runs;
  std::vector<std::string> failed;  // solvers that did not meet their tolerance

  int exit_code() const { return failed.empty() ? 0 : 1; }
};

inline json to_json(const ExperimentSummary& s) {
  json j;
  j["oracle"] = s.oracle ? to_json(*s.oracle) : json(nullptr);
  j["assumptions"] = s.assumptions ? to_json(*s.assumptions) : json(nullptr);
  j["runs"] = json::array();
  for (const auto& r : s.runs) j["runs"].push_back(to_json(r));
  j["failed"] = s.failed;
  return j;
}

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ContractError("cannot write " + p.string());
  out << content;
}

}  // namespace detail

/// Runs every configured solver (concurrently, up to LQGAME_THREADS) and
/// writes per-solver outputs plus summary.json into cfg.output_dir.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const LqGame g = resolve_game(cfg);

  ExperimentSummary summary;
  try {
    summary.oracle = solve_gare(g);
    summary.assumptions = check_assumptions(g, *summary.oracle);
  } catch (const Error&) {
    summary.oracle.reset();
  }
  const NashSolution* oracle = summary.oracle ? &*summary.oracle : nullptr;
  const OmegaSet omega =
      cfg.zeta ? OmegaSet::make(g, *cfg.zeta, oracle) : OmegaSet::with_default_zeta(g, oracle);
  const Mat K_zero = solve_inner_riccati(g, Mat::Zero(g.m2(), g.d()), 1e-12, 100000, false).K;

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  const std::size_t n = cfg.solvers.size();
  std::vector<RunSummary> runs(n);
  std::vector<bool> met(n, false);
  parallel_chunks(n, default_thread_count(), [&](std::size_t i) {
    const std::string& name = cfg.solvers[i];
    const auto it = cfg.overrides.find(name);
    const json ov = it == cfg.overrides.end() ? json::object() : it->second;
    detail::SolverOutcome o = detail::run_one(name, g, omega, K_zero, oracle, cfg.seed, ov);

    std::ostringstream csv;
    write_trace_csv(o.trace, csv);
    detail::write_file(dir / (name + ".csv"), csv.str());

    RunSummary s = summarize(name, o.trace, g, oracle);
    s.converged = o.met_tolerance && o.error.empty();
    s.error = o.error;
    detail::write_file(dir / (name + ".summary.json"), to_json(s).dump(2) + "\n");

    std::istringstream back(csv.str());
    const TracePlots plots =
        plot_trace(read_trace_csv(back), oracle ? std::optional(oracle->value) : std::nullopt, name);
    detail::write_file(dir / (name + "_cost.svg"), plots.cost);
    detail::write_file(dir / (name + "_mapping_norm.svg"), plots.mapping_norm);
    detail::write_file(dir / (name + "_lambda_min_qtilde.svg"), plots.lambda_min_qtilde);

    met[i] = s.converged;
    runs[i] = std::move(s);
  });
  summary.runs = std::move(runs);
  for (std::size_t i = 0; i < n; ++i)
    if (!met[i]) summary.failed.push_back(cfg.solvers[i]);
  detail::write_file(dir / "summary.json", to_json(summary).dump(2) + "\n");
  return summary;
}

}  // namespace lqgame
