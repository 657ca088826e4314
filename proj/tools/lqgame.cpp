// lqgame: command-line front end.
//
//   lqgame oracle [--game case1|case2|file.json | --config cfg.json] [--json]
//   lqgame run --config cfg.json [--out dir] [--seed n] [--json]
//   lqgame compare --config cfg.json [--out dir] [--seed n] [--json]

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lqgame/lqgame.hpp"

namespace {

using namespace lqgame;

void print_matrix(const char* name, const Mat& m) {
  std::printf("%s =\n", name);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::printf("  ");
    for (Eigen::Index j = 0; j < m.cols(); ++j) std::printf(" % .8f", m(i, j));
    std::printf("\n");
  }
}

int cmd_oracle(const LqGame& g, bool as_json) {
  const NashSolution sol = solve_gare(g);
  const AssumptionReport rep = check_assumptions(g, sol);
  if (as_json) {
    std::cout << json{{"solution", to_json(sol)}, {"assumptions", to_json(rep)}}.dump(2) << '\n';
    return 0;
  }
  print_matrix("P*", sol.Pstar);
  print_matrix("K*", sol.Kstar);
  print_matrix("L*", sol.Lstar);
  std::printf("value tr(P* Sigma0) = %.10f\n", sol.value);
  std::printf("iterations %zu, residual %.3e\n", sol.iterations, sol.residual);
  std::printf("lambda_min(Rv - C'P*C)    = % .6f (%s)\n", rep.rv_margin,
              rep.part_i_holds ? "holds" : "violated");
  std::printf("lambda_min(Q - L*'Rv L*)  = % .6f (%s)\n", rep.ql_margin,
              rep.part_ii_holds ? "holds" : "violated");
  return 0;
}

void print_table(const ExperimentSummary& s) {
  if (s.oracle) std::printf("oracle value %.10f\n", s.oracle->value);
  std::printf("%-24s %-5s %8s %14s %12s %12s %8s\n", "solver", "ok", "iters", "final_cost", "gap",
              "local_rate", "monotone");
  for (const auto& r : s.runs) {
    std::printf("%-24s %-5s %8zu %14.10f %12.3e %12.4f %8s\n", r.solver.c_str(),
                r.converged ? "yes" : "no", r.iters, r.final_cost,
                r.gap_to_oracle.value_or(std::nan("")), r.fitted_local_rate,
                r.monotone_cost ? "yes" : "no");
    if (!r.error.empty()) std::printf("    error: %s\n", r.error.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-sum LQ game solvers: Riccati oracle and policy-gradient methods"};
  app.require_subcommand(1);

  std::string config_path;
  std::string game_name;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool as_json = false;

  auto* oracle = app.add_subcommand("oracle", "Solve the GARE and report the equilibrium");
  oracle->add_option("--game", game_name, "case1, case2 or a game JSON file");
  oracle->add_option("--config", config_path, "Experiment config (its game is used)");
  oracle->add_flag("--json", as_json, "Machine-readable output");

  auto* run = app.add_subcommand("run", "Run the solvers of a config and write outputs");
  auto* compare =
      app.add_subcommand("compare", "Run the solvers of a config and print a comparison table");
  for (auto* sub : {run, compare}) {
    sub->add_option("--config", config_path, "Experiment config")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    sub->add_option("--seed", seed, "Seed for the sampled solvers (overrides the config)");
    sub->add_flag("--json", as_json, "Print the summary as JSON");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (oracle->parsed()) {
      ExperimentConfig cfg;
      if (!config_path.empty()) cfg = load_experiment_config(config_path);
      if (!game_name.empty()) {
        cfg.game = game_name;
        cfg.base_dir.clear();
      }
      return cmd_oracle(resolve_game(cfg), as_json);
    }
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed) cfg.seed = *seed;
    const ExperimentSummary s = run_experiment(cfg);
    if (as_json) {
      std::cout << to_json(s).dump(2) << '\n';
    } else if (compare->parsed()) {
      print_table(s);
    } else {
      for (const auto& r : s.runs)
        std::printf("%s: %s\n", r.solver.c_str(), r.converged ? "ok" : "FAILED");
      std::printf("outputs written to %s\n", cfg.output_dir.c_str());
    }
    if (!s.failed.empty()) {
      std::fprintf(stderr, "failing solvers:");
      for (const auto& f : s.failed) std::fprintf(stderr, " %s", f.c_str());
      std::fprintf(stderr, "\n");
    }
    return s.exit_code();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
