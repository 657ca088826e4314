#pragma once

// JSON and CSV serialization: games, policy evaluations, oracle reports,
// run summaries and per-iteration traces.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lqgame/diagnostics.hpp"
#include "lqgame/game.hpp"
#include "lqgame/inner_loop.hpp"
#include "lqgame/modelfree.hpp"
#include "lqgame/outer_loop.hpp"
#include "lqgame/policy.hpp"

namespace lqgame {

using json = nlohmann::json;

inline json mat_to_json(const Mat& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  return arr;
}

inline Mat mat_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!j.is_array()) throw ContractError(std::string(name) + ": expected a numeric array");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw ContractError(std::string(name) + ": non-numeric entry");
    v.push_back(x.get<double>());
  }
  try {
    return make_mat(rows, cols, v);
  } catch (const DimensionError& e) {
    throw DimensionError(std::string(name) + ": " + e.what());
  }
}

inline json game_to_json(const LqGame& g) {
  return json{{"d", g.d()},
              {"m1", g.m1()},
              {"m2", g.m2()},
              {"A", mat_to_json(g.A)},
              {"B", mat_to_json(g.B)},
              {"C", mat_to_json(g.C)},
              {"Q", mat_to_json(g.Q)},
              {"Ru", mat_to_json(g.Ru)},
              {"Rv", mat_to_json(g.Rv)},
              {"Sigma0", mat_to_json(g.Sigma0)}};
}

inline LqGame game_from_json(const json& j) {
  for (const char* key : {"d", "m1", "m2", "A", "B", "C", "Q", "Ru", "Rv", "Sigma0"}) {
    if (!j.contains(key)) throw ContractError(std::string("game JSON is missing '") + key + "'");
  }
  const auto d = j.at("d").get<Eigen::Index>();
  const auto m1 = j.at("m1").get<Eigen::Index>();
  const auto m2 = j.at("m2").get<Eigen::Index>();
  return LqGame(mat_from_json(j.at("A"), d, d, "A"), mat_from_json(j.at("B"), d, m1, "B"),
                mat_from_json(j.at("C"), d, m2, "C"), SymMat(mat_from_json(j.at("Q"), d, d, "Q")),
                SymMat(mat_from_json(j.at("Ru"), m1, m1, "Ru")),
                SymMat(mat_from_json(j.at("Rv"), m2, m2, "Rv")),
                SymMat(mat_from_json(j.at("Sigma0"), d, d, "Sigma0")));
}

inline LqGame load_game(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open game file " + path);
  return game_from_json(json::parse(in));
}

inline void save_game(const LqGame& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ContractError("cannot write " + path);
  out << game_to_json(g).dump(2) << '\n';
}

inline json to_json(const PolicyEval& ev) {
  return json{{"P", mat_to_json(ev.P)},         {"Sigma", mat_to_json(ev.Sigma)},
              {"cost", ev.cost},                {"gradK", mat_to_json(ev.gradK)},
              {"gradL", mat_to_json(ev.gradL)}, {"E", mat_to_json(ev.E)},
              {"F", mat_to_json(ev.F)},         {"rho", ev.rho}};
}

inline json to_json(const NashSolution& s) {
  return json{{"Pstar", mat_to_json(s.Pstar)},
              {"Kstar", mat_to_json(s.Kstar)},
              {"Lstar", mat_to_json(s.Lstar)},
              {"value", s.value},
              {"iterations", s.iterations},
              {"residual", s.residual}};
}

inline json to_json(const AssumptionReport& r) {
  return json{{"rv_margin", r.rv_margin},
              {"ql_margin", r.ql_margin},
              {"part_i_holds", r.part_i_holds},
              {"part_ii_holds", r.part_ii_holds}};
}

inline json to_json(const GradSigmaEstimate& e) {
  return json{{"grad", mat_to_json(e.grad)},
              {"Sigma", mat_to_json(e.Sigma)},
              {"cost_mean", e.cost_mean},
              {"cost_variance", e.cost_variance},
              {"samples", e.samples}};
}

namespace detail {

inline json optional_number(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

inline json to_json(const RunSummary& s) {
  json j{{"solver", s.solver},
         {"converged", s.converged},
         {"iters", s.iters},
         {"final_cost", detail::finite_or_null(s.final_cost)},
         {"gap_to_oracle", detail::optional_number(s.gap_to_oracle)},
         {"gain_error_K", detail::optional_number(s.gain_error_K)},
         {"gain_error_L", detail::optional_number(s.gain_error_L)},
         {"fitted_local_rate", detail::finite_or_null(s.fitted_local_rate)},
         {"fitted_gap_rate", detail::optional_number(s.fitted_gap_rate)},
         {"monotone_cost", s.monotone_cost},
         {"stable_throughout", s.stable_throughout},
         {"cesaro_constant", s.cesaro_constant},
         {"mu", s.mu},
         {"nu", detail::optional_number(s.nu)}};
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

// ---- CSV traces -----------------------------------------------------------

inline constexpr const char* kTraceHeader =
    "t,cost,grad_map_norm,grad_norm,lambda_min_qtilde,rho,proj_active";

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_trace_csv(const OuterTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.rows) {
    out << r.t << ',' << detail::fmt(r.cost) << ',' << detail::fmt(r.grad_map_norm) << ','
        << detail::fmt(r.grad_norm) << ',' << detail::fmt(r.lambda_min_qtilde) << ','
        << detail::fmt(r.rho) << ',' << (r.proj_active ? 1 : 0) << '\n';
  }
}

/// Row of a trace CSV; the gains are not part of the file.
struct TraceCsvRow {
  std::size_t t = 0;
  double cost = 0.0;
  double grad_map_norm = 0.0;
  double grad_norm = 0.0;
  double lambda_min_qtilde = 0.0;
  double rho = 0.0;
  bool proj_active = false;
};

inline std::vector<TraceCsvRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw ContractError("trace CSV: unexpected header");
  }
  std::vector<TraceCsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) {
      throw ContractError("trace CSV line " + std::to_string(lineno) + ": expected 7 fields");
    }
    try {
      TraceCsvRow r;
      r.t = std::stoul(cells[0]);
      r.cost = std::stod(cells[1]);
      r.grad_map_norm = std::stod(cells[2]);
      r.grad_norm = std::stod(cells[3]);
      r.lambda_min_qtilde = std::stod(cells[4]);
      r.rho = std::stod(cells[5]);
      r.proj_active = cells[6] == "1";
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ContractError("trace CSV line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

inline void write_inner_trace_csv(const InnerResult& res, std::ostream& out) {
  out << "iter,cost,grad_norm,rho\n";
  for (const auto& r : res.trace) {
    out << r.iter << ',' << detail::fmt(r.cost) << ',' << detail::fmt(r.grad_norm) << ','
        << detail::fmt(r.rho) << '\n';
  }
}

}  // namespace lqgame
