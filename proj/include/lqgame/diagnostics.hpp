#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lqgame/game.hpp"
#include "lqgame/outer_loop.hpp"

namespace lqgame {

/// Least-squares slope of log(values[i]) against i over the trailing run of
/// positive entries, at most `window` long. NaN with fewer than two points.
inline double fit_log_slope(std::span<const double> values, std::size_t window = 20) {
  std::vector<double> ys;
  for (std::size_t i = values.size(); i-- > 0 && ys.size() < window;) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) break;
    ys.push_back(std::log(values[i]));
  }
  const std::size_t n = ys.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  // ys is reversed in time; x = n - 1 - k restores the order.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = static_cast<double>(n - 1 - k);
    sx += x;
    sy += ys[k];
    sxx += x * x;
    sxy += x * ys[k];
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

/// True when costs never drop by more than `slack` between rows.
inline bool cost_monotone_nondecreasing(const OuterTrace& trace, double slack = 1e-9) {
  for (std::size_t i = 1; i < trace.rows.size(); ++i)
    if (trace.rows[i].cost < trace.rows[i - 1].cost - slack) return false;
  return true;
}

struct RunSummary {
  std::string solver;
  bool converged = false;
  std::size_t iters = 0;
  double final_cost = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> gap_to_oracle;  // |C* - final cost|
  std::optional<double> gain_error_K;
  std::optional<double> gain_error_L;
  double fitted_local_rate = std::numeric_limits<double>::quiet_NaN();  // log mapping norm
  std::optional<double> fitted_gap_rate;  // log(C* - C_t) over rows with gap <= 1e-3
  bool monotone_cost = true;
  bool stable_throughout = true;
  double cesaro_constant = 0.0;  // max_t sum_{s<=t} ||G_s||^2
  double mu = 0.0;
  std::optional<double> nu;  // sigma_min(W_{L*})
  std::string error;
};

inline RunSummary summarize(const std::string& solver, const OuterTrace& trace, const LqGame& g,
                            const NashSolution* oracle) {
  RunSummary s;
  s.solver = solver;
  s.converged = trace.converged;
  s.iters = trace.rows.empty() ? 0 : trace.rows.back().t;
  s.mu = trace.mu;
  s.monotone_cost = cost_monotone_nondecreasing(trace);

  std::vector<double> mapping;
  double running = 0.0;
  for (const auto& r : trace.rows) {
    mapping.push_back(r.grad_map_norm);
    running += r.grad_map_norm * r.grad_map_norm;
    s.cesaro_constant = std::max(s.cesaro_constant, running);
    if (!(r.rho < 1.0)) s.stable_throughout = false;
  }
  s.fitted_local_rate = fit_log_slope(mapping);

  if (!trace.rows.empty()) {
    const auto& last = trace.rows.back();
    s.final_cost = last.cost;
    if (oracle != nullptr) {
      s.gap_to_oracle = std::abs(oracle->value - last.cost);
      s.gain_error_K = (last.K - oracle->Kstar).norm();
      s.gain_error_L = (last.L - oracle->Lstar).norm();
    }
  }
  if (oracle != nullptr) {
    try {
      s.nu = min_singular_value(w_matrix(g, oracle->Pstar, false));
    } catch (const Error&) {
    }
    std::vector<double> gaps;
    for (const auto& r : trace.rows) {
      const double gap = oracle->value - r.cost;
      if (gap <= 1e-3) gaps.push_back(gap);
    }
    const double rate = fit_log_slope(gaps);
    if (std::isfinite(rate)) s.fitted_gap_rate = rate;
  }
  return s;
}

}  // namespace lqgame
