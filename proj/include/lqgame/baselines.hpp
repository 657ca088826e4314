#pragma once

// Comparison methods without an exact inner solve: alternating gradient (a
// fixed number of K-steps per L-step) and simultaneous gradient
// descent-ascent. No projection; stability is checked at every sub-step.

#include <algorithm>
#include <cstddef>
#include <string>

#include "lqgame/game.hpp"
#include "lqgame/outer_loop.hpp"
#include "lqgame/policy.hpp"

namespace lqgame {

enum class BaselineFamily { AG, GDA };
enum class Flavor { PG, NaturalPG, GaussNewton };

inline const char* to_string(BaselineFamily f) { return f == BaselineFamily::AG ? "ag" : "gda"; }

inline const char* to_string(Flavor f) {
  switch (f) {
    case Flavor::PG: return "pg";
    case Flavor::NaturalPG: return "natural_pg";
    case Flavor::GaussNewton: return "gauss_newton";
  }
  return "?";
}

struct BaselineConfig {
  BaselineFamily family = BaselineFamily::GDA;
  Flavor flavor = Flavor::NaturalPG;
  double eta = 0.1;
  std::size_t inner_iters = 5;  // AG: K-steps per outer step (a cap when inner_tol > 0)
  double inner_tol = 0.0;       // AG: if > 0, stop the K-steps once ||grad_K|| <= inner_tol
  std::size_t max_outer = 100000;
  double tol = 1e-9;  // stop when both ||grad_K|| and ||grad_L|| are below it

  static BaselineConfig defaults(BaselineFamily family, Flavor flavor) {
    BaselineConfig c;
    c.family = family;
    c.flavor = flavor;
    c.eta = flavor == Flavor::GaussNewton ? 0.25 : 0.1;
    return c;
  }
};

namespace detail {

inline Mat descent_direction_K(const LqGame& g, const PolicyEval& ev, Flavor f) {
  switch (f) {
    case Flavor::PG: return ev.gradK;
    case Flavor::NaturalPG: return 2.0 * ev.E;
    case Flavor::GaussNewton:
      return 2.0 * (g.Ru.mat() + g.B.transpose() * ev.P.mat() * g.B).llt().solve(ev.E);
  }
  return {};
}

// The Gauss-Newton ascent step is preconditioned by (Rv - C'PC)^{-1}, the
// negated inverse curvature of C in L; with eta = 1/2 it lands on the
// maximizer's best response to the current K.
inline Mat ascent_direction_L(const LqGame& g, const PolicyEval& ev, Flavor f) {
  switch (f) {
    case Flavor::PG: return ev.gradL;
    case Flavor::NaturalPG: return 2.0 * ev.F;
    case Flavor::GaussNewton: {
      const Mat h = g.Rv.mat() - g.C.transpose() * ev.P.mat() * g.C;
      const double s = min_singular_value(h);
      if (!(s >= 1e-12)) throw DefinitenessError("-Rv + C'PC is singular", s);
      return 2.0 * h.partialPivLu().solve(ev.F);
    }
  }
  return {};
}

inline PolicyEval checked_eval(const LqGame& g, const Mat& K, const Mat& L, const char* where,
                               std::size_t t) {
  try {
    return evaluate(g, {K, L});
  } catch (const InstabilityError& e) {
    throw InstabilityError(e.rho(), where, t);
  }
}

inline OuterRow baseline_row(const LqGame& g, std::size_t t, const Mat& K, const Mat& L,
                             const PolicyEval& ev, const Mat& L_next, double eta) {
  OuterRow row;
  row.t = t;
  row.K = K;
  row.L = L;
  row.cost = ev.cost;
  row.grad_map_norm = (L_next - L).norm() / (2.0 * eta);
  row.grad_norm = ev.gradL.norm();
  row.grad_norm_K = ev.gradK.norm();
  row.lambda_min_qtilde = min_eigenvalue_sym(q_tilde(g, L));
  row.rho = ev.rho;
  return row;
}

inline void validate(const BaselineConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw ContractError("baseline stepsize must be positive");
  if (!(cfg.tol > 0.0)) throw ContractError("baseline tol must be positive");
  if (cfg.family == BaselineFamily::AG && cfg.inner_iters == 0)
    throw ContractError("AG needs at least one inner iteration");
}

}  // namespace detail

/// Alternating gradient: inner_iters K-descent steps at fixed L_t, then one
/// L-ascent step at (K_T, L_t), both with the configured flavor.
inline NestedResult run_ag(const LqGame& g, const PolicyPair& pi0, const BaselineConfig& cfg) {
  detail::validate(cfg);
  check_gain_dims(g, pi0.K, pi0.L);
  OuterTrace trace;
  trace.mu = min_singular_value(g.Sigma0);
  Mat K = pi0.K;
  Mat L = pi0.L;
  for (std::size_t t = 0;; ++t) {
    try {
      PolicyEval ev = detail::checked_eval(g, K, L, "AG outer", t);
      if (ev.gradK.norm() <= cfg.tol && ev.gradL.norm() <= cfg.tol) {
        const Mat L_next = L + cfg.eta * detail::ascent_direction_L(g, ev, cfg.flavor);
        trace.rows.push_back(detail::baseline_row(g, t, K, L, ev, L_next, cfg.eta));
        trace.converged = true;
        return {{K, L}, std::move(trace)};
      }
      for (std::size_t tau = 0; tau < cfg.inner_iters; ++tau) {
        if (cfg.inner_tol > 0.0 && ev.gradK.norm() <= cfg.inner_tol) break;
        K = K - cfg.eta * detail::descent_direction_K(g, ev, cfg.flavor);
        ev = detail::checked_eval(g, K, L, "AG inner", t);
      }
      const Mat L_next = L + cfg.eta * detail::ascent_direction_L(g, ev, cfg.flavor);
      trace.rows.push_back(detail::baseline_row(g, t, K, L, ev, L_next, cfg.eta));
      if (t >= cfg.max_outer) throw NonConvergenceError("AG", ev.gradL.norm(), t);
      L = L_next;
    } catch (const Error& e) {
      throw SolveFailure(std::string("AG iteration ") + std::to_string(t) + ": " + e.what(),
                         std::move(trace));
    }
  }
}

/// Simultaneous descent in K and ascent in L from the same evaluation.
inline NestedResult run_gda(const LqGame& g, const PolicyPair& pi0, const BaselineConfig& cfg) {
  detail::validate(cfg);
  check_gain_dims(g, pi0.K, pi0.L);
  OuterTrace trace;
  trace.mu = min_singular_value(g.Sigma0);
  Mat K = pi0.K;
  Mat L = pi0.L;
  for (std::size_t t = 0;; ++t) {
    try {
      const PolicyEval ev = detail::checked_eval(g, K, L, "GDA", t);
      if (ev.gradK.norm() <= cfg.tol && ev.gradL.norm() <= cfg.tol) {
        const Mat L_next = L + cfg.eta * detail::ascent_direction_L(g, ev, cfg.flavor);
        trace.rows.push_back(detail::baseline_row(g, t, K, L, ev, L_next, cfg.eta));
        trace.converged = true;
        return {{K, L}, std::move(trace)};
      }
      const Mat K_next = K - cfg.eta * detail::descent_direction_K(g, ev, cfg.flavor);
      const Mat L_next = L + cfg.eta * detail::ascent_direction_L(g, ev, cfg.flavor);
      trace.rows.push_back(detail::baseline_row(g, t, K, L, ev, L_next, cfg.eta));
      if (t >= cfg.max_outer) {
        throw NonConvergenceError("GDA", std::max(ev.gradK.norm(), ev.gradL.norm()), t);
      }
      K = K_next;
      L = L_next;
    } catch (const Error& e) {
      throw SolveFailure(std::string("GDA iteration ") + std::to_string(t) + ": " + e.what(),
                         std::move(trace));
    }
  }
}

inline NestedResult run_baseline(const LqGame& g, const PolicyPair& pi0,
                                 const BaselineConfig& cfg) {
  return cfg.family == BaselineFamily::AG ? run_ag(g, pi0, cfg) : run_gda(g, pi0, cfg);
}

}  // namespace lqgame
