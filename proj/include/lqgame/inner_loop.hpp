#pragma once

// Inner minimization: for a fixed maximizer gain L, find the minimizer's best
// response K(L), either by the inner Riccati recursion or by policy-gradient,
// natural-gradient or Gauss-Newton iterations on K.

#include <cstddef>
#include <string>
#include <vector>

#include "lqgame/game.hpp"
#include "lqgame/linalg.hpp"
#include "lqgame/policy.hpp"

namespace lqgame {

enum class InnerMethod { PG, NaturalPG, GaussNewton, Riccati };

inline const char* to_string(InnerMethod m) {
  switch (m) {
    case InnerMethod::PG: return "pg";
    case InnerMethod::NaturalPG: return "natural_pg";
    case InnerMethod::GaussNewton: return "gauss_newton";
    case InnerMethod::Riccati: return "riccati";
  }
  return "?";
}

struct InnerConfig {
  InnerMethod method = InnerMethod::GaussNewton;
  double alpha = 0.5;
  // NaturalPG only: alpha = 1 / (2 ||Ru + B'PB||) recomputed every step.
  bool adaptive_alpha = false;
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  // Reject L outside {L : Q - L'Rv L > 0} up front.
  bool enforce_domain = true;

  static InnerConfig defaults(InnerMethod m) {
    InnerConfig c;
    c.method = m;
    switch (m) {
      case InnerMethod::PG: c.alpha = 1e-3; break;
      case InnerMethod::NaturalPG: c.alpha = 0.0; c.adaptive_alpha = true; break;
      case InnerMethod::GaussNewton: c.alpha = 0.5; break;
      case InnerMethod::Riccati: c.alpha = 0.0; c.tol = 1e-12; break;
    }
    return c;
  }
};

struct InnerTraceRow {
  std::size_t iter = 0;
  double cost = 0.0;
  double grad_norm = 0.0;
  double rho = 0.0;
};

struct InnerResult {
  Mat K;
  SymMat P;
  std::size_t iterations = 0;
  double final_grad_norm = 0.0;
  std::vector<InnerTraceRow> trace;
};

inline void require_inner_domain(const LqGame& g, const Mat& L) {
  const double margin = min_eigenvalue_sym(q_tilde(g, L));
  if (!(margin > 0.0)) {
    throw DomainError("Q - L'Rv L is not positive definite (lambda_min " +
                      std::to_string(margin) + ")");
  }
}

/// Fixed-point iteration of the inner Riccati equation
///   P = Qt + At'P At - At'P B (Ru + B'PB)^{-1} B'P At,  At = A - CL,
/// from P = Qt = Q - L'Rv L, followed by K(L) = (Ru + B'PB)^{-1} B'P At.
inline InnerResult solve_inner_riccati(const LqGame& g, const Mat& L, double tol = 1e-12,
                                       std::size_t max_iter = 100000,
                                       bool enforce_domain = true) {
  if (L.rows() != g.m2() || L.cols() != g.d()) throw DimensionError("L must be m2 x d");
  if (enforce_domain) require_inner_domain(g, L);
  const Mat qt = q_tilde(g, L).mat();
  const Mat at = g.A - g.C * L;
  Mat P = qt;
  double residual = 0.0;
  std::size_t it = 0;
  for (;; ++it) {
    if (it >= max_iter) throw NonConvergenceError("inner Riccati iteration", residual, it);
    const Mat bp = g.B.transpose() * P;
    const Mat m = g.Ru.mat() + bp * g.B;
    const Mat pat = P * at;
    Mat next = qt + at.transpose() * pat - (bp * at).transpose() * m.llt().solve(bp * at);
    next = 0.5 * (next + next.transpose());
    residual = (next - P).norm();
    P = std::move(next);
    if (!P.allFinite()) throw NumericalError("inner Riccati iterate diverged", it + 1);
    if (residual <= tol) {
      ++it;
      break;
    }
  }
  InnerResult res;
  const Mat bp = g.B.transpose() * P;
  res.K = (g.Ru.mat() + bp * g.B).llt().solve(bp * at);
  const double rho = spectral_radius(closed_loop(g, res.K, L));
  if (!(rho < 1.0 - kStabilityMargin)) {
    throw SolutionRejectedError("inner Riccati solution is not stabilizing (rho " +
                                std::to_string(rho) + ")");
  }
  res.P = SymMat::symmetrized(P);
  res.iterations = it;
  const PolicyEval ev = evaluate(g, {res.K, L});
  res.final_grad_norm = ev.gradK.norm();
  res.trace.push_back({it, ev.cost, res.final_grad_norm, ev.rho});
  return res;
}

namespace detail {

inline double natural_pg_alpha(const LqGame& g, const PolicyEval& ev, const InnerConfig& cfg) {
  if (!cfg.adaptive_alpha) return cfg.alpha;
  return 1.0 / (2.0 * spectral_norm(g.Ru.mat() + g.B.transpose() * ev.P.mat() * g.B));
}

// One K update given the evaluation at (K, L).
inline Mat inner_update(const LqGame& g, const Mat& K, const PolicyEval& ev,
                        const InnerConfig& cfg) {
  switch (cfg.method) {
    case InnerMethod::PG:
      return K - cfg.alpha * ev.gradK;
    case InnerMethod::NaturalPG:
      return K - 2.0 * natural_pg_alpha(g, ev, cfg) * ev.E;
    case InnerMethod::GaussNewton: {
      const Mat m = g.Ru.mat() + g.B.transpose() * ev.P.mat() * g.B;
      return K - 2.0 * cfg.alpha * m.llt().solve(ev.E);
    }
    case InnerMethod::Riccati:
      break;
  }
  throw ContractError("inner_step requires a gradient-based method");
}

inline void validate(const InnerConfig& cfg) {
  if (!(cfg.tol > 0.0)) throw ContractError("inner tol must be positive");
  const bool needs_alpha =
      cfg.method != InnerMethod::Riccati &&
      !(cfg.method == InnerMethod::NaturalPG && cfg.adaptive_alpha);
  if (needs_alpha && !(cfg.alpha > 0.0)) throw ContractError("inner stepsize must be positive");
}

}  // namespace detail

/// One inner update K -> K'.
inline Mat inner_step(const LqGame& g, const Mat& K, const Mat& L, const InnerConfig& cfg) {
  detail::validate(cfg);
  const PolicyEval ev = evaluate(g, {K, L});
  return detail::inner_update(g, K, ev, cfg);
}

/// Iterates inner_step from K0 until ||grad_K C|| <= cfg.tol. Every iterate is
/// checked for stability; losing it raises InstabilityError with the index.
inline InnerResult solve_inner(const LqGame& g, const Mat& L, const Mat& K0,
                               const InnerConfig& cfg) {
  detail::validate(cfg);
  if (cfg.method == InnerMethod::Riccati) {
    return solve_inner_riccati(g, L, cfg.tol, cfg.max_iter, cfg.enforce_domain);
  }
  check_gain_dims(g, K0, L);
  if (cfg.enforce_domain) require_inner_domain(g, L);

  InnerResult res;
  Mat K = K0;
  for (std::size_t it = 0;; ++it) {
    PolicyEval ev;
    try {
      ev = evaluate(g, {K, L});
    } catch (const InstabilityError& e) {
      throw InstabilityError(e.rho(), "inner loop", it);
    }
    const double gn = ev.gradK.norm();
    res.trace.push_back({it, ev.cost, gn, ev.rho});
    if (gn <= cfg.tol) {
      res.K = std::move(K);
      res.P = ev.P;
      res.iterations = it;
      res.final_grad_norm = gn;
      return res;
    }
    if (it >= cfg.max_iter) throw NonConvergenceError("inner gradient loop", gn, it);
    K = detail::inner_update(g, K, ev, cfg);
  }
}

}  // namespace lqgame
