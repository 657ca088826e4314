#pragma once

// Outer maximization over L with K = K(L) solved in the inner loop: projected
// nested gradient, natural nested gradient and Gauss-Newton nested gradient,
// the constraint set {L : Q - L'Rv L >= zeta I} and its projection.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lqgame/game.hpp"
#include "lqgame/inner_loop.hpp"
#include "lqgame/linalg.hpp"
#include "lqgame/policy.hpp"

namespace lqgame {

enum class OuterVariant { NG, NaturalNG, GaussNewtonNG };
enum class Projection { Off, WhitenedSvClip };

inline const char* to_string(OuterVariant v) {
  switch (v) {
    case OuterVariant::NG: return "ng";
    case OuterVariant::NaturalNG: return "natural_ng";
    case OuterVariant::GaussNewtonNG: return "gauss_newton_ng";
  }
  return "?";
}

/// Omega = {L : Q - L'Rv L >= zeta I}, stored with its bound M = Q - zeta I.
struct OmegaSet {
  double zeta = 0.0;
  SymMat M;

  /// When `oracle` is given and the equilibrium satisfies Q - L*'Rv L* > 0,
  /// zeta must stay below sigma_min of that matrix so Omega contains L*.
  static OmegaSet make(const LqGame& g, double zeta, const NashSolution* oracle = nullptr) {
    if (!(zeta > 0.0)) throw ContractError("Omega: zeta must be positive");
    OmegaSet o;
    o.zeta = zeta;
    o.M = SymMat::symmetrized(g.Q.mat() - zeta * Mat::Identity(g.d(), g.d()));
    const double m_min = min_eigenvalue_sym(o.M);
    if (!(m_min > 0.0)) throw DefinitenessError("Omega: Q - zeta I must be positive definite", m_min);
    if (oracle != nullptr) {
      const double margin = min_eigenvalue_sym(q_tilde(g, oracle->Lstar));
      if (margin > 0.0 && !(zeta < margin)) {
        throw ContractError("Omega: zeta " + std::to_string(zeta) +
                            " excludes the equilibrium gain (margin " + std::to_string(margin) +
                            ")");
      }
    }
    return o;
  }

  /// Half the equilibrium margin when it is positive, else half of lambda_min(Q).
  static OmegaSet with_default_zeta(const LqGame& g, const NashSolution* oracle = nullptr) {
    if (oracle != nullptr) {
      const double margin = min_eigenvalue_sym(q_tilde(g, oracle->Lstar));
      if (margin > 0.0) return make(g, 0.5 * margin, oracle);
    }
    return make(g, 0.5 * min_eigenvalue_sym(g.Q));
  }
};

struct OuterConfig {
  OuterVariant variant = OuterVariant::GaussNewtonNG;
  double eta = 0.1;
  // GaussNewtonNG only: eta = 1 / (2 ||W_L||) recomputed every step.
  bool adaptive_eta = false;
  double tol = 1e-9;  // on the gradient-mapping Frobenius norm
  std::size_t max_iter = 100000;
  InnerConfig inner;
  Projection projection = Projection::Off;

  static OuterConfig defaults(OuterVariant v) {
    OuterConfig c;
    c.variant = v;
    c.inner = InnerConfig::defaults(InnerMethod::GaussNewton);
    c.inner.enforce_domain = false;
    switch (v) {
      case OuterVariant::NG: c.eta = 0.1; break;
      case OuterVariant::NaturalNG: c.eta = 0.05; break;
      case OuterVariant::GaussNewtonNG: c.eta = 0.0; c.adaptive_eta = true; break;
    }
    return c;
  }
};

/// One record per outer iteration (also used by the baseline methods).
struct OuterRow {
  std::size_t t = 0;
  Mat L;
  Mat K;
  double cost = 0.0;
  double grad_map_norm = 0.0;
  double grad_norm = 0.0;    // ||grad_L||
  double grad_norm_K = 0.0;  // ||grad_K|| at the recorded pair
  double lambda_min_qtilde = 0.0;
  bool proj_active = false;
  double rho = 0.0;
};

struct OuterTrace {
  std::vector<OuterRow> rows;
  double mu = 0.0;  // sigma_min(Sigma0)
  bool converged = false;
};

/// A solver failure that carries the trace recorded before it happened.
class SolveFailure : public Error {
 public:
  SolveFailure(const std::string& what, OuterTrace trace)
      : Error(what), trace_(std::move(trace)) {}
  const OuterTrace& trace() const { return trace_; }

 private:
  OuterTrace trace_;
};

/// W_L = Rv - C'[P - PB(Ru + B'PB)^{-1}B'P]C.
inline SymMat w_matrix(const LqGame& g, const SymMat& P, bool require_pd = true) {
  const Mat& p = P.mat();
  const Mat pb = p * g.B;
  const Mat inner = p - pb * (g.Ru.mat() + g.B.transpose() * pb).llt().solve(pb.transpose());
  SymMat w = SymMat::symmetrized(g.Rv.mat() - g.C.transpose() * inner * g.C);
  if (require_pd) {
    const double lo = min_eigenvalue_sym(w);
    if (!(lo > 0.0)) throw DefinitenessError("W_L is not positive definite", lo);
  }
  return w;
}

/// grad_L C(K(L), L) = 2 F Sigma evaluated at the inner solution.
inline Mat nested_gradient(const LqGame& g, const Mat& L, const InnerResult& inner) {
  return evaluate(g, {inner.K, L}).gradL;
}

namespace detail {

struct Projected {
  Mat L;
  bool active = false;
};

inline Projected project_omega_impl(const Mat& L, const OmegaSet& omega, const LqGame& g) {
  const double slack = min_eigenvalue_sym(
      SymMat::symmetrized(omega.M.mat() - L.transpose() * g.Rv.mat() * L));
  if (slack >= -1e-12) return {L, false};
  // Whitened coordinates: L~ = Rv^{1/2} L M^{-1/2}; feasibility is ||L~||_2 <= 1.
  const Mat rv_half = sqrt_psd(g.Rv);
  const Mat rv_ihalf = inv_sqrt_pd(g.Rv);
  const Mat m_half = sqrt_psd(omega.M);
  const Mat m_ihalf = inv_sqrt_pd(omega.M);
  Svd s = svd(rv_half * L * m_ihalf);
  const Vec clipped = s.sigma.cwiseMin(1.0);
  return {rv_ihalf * s.U * clipped.asDiagonal() * s.V.transpose() * m_half, true};
}

}  // namespace detail

/// Projection onto Omega by singular-value clipping in whitened coordinates;
/// the identity on feasible points.
inline Mat project_omega(const Mat& L, const OmegaSet& omega, const LqGame& g) {
  return detail::project_omega_impl(L, omega, g).L;
}

struct OuterStep {
  Mat L_next;
  Mat mapping;  // (L_next - L) / (2 eta)
  double eta = 0.0;
  bool proj_active = false;
};

namespace detail {

inline OuterStep outer_update(const LqGame& g, const Mat& L, const PolicyEval& ev,
                              const OuterConfig& cfg, const OmegaSet* omega) {
  Mat direction;
  double eta = cfg.eta;
  switch (cfg.variant) {
    case OuterVariant::NG:
      direction = ev.gradL;
      break;
    case OuterVariant::NaturalNG:
      direction = 2.0 * ev.F;
      break;
    case OuterVariant::GaussNewtonNG: {
      const SymMat w = w_matrix(g, ev.P);
      direction = 2.0 * w.mat().llt().solve(ev.F);
      if (cfg.adaptive_eta) eta = 1.0 / (2.0 * spectral_norm(w));
      break;
    }
  }
  if (!(eta > 0.0)) throw ContractError("outer stepsize must be positive");
  OuterStep step;
  step.eta = eta;
  Mat candidate = L + eta * direction;
  if (cfg.projection == Projection::WhitenedSvClip) {
    if (omega == nullptr) throw ContractError("projection requested without an Omega set");
    auto p = project_omega_impl(candidate, *omega, g);
    step.L_next = std::move(p.L);
    step.proj_active = p.active;
  } else {
    step.L_next = std::move(candidate);
  }
  step.mapping = (step.L_next - L) / (2.0 * eta);
  return step;
}

}  // namespace detail

inline OuterStep outer_step(const LqGame& g, const Mat& L, const InnerResult& inner,
                            const OuterConfig& cfg, const OmegaSet& omega) {
  const PolicyEval ev = evaluate(g, {inner.K, L});
  return detail::outer_update(g, L, ev, cfg, &omega);
}

struct NestedResult {
  PolicyPair pi;
  OuterTrace trace;
};

namespace detail {

// Inner solve at L warm-started from K; falls back to the Riccati solution
// when K does not stabilize (K, L).
inline InnerResult inner_at(const LqGame& g, const Mat& L, const std::optional<Mat>& warm,
                            const InnerConfig& cfg) {
  if (cfg.method == InnerMethod::Riccati) return solve_inner(g, L, Mat(), cfg);
  if (warm && is_stabilizing(g, *warm, L)) return solve_inner(g, L, *warm, cfg);
  const InnerResult ric = solve_inner_riccati(g, L, 1e-12, 100000, cfg.enforce_domain);
  return solve_inner(g, L, ric.K, cfg);
}

}  // namespace detail

/// Alternates an inner solve for K(L_t) with one projected outer step until
/// the gradient-mapping norm drops to cfg.tol.
///
/// The first inner solve is warm-started from `K0` when given, else from
/// K(0) from the inner Riccati equation; later ones from the previous K(L).
/// Any failure is rethrown as SolveFailure carrying the partial trace.
inline NestedResult solve_nested(const LqGame& g, const Mat& L0, const OuterConfig& cfg,
                                 const OmegaSet& omega, std::optional<Mat> K0 = std::nullopt) {
  if (!(cfg.tol > 0.0)) throw ContractError("outer tol must be positive");
  if (L0.rows() != g.m2() || L0.cols() != g.d()) throw DimensionError("L0 must be m2 x d");
  if (cfg.projection != Projection::Off) {
    const double slack = min_eigenvalue_sym(
        SymMat::symmetrized(omega.M.mat() - L0.transpose() * g.Rv.mat() * L0));
    if (slack < -1e-12) throw ContractError("L0 is not in Omega");
  }

  OuterTrace trace;
  trace.mu = min_singular_value(g.Sigma0);
  std::optional<Mat> warm = std::move(K0);
  if (!warm && cfg.inner.method != InnerMethod::Riccati) {
    try {
      warm = solve_inner_riccati(g, Mat::Zero(g.m2(), g.d()), 1e-12, 100000, false).K;
    } catch (const Error&) {
      warm.reset();
    }
  }

  Mat L = L0;
  for (std::size_t t = 0;; ++t) {
    try {
      const InnerResult inner = detail::inner_at(g, L, warm, cfg.inner);
      const PolicyEval ev = evaluate(g, {inner.K, L});
      OuterStep step = detail::outer_update(g, L, ev, cfg, &omega);

      OuterRow row;
      row.t = t;
      row.L = L;
      row.K = inner.K;
      row.cost = ev.cost;
      row.grad_map_norm = step.mapping.norm();
      row.grad_norm = ev.gradL.norm();
      row.grad_norm_K = ev.gradK.norm();
      row.lambda_min_qtilde = min_eigenvalue_sym(q_tilde(g, L));
      row.proj_active = step.proj_active;
      row.rho = ev.rho;
      trace.rows.push_back(row);
      warm = inner.K;

      if (row.grad_map_norm <= cfg.tol) {
        trace.converged = true;
        return {{inner.K, L}, std::move(trace)};
      }
      if (t >= cfg.max_iter) {
        throw NonConvergenceError("nested outer loop", row.grad_map_norm, t);
      }
      L = std::move(step.L_next);
    } catch (const SolveFailure&) {
      throw;
    } catch (const Error& e) {
      throw SolveFailure(std::string("outer iteration ") + std::to_string(t) + ": " + e.what(),
                         std::move(trace));
    }
  }
}

}  // namespace lqgame
