#pragma once

#include <cstddef>

#include "lqgame/game.hpp"
#include "lqgame/linalg.hpp"

namespace lqgame {

/// Linear feedback pair u = -Kx (minimizer), v = -Lx (maximizer).
struct PolicyPair {
  Mat K;
  Mat L;
};

/// Everything derived from a stabilizing pair (K, L).
struct PolicyEval {
  SymMat P;      // value matrix, cost = E x0'P x0
  SymMat Sigma;  // sum_t E x_t x_t'
  double cost = 0.0;
  Mat gradK;  // 2 E Sigma
  Mat gradL;  // 2 F Sigma
  Mat E;      // (Ru + B'PB)K - B'P(A - CL)
  Mat F;      // (-Rv + C'PC)L - C'P(A - BK)
  double rho = 0.0;
};

/// Pairs with spectral radius in [1 - kStabilityMargin, 1) are treated as
/// unstable.
inline constexpr double kStabilityMargin = 1e-9;

inline Mat closed_loop(const LqGame& g, const Mat& K, const Mat& L) {
  return g.A - g.B * K - g.C * L;
}

inline void check_gain_dims(const LqGame& g, const Mat& K, const Mat& L) {
  if (K.rows() != g.m1() || K.cols() != g.d())
    throw DimensionError("K must be m1 x d");
  if (L.rows() != g.m2() || L.cols() != g.d())
    throw DimensionError("L must be m2 x d");
}

inline bool is_stabilizing(const LqGame& g, const Mat& K, const Mat& L) {
  return spectral_radius(closed_loop(g, K, L)) < 1.0 - kStabilityMargin;
}

/// Q + K'Ru K - L'Rv L.
inline SymMat stage_weight(const LqGame& g, const Mat& K, const Mat& L) {
  return SymMat::symmetrized(g.Q.mat() + K.transpose() * g.Ru.mat() * K -
                             L.transpose() * g.Rv.mat() * L);
}

/// Q - L'Rv L, the effective state weight of the inner minimization.
inline SymMat q_tilde(const LqGame& g, const Mat& L) {
  return SymMat::symmetrized(g.Q.mat() - L.transpose() * g.Rv.mat() * L);
}

inline PolicyEval evaluate(const LqGame& g, const PolicyPair& pi) {
  check_gain_dims(g, pi.K, pi.L);
  const Mat acl = closed_loop(g, pi.K, pi.L);
  PolicyEval ev;
  ev.rho = spectral_radius(acl);
  if (!(ev.rho < 1.0 - kStabilityMargin)) throw InstabilityError(ev.rho, "policy evaluation");

  ev.P = solve_dlyap_transpose(acl, stage_weight(g, pi.K, pi.L));
  ev.Sigma = solve_dlyap(acl, g.Sigma0);
  ev.cost = (ev.P.mat() * g.Sigma0.mat()).trace();

  const Mat& P = ev.P.mat();
  ev.E = (g.Ru.mat() + g.B.transpose() * P * g.B) * pi.K - g.B.transpose() * P * (g.A - g.C * pi.L);
  ev.F = (-g.Rv.mat() + g.C.transpose() * P * g.C) * pi.L -
         g.C.transpose() * P * (g.A - g.B * pi.K);
  ev.gradK = 2.0 * ev.E * ev.Sigma.mat();
  ev.gradL = 2.0 * ev.F * ev.Sigma.mat();
  return ev;
}

/// Truncated-horizon cost tr(sum_{t<T} (Acl')^t W Acl^t Sigma0); defined for
/// any pair, stable or not.
inline double cost_finite_horizon(const LqGame& g, const PolicyPair& pi, std::size_t horizon) {
  check_gain_dims(g, pi.K, pi.L);
  const Mat acl = closed_loop(g, pi.K, pi.L);
  const Mat w = stage_weight(g, pi.K, pi.L).mat();
  Mat s = g.Sigma0.mat();
  double total = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    total += (w * s).trace();
    s = acl * s * acl.transpose();
  }
  return total;
}

struct StationarityReport {
  bool stationary = false;
  double gradK_norm = 0.0;
  double gradL_norm = 0.0;
  double P_min_eig = 0.0;
  double Sigma_min_eig = 0.0;
  double rv_block_min_sv = 0.0;  // sigma_min(-Rv + C'PC)
};

/// Sufficient conditions for (K, L) to be the Nash equilibrium: vanishing
/// gradients, P > 0, full-rank Sigma and invertible -Rv + C'PC.
inline StationarityReport check_stationary(const LqGame& g, const PolicyPair& pi, double tol) {
  const PolicyEval ev = evaluate(g, pi);
  StationarityReport r;
  r.gradK_norm = ev.gradK.norm();
  r.gradL_norm = ev.gradL.norm();
  r.P_min_eig = min_eigenvalue_sym(ev.P);
  r.Sigma_min_eig = min_eigenvalue_sym(ev.Sigma);
  r.rv_block_min_sv = min_singular_value(-g.Rv.mat() + g.C.transpose() * ev.P.mat() * g.C);
  r.stationary = r.gradK_norm <= tol && r.gradL_norm <= tol && r.P_min_eig > 0.0 &&
                 r.Sigma_min_eig >= 1e-12 && r.rv_block_min_sv >= 1e-12;
  return r;
}

}  // namespace lqgame
