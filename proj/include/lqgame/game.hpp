#pragma once

#include <cstddef>
#include <limits>
#include <string>

#include "lqgame/errors.hpp"
#include "lqgame/linalg.hpp"

namespace lqgame {

/// Zero-sum LQ game x' = Ax + Bu + Cv with stage cost
/// x'Qx + u'Ru u - v'Rv v and initial-state second moment Sigma0.
/// u is the minimizer's input, v the maximizer's.
struct LqGame {
  Mat A, B, C;
  SymMat Q, Ru, Rv, Sigma0;

  LqGame(Mat a, Mat b, Mat c, SymMat q, SymMat ru, SymMat rv, SymMat sigma0)
      : A(std::move(a)), B(std::move(b)), C(std::move(c)), Q(std::move(q)), Ru(std::move(ru)),
        Rv(std::move(rv)), Sigma0(std::move(sigma0)) {
    validate();
  }

  Eigen::Index d() const { return A.rows(); }
  Eigen::Index m1() const { return B.cols(); }
  Eigen::Index m2() const { return C.cols(); }

 private:
  void validate() const {
    require_square(A, "A");
    require_finite(A, "A");
    require_finite(B, "B");
    require_finite(C, "C");
    const auto n = A.rows();
    if (B.rows() != n) throw DimensionError("B must have d rows");
    if (C.rows() != n) throw DimensionError("C must have d rows");
    if (Q.size() != n || Sigma0.size() != n) throw DimensionError("Q and Sigma0 must be d x d");
    if (Ru.size() != B.cols()) throw DimensionError("Ru must be m1 x m1");
    if (Rv.size() != C.cols()) throw DimensionError("Rv must be m2 x m2");
    auto require_pd = [](const SymMat& m, const char* name) {
      const double lo = min_eigenvalue_sym(m);
      if (!(lo > 0.0)) throw DefinitenessError(std::string(name) + " must be positive definite", lo);
    };
    require_pd(Q, "Q");
    require_pd(Ru, "Ru");
    require_pd(Rv, "Rv");
    require_pd(Sigma0, "Sigma0");
  }
};

struct NashSolution {
  SymMat Pstar;
  Mat Kstar;
  Mat Lstar;
  double value = 0.0;  // tr(P* Sigma0)
  std::size_t iterations = 0;
  double residual = 0.0;
};

struct AssumptionReport {
  double rv_margin = 0.0;  // lambda_min(Rv - C'P*C)
  double ql_margin = 0.0;  // lambda_min(Q - L*'Rv L*)
  bool part_i_holds = false;
  bool part_ii_holds = false;
};

struct GareOptions {
  double tol = 1e-12;  // on ||P_{k+1} - P_k||_F
  std::size_t max_iter = 100000;
};

namespace detail {

struct SaddleGains {
  Mat K;
  Mat L;
};

// Gains from the 2x2 block system
//   [Ru + B'PB   B'PC       ] [K]   [B'PA]
//   [C'PB        -Rv + C'PC ] [L] = [C'PA]
// eliminated by Schur complements on each diagonal block.
inline SaddleGains saddle_gains(const LqGame& g, const Mat& P) {
  const Mat PA = P * g.A;
  const Mat PB = P * g.B;
  const Mat PC = P * g.C;
  const Mat m11 = g.Ru.mat() + g.B.transpose() * PB;
  const Mat m12 = g.B.transpose() * PC;
  const Mat m22 = -g.Rv.mat() + g.C.transpose() * PC;
  const Mat bpa = g.B.transpose() * PA;
  const Mat cpa = g.C.transpose() * PA;

  auto guard = [](const Mat& m, const char* what) {
    const double s = min_singular_value(m);
    if (!(s > 1e-12 * (1.0 + m.norm()))) throw DefinitenessError(what, s);
  };
  guard(m22, "Riccati block -Rv + C'PC is singular");
  guard(m11, "Riccati block Ru + B'PB is singular");

  Eigen::PartialPivLU<Mat> m22_lu(m22);
  Eigen::PartialPivLU<Mat> m11_lu(m11);
  const Mat schur_k = m11 - m12 * m22_lu.solve(m12.transpose());
  const Mat schur_l = m22 - m12.transpose() * m11_lu.solve(m12);
  guard(schur_k, "Riccati block matrix is singular (Schur complement of the v-block)");
  guard(schur_l, "Riccati block matrix is singular (Schur complement of the u-block)");

  SaddleGains out;
  out.K = schur_k.partialPivLu().solve(bpa - m12 * m22_lu.solve(cpa));
  out.L = schur_l.partialPivLu().solve(cpa - m12.transpose() * m11_lu.solve(bpa));
  return out;
}

inline Mat gare_map(const LqGame& g, const Mat& P, const SaddleGains& gains) {
  const Mat PA = P * g.A;
  return g.Q.mat() + g.A.transpose() * PA - PA.transpose() * (g.B * gains.K + g.C * gains.L);
}

}  // namespace detail

/// Residual ||P - GARE(P)||_F.
inline double gare_residual(const LqGame& g, const SymMat& P) {
  const auto gains = detail::saddle_gains(g, P);
  return (P.mat() - detail::gare_map(g, P, gains)).norm();
}

/// Value iteration on the game algebraic Riccati equation starting from
/// P = Q; the result is validated by closed-loop stability.
inline NashSolution solve_gare(const LqGame& g, const GareOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw ContractError("solve_gare: tol must be positive");
  Mat P = g.Q.mat();
  double residual = 0.0;
  double prev_residual = 0.0;
  std::size_t it = 0;
  for (;; ++it) {
    if (it >= opt.max_iter) throw NonConvergenceError("GARE value iteration", residual, it);
    const auto gains = detail::saddle_gains(g, P);
    Mat next = detail::gare_map(g, P, gains);
    next = 0.5 * (next + next.transpose());
    residual = (next - P).norm();
    P = std::move(next);
    if (!P.allFinite()) throw NumericalError("GARE iterate diverged", it + 1);
    // Stop once both the step and the distance to the fixed point it implies
    // under the observed contraction q are below tol, or at rounding level.
    const double q = it > 0 ? residual / prev_residual : 1.0;
    const double distance = q < 1.0 ? residual * q / (1.0 - q) : residual;
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + P.norm());
    prev_residual = residual;
    if ((residual <= opt.tol && distance <= opt.tol) || residual <= floor) {
      ++it;
      break;
    }
  }

  NashSolution sol;
  sol.Pstar = SymMat::symmetrized(P);
  const auto gains = detail::saddle_gains(g, sol.Pstar);
  sol.Kstar = gains.K;
  sol.Lstar = gains.L;
  sol.value = (sol.Pstar.mat() * g.Sigma0.mat()).trace();
  sol.iterations = it;
  sol.residual = (sol.Pstar.mat() - detail::gare_map(g, sol.Pstar, gains)).norm();
  const double rho = spectral_radius(g.A - g.B * sol.Kstar - g.C * sol.Lstar);
  if (!(rho < 1.0)) {
    throw SolutionRejectedError("GARE solution rejected: closed loop spectral radius " +
                                std::to_string(rho));
  }
  return sol;
}

inline AssumptionReport check_assumptions(const LqGame& g, const NashSolution& sol) {
  AssumptionReport r;
  r.rv_margin = min_eigenvalue_sym(
      SymMat::symmetrized(g.Rv.mat() - g.C.transpose() * sol.Pstar.mat() * g.C));
  r.ql_margin = min_eigenvalue_sym(
      SymMat::symmetrized(g.Q.mat() - sol.Lstar.transpose() * g.Rv.mat() * sol.Lstar));
  r.part_i_holds = r.rv_margin > 0.0;
  r.part_ii_holds = r.ql_margin > 0.0;
  return r;
}

namespace detail {

inline Mat benchmark_a() {
  return make_mat(3, 3,
                  {0.956488, 0.0816012, -0.0005,  //
                   0.0741349, 0.94121, -0.000708383,  //
                   0.0, 0.0, 0.132655});
}

inline Mat benchmark_b() { return make_mat(3, 1, {-0.00550808, -0.096, 0.867345}); }

}  // namespace detail

/// Three-state benchmark where the maximizer's equilibrium gain satisfies
/// Q - L*'Rv L* > 0.
inline LqGame case1() {
  return LqGame(detail::benchmark_a(), detail::benchmark_b(),
                make_mat(3, 1, {0.00951892, 0.0038373, 0.001}), SymMat::identity(3),
                SymMat::identity(1), SymMat::identity(1), SymMat(0.03 * Mat::Identity(3, 3)));
}

/// Same plant with a stronger disturbance channel and Q = 0.01 I; here
/// Q - L*'Rv L* is slightly indefinite.
inline LqGame case2() {
  return LqGame(detail::benchmark_a(), detail::benchmark_b(),
                make_mat(3, 1, {0.00951892, 0.0038373, 0.2}), SymMat(0.01 * Mat::Identity(3, 3)),
                SymMat::identity(1), SymMat::identity(1), SymMat(0.03 * Mat::Identity(3, 3)));
}

}  // namespace lqgame
