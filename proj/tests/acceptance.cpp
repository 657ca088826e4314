// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"

using namespace lqgame;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const double kCase1P[9] = {23.7658, 16.8959, 0.0937, 16.8959, 18.4645,
                           0.1014,  0.0937,  0.1014, 1.0107};
const double kCase2P[9] = {6.0173, 5.6702, -0.0071, 5.6702, 5.4213,
                           -0.0067, -0.0071, -0.0067, 0.0102};

Mat random_inner_l(std::mt19937_64& rng, const LqGame& g) {
  const double scale = std::sqrt(min_eigenvalue_sym(g.Q)) * 0.3;
  for (;;) {
    const Mat l = lqtest::random_mat(rng, g.m2(), g.d(), scale);
    if (min_eigenvalue_sym(q_tilde(g, l)) > 0.0) return l;
  }
}

double inner_riccati_residual(const LqGame& g, const Mat& L, const Mat& P) {
  const Mat at = g.A - g.C * L;
  const Mat bp = g.B.transpose() * P;
  const Mat m = g.Ru.mat() + bp * g.B;
  const Mat rhs = q_tilde(g, L).mat() + at.transpose() * P * at -
                  (bp * at).transpose() * m.llt().solve(bp * at);
  return (P - rhs).norm();
}

Outcome gare_regression() {
  Outcome o;
  for (int c = 0; c < 2; ++c) {
    const auto t0 = std::chrono::steady_clock::now();
    const NashSolution s = solve_gare(c == 0 ? case1() : case2());
    const double dt = seconds_since(t0);
    const double* ref = c == 0 ? kCase1P : kCase2P;
    double worst = 0.0;
    for (int i = 0; i < 9; ++i) worst = std::max(worst, std::abs(s.Pstar.mat()(i / 3, i % 3) - ref[i]));
    o.require(worst <= 5e-4, "case " + std::to_string(c + 1) + " max entry error " + fmt("%.2e", worst));
    o.require(dt < 1.0, "case " + std::to_string(c + 1) + " took " + fmt("%.2f s", dt));
    if (o.ok) o.detail += "case" + std::to_string(c + 1) + " max|dP| " + fmt("%.1e", worst) + "; ";
  }
  return o;
}

Outcome assumption_margins() {
  Outcome o;
  const AssumptionReport r1 = check_assumptions(case1(), solve_gare(case1()));
  const AssumptionReport r2 = check_assumptions(case2(), solve_gare(case2()));
  o.require(std::abs(r1.ql_margin - 0.8739) <= 1e-3, "case1 ql_margin " + fmt("%.5f", r1.ql_margin));
  o.require(std::abs(r2.ql_margin + 0.0011) <= 5e-4, "case2 ql_margin " + fmt("%.5f", r2.ql_margin));
  o.require(r1.rv_margin > 0.0 && r2.rv_margin > 0.0, "rv_margin not positive");
  if (o.ok) o.detail = "ql " + fmt("%.4f", r1.ql_margin) + " / " + fmt("%.4f", r2.ql_margin);
  return o;
}

Outcome gradient_correctness() {
  Outcome o;
  std::mt19937_64 rng(7);
  const double h = 1e-5;
  double worst = 0.0;
  for (const LqGame& g : {case1(), case2()}) {
    for (int k = 0; k < 20; ++k) {
      const PolicyPair pi = lqtest::random_stable_pair(rng, g, 0.3);
      const PolicyEval ev = evaluate(g, pi);
      const Mat fk = lqtest::central_diff(
          [&](const Mat& K) { return evaluate(g, {K, pi.L}).cost; }, pi.K, h);
      const Mat fl = lqtest::central_diff(
          [&](const Mat& L) { return evaluate(g, {pi.K, L}).cost; }, pi.L, h);
      // Relative error with the denominator floored so that 1e-5 relative
      // corresponds to an absolute floor of 1e-8.
      for (Eigen::Index j = 0; j < g.d(); ++j) {
        const double ek =
            std::abs(fk(0, j) - ev.gradK(0, j)) / std::max(1e-3, std::abs(ev.gradK(0, j)));
        const double el =
            std::abs(fl(0, j) - ev.gradL(0, j)) / std::max(1e-3, std::abs(ev.gradL(0, j)));
        worst = std::max({worst, ek, el});
      }
    }
  }
  o.require(worst <= 1e-5, "worst relative error " + fmt("%.2e", worst));
  if (o.ok) o.detail = "40 pairs, worst rel err " + fmt("%.1e", worst);
  return o;
}

Outcome inner_equivalence() {
  Outcome o;
  std::mt19937_64 rng(17);
  double worst_k = 0.0, worst_slope = -1e300;
  for (const LqGame& g : {case1(), case2()}) {
    const Mat k_start = lqtest::k_zero(g);
    for (int k = 0; k < 10; ++k) {
      const Mat l = random_inner_l(rng, g);
      const InnerResult ric = solve_inner_riccati(g, l);
      for (InnerMethod m : {InnerMethod::PG, InnerMethod::NaturalPG, InnerMethod::GaussNewton}) {
        InnerConfig c = InnerConfig::defaults(m);
        if (m == InnerMethod::PG) c.alpha = 0.5;
        c.tol = 1e-8;
        const InnerResult r = solve_inner(g, l, k_start, c);
        o.require(r.final_grad_norm <= 1e-8, std::string(to_string(m)) + " gradient not reached");
        worst_k = std::max(worst_k, (r.K - ric.K).norm());
      }
      // Gauss-Newton with alpha = 1/2: linear decay of the cost gap.
      const double opt = evaluate(g, {ric.K, l}).cost;
      InnerConfig c = InnerConfig::defaults(InnerMethod::GaussNewton);
      c.alpha = 0.5;
      c.tol = 1e-12;
      const Mat offset = Mat::Constant(1, 3, 0.2 * std::sqrt(min_eigenvalue_sym(g.Q)));
      const InnerResult r = solve_inner(g, l, k_start + offset, c);
      std::vector<double> gaps;
      for (const auto& row : r.trace) {
        const double gap = row.cost - opt;
        if (!(gap > 1e-13 * opt)) break;
        gaps.push_back(gap);
      }
      worst_slope = std::max(worst_slope, fit_log_slope(gaps));
    }
  }
  o.require(worst_k <= 1e-6, "K disagreement " + fmt("%.2e", worst_k));
  o.require(worst_slope <= -0.1, "Gauss-Newton log-gap slope " + fmt("%.3f", worst_slope));
  if (o.ok) o.detail = "max |K - K_ric| " + fmt("%.1e", worst_k) + ", GN slope <= " + fmt("%.2f", worst_slope);
  return o;
}

std::vector<OuterTrace> g_accepted;  // traces of accepted runs, for the stability check

Outcome nested_case1() {
  Outcome o;
  const LqGame g = case1();
  const NashSolution s = solve_gare(g);
  const OmegaSet omega = OmegaSet::with_default_zeta(g, &s);
  for (OuterVariant v : {OuterVariant::NG, OuterVariant::NaturalNG, OuterVariant::GaussNewtonNG}) {
    OuterConfig cfg = OuterConfig::defaults(v);
    cfg.projection = Projection::WhitenedSvClip;
    const NestedResult r = solve_nested(g, Mat::Zero(1, 3), cfg, omega);
    const std::string name = to_string(v);
    o.require(r.trace.converged, name + " did not converge");
    const double gap = std::abs(r.trace.rows.back().cost - s.value);
    o.require(gap <= 1e-5, name + " cost gap " + fmt("%.2e", gap));
    o.require((r.pi.K - s.Kstar).norm() <= 1e-3 && (r.pi.L - s.Lstar).norm() <= 1e-3,
              name + " gains off");
    o.require(cost_monotone_nondecreasing(r.trace), name + " cost not monotone");
    std::vector<double> gm;
    for (const auto& row : r.trace.rows) gm.push_back(row.grad_map_norm);
    const double slope = fit_log_slope(gm);
    o.require(slope < 0.0, name + " mapping-norm slope " + fmt("%.3f", slope));
    if (o.ok) o.detail += name + " " + std::to_string(r.trace.rows.size() - 1) + " it; ";
    g_accepted.push_back(r.trace);
  }
  return o;
}

Outcome case2_convergence() {
  Outcome o;
  const LqGame g = case2();
  const NashSolution s = solve_gare(g);
  const OmegaSet omega = OmegaSet::with_default_zeta(g, &s);
  auto check = [&](const std::string& name, const NestedResult& r) {
    o.require(r.trace.converged, name + " did not converge");
    const double e = std::max((r.pi.K - s.Kstar).norm(), (r.pi.L - s.Lstar).norm());
    o.require(e <= 1e-3, name + " gain error " + fmt("%.2e", e));
    g_accepted.push_back(r.trace);
  };
  for (OuterVariant v : {OuterVariant::NG, OuterVariant::NaturalNG, OuterVariant::GaussNewtonNG}) {
    check(std::string("nested ") + to_string(v),
          solve_nested(g, Mat::Zero(1, 3), OuterConfig::defaults(v), omega));
  }
  const PolicyPair start{lqtest::k_zero(g), Mat::Zero(1, 3)};
  for (BaselineFamily fam : {BaselineFamily::AG, BaselineFamily::GDA}) {
    for (Flavor fl : {Flavor::PG, Flavor::NaturalPG, Flavor::GaussNewton}) {
      check(std::string(to_string(fam)) + " " + to_string(fl),
            run_baseline(g, start, BaselineConfig::defaults(fam, fl)));
    }
  }
  if (o.ok) o.detail = "9 runs within 1e-3 of (K*, L*)";
  return o;
}

Outcome stability_invariant() {
  Outcome o;
  std::size_t rows = 0;
  for (const auto& t : g_accepted) {
    for (const auto& r : t.rows) {
      o.require(r.rho < 1.0, "iterate with rho " + fmt("%.6f", r.rho));
      ++rows;
    }
  }
  o.require(!g_accepted.empty(), "no accepted runs recorded");
  if (o.ok) o.detail = std::to_string(rows) + " iterates over " + std::to_string(g_accepted.size()) + " runs";
  return o;
}

Outcome residuals() {
  Outcome o;
  double worst = 0.0;
  for (const LqGame& g : {case1(), case2()}) {
    const NashSolution s = solve_gare(g);
    worst = std::max(worst, gare_residual(g, s.Pstar));
    std::mt19937_64 rng(31);
    for (int k = 0; k < 10; ++k) {
      const Mat l = random_inner_l(rng, g);
      worst = std::max(worst, inner_riccati_residual(g, l, solve_inner_riccati(g, l).P.mat()));
      const PolicyPair pi = lqtest::random_stable_pair(rng, g, 0.3);
      const PolicyEval ev = evaluate(g, pi);
      worst = std::max(worst, detail::lyap_residual_t(closed_loop(g, pi.K, pi.L),
                                                      stage_weight(g, pi.K, pi.L).mat(),
                                                      ev.P.mat()));
    }
  }
  o.require(worst <= 1e-10, "solve residual " + fmt("%.2e", worst));
  std::mt19937_64 rng(5);
  double series = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Mat a = lqtest::random_stable(rng, 3, 0.3 + 0.01 * k);
    const SymMat w = SymMat::identity(3);
    series = std::max(series, (solve_dlyap_transpose(a, w).mat() -
                               lqtest::truncated_series_t(a, w, 200)).norm());
  }
  o.require(series <= 1e-9, "direct vs series " + fmt("%.2e", series));
  if (o.ok) o.detail = "max residual " + fmt("%.1e", worst) + ", series gap " + fmt("%.1e", series);
  return o;
}

Outcome projection() {
  Outcome o;
  const LqGame g = case1();
  const NashSolution s = solve_gare(g);
  const OmegaSet omega = OmegaSet::with_default_zeta(g, &s);
  std::mt19937_64 rng(13);
  double idem = 0.0, slack = 1e300;
  for (int k = 0; k < 200; ++k) {
    const Mat l = lqtest::random_mat(rng, 1, 3, 1.5);
    const Mat p = project_omega(l, omega, g);
    idem = std::max(idem, (project_omega(p, omega, g) - p).norm());
    slack = std::min(slack, min_eigenvalue_sym(SymMat::symmetrized(
                                omega.M.mat() - p.transpose() * g.Rv.mat() * p)));
  }
  o.require(idem <= 1e-12, "idempotence " + fmt("%.2e", idem));
  o.require(slack >= -1e-9, "feasibility slack " + fmt("%.2e", slack));
  o.require(project_omega(s.Lstar, omega, g) == s.Lstar, "interior point moved");
  o.require(project_omega(Mat::Zero(1, 3), omega, g) == Mat::Zero(1, 3), "origin moved");
  const LqGame sg(lqtest::scalar(0.5), lqtest::scalar(1.0), lqtest::scalar(0.5),
                  SymMat(lqtest::scalar(1.0)), SymMat(lqtest::scalar(1.0)),
                  SymMat(lqtest::scalar(1.0)), SymMat(lqtest::scalar(1.0)));
  const double p = project_omega(lqtest::scalar(2.0), OmegaSet::make(sg, 0.19), sg)(0, 0);
  o.require(std::abs(p - 0.9) <= 1e-12, "scalar example gives " + fmt("%.15f", p));
  if (o.ok) o.detail = "idempotence " + fmt("%.1e", idem) + ", scalar 2 -> " + fmt("%.12f", p);
  return o;
}

std::string modelfree_csv(const LqGame& g, const OmegaSet& omega, double* gap, double value) {
  EstimatorConfig est;
  est.m = 100;
  est.rollout = 200;
  est.radius = 0.05;
  est.seed = 0;
  ModelFreeInnerConfig in;
  in.estimator = est;
  in.steps = 2;
  in.alpha = 0.002;
  const ModelFreeOuterResult r = outer_ng_modelfree(g, Mat::Zero(1, 3), lqtest::k_zero(g), est,
                                                    in, 50, 1e-3, OuterVariant::NG, omega);
  *gap = std::abs(value - r.trace.rows.back().cost);
  std::ostringstream s;
  write_trace_csv(r.trace, s);
  return s.str();
}

Outcome modelfree_statistics() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const LqGame g = case1();
  const PolicyPair pi{make_mat(1, 3, {-0.5, -0.1, -0.8}), make_mat(1, 3, {1.6, 0.3, 0.95})};
  const PolicyEval ev = evaluate(g, pi);
  EstimatorConfig c;
  c.m = 200000;
  c.radius = 0.01;
  c.rollout = static_cast<std::size_t>(std::ceil(std::log(1e-10) / std::log(ev.rho)));
  c.seed = 0;
  const GradSigmaEstimate est = estimate_grad_sigma(g, pi.K, pi.L, c);
  const double eg = (est.grad - ev.gradK).norm() / ev.gradK.norm();
  const double es = (est.Sigma.mat() - ev.Sigma.mat()).norm() / ev.Sigma.mat().norm();
  o.require(eg <= 0.1, "gradient relative error " + fmt("%.3f", eg));
  o.require(es <= 0.05, "Sigma relative error " + fmt("%.3f", es));

  const NashSolution s = solve_gare(g);
  const OmegaSet omega = OmegaSet::with_default_zeta(g, &s);
  double gap1 = 0.0, gap2 = 0.0;
  const std::string a = modelfree_csv(g, omega, &gap1, s.value);
  const std::string b = modelfree_csv(g, omega, &gap2, s.value);
  o.require(a == b, "model-free traces differ between identical seeds");
  const double dt = seconds_since(t0);
  o.require(dt <= 120.0, "took " + fmt("%.0f s", dt));
  if (o.ok) {
    o.detail = "grad err " + fmt("%.3f", eg) + ", Sigma err " + fmt("%.3f", es) +
               ", traces identical, " + fmt("%.0f s", dt);
  }
  return o;
}

Outcome wiring_identities() {
  Outcome o;
  const LqGame g = case1();
  const NashSolution s = solve_gare(g);
  const OmegaSet omega = OmegaSet::with_default_zeta(g, &s);

  // Inner loop with the analytic gradient.
  const Mat L = Mat::Zero(1, 3);
  const Mat start = lqtest::k_zero(g) + make_mat(1, 3, {0.05, -0.03, 0.04});
  InnerConfig ic = InnerConfig::defaults(InnerMethod::PG);
  ic.alpha = 0.5;
  ic.tol = 1e-8;
  const InnerResult ref = solve_inner(g, L, start, ic);
  const Mat k = inner_ng_with(AnalyticInnerEstimator{&g}, g, L, start, ref.iterations, ic.alpha,
                              InnerMethod::PG);
  o.require(k == ref.K, "inner loop differs by " + fmt("%.2e", (k - ref.K).norm()));

  // Outer loop with the analytic nested gradient and exact inner solves.
  OuterConfig oc = OuterConfig::defaults(OuterVariant::NG);
  oc.projection = Projection::WhitenedSvClip;
  const NestedResult nested = solve_nested(g, Mat::Zero(1, 3), oc, omega, lqtest::k_zero(g));
  const std::size_t T = std::min<std::size_t>(25, nested.trace.rows.size() - 1);
  auto solve_k = [&](const Mat& l, const Mat& k_prev, std::size_t) {
    return detail::inner_at(g, l, k_prev, oc.inner).K;
  };
  const ModelFreeOuterResult mf = outer_ng_with(solve_k, AnalyticOuterEstimator{&g}, g,
                                                Mat::Zero(1, 3), lqtest::k_zero(g), T, oc.eta,
                                                oc.variant, omega, oc.projection);
  for (std::size_t t = 0; t <= T; ++t) {
    o.require(mf.trace.rows[t].L == nested.trace.rows[t].L,
              "outer L differs at t=" + std::to_string(t));
  }

  // AG with an inner tolerance against the nested iterates.
  double worst = 0.0;
  for (Flavor fl : {Flavor::PG, Flavor::NaturalPG}) {
    BaselineConfig ag = BaselineConfig::defaults(BaselineFamily::AG, fl);
    ag.eta = fl == Flavor::PG ? 0.5 : 0.05;
    ag.inner_iters = 100000;
    ag.inner_tol = 1e-12;
    ag.max_outer = 60;
    OuterConfig nc =
        OuterConfig::defaults(fl == Flavor::PG ? OuterVariant::NG : OuterVariant::NaturalNG);
    nc.eta = ag.eta;
    nc.inner = InnerConfig::defaults(InnerMethod::GaussNewton);
    nc.inner.tol = 1e-12;
    nc.max_iter = 60;
    auto rows_of = [](const std::function<NestedResult()>& f) {
      try {
        return f().trace;
      } catch (const SolveFailure& e) {
        return e.trace();
      }
    };
    const OuterTrace a = rows_of([&] { return run_ag(g, {lqtest::k_zero(g), L}, ag); });
    const OuterTrace n = rows_of([&] { return solve_nested(g, L, nc, omega); });
    const std::size_t rows = std::min(a.rows.size(), n.rows.size());
    o.require(rows >= 30, "too few comparable AG rows");
    for (std::size_t t = 0; t < rows; ++t)
      worst = std::max(worst, (a.rows[t].L - n.rows[t].L).norm());
  }
  o.require(worst <= 1e-8, "AG vs nested L gap " + fmt("%.2e", worst));
  if (o.ok) o.detail = "inner/outer exact, AG vs nested " + fmt("%.1e", worst);
  return o;
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"GARE regression", gare_regression},
      {"assumption margins", assumption_margins},
      {"gradient correctness", gradient_correctness},
      {"inner-loop equivalence", inner_equivalence},
      {"nested convergence (Case 1)", nested_case1},
      {"Case 2 convergence", case2_convergence},
      {"stability invariant", stability_invariant},
      {"Lyapunov/Riccati residuals", residuals},
      {"projection", projection},
      {"model-free statistics and determinism", modelfree_statistics},
      {"wiring identities", wiring_identities},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.ok) ++failures;
    std::printf("%s criterion %zu: %s (%s)\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
