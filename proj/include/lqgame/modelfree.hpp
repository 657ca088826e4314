#pragma once

// Sampling-based versions of the nested-gradient methods: zeroth-order
// estimates of grad_K C and Sigma from rollouts of randomly perturbed gains,
// a model-free inner loop for K(L) and a model-free projected outer loop.
//
// Randomness is drawn from counter-based streams keyed by the call path
// (outer step, perturbation index, inner step, trajectory), so a given seed
// reproduces every result bit for bit regardless of thread count.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lqgame/game.hpp"
#include "lqgame/inner_loop.hpp"
#include "lqgame/linalg.hpp"
#include "lqgame/outer_loop.hpp"
#include "lqgame/parallel.hpp"
#include "lqgame/policy.hpp"
#include "lqgame/rng.hpp"

namespace lqgame {

/// Initial-state distribution; both have second moment Sigma0.
enum class InitialState { Gaussian, UniformCube };

struct EstimatorConfig {
  std::size_t m = 1000;        // trajectories
  std::size_t rollout = 200;   // steps per trajectory
  double radius = 0.05;        // Frobenius radius of the perturbation sphere
  std::uint64_t seed = 0;
  InitialState x0 = InitialState::Gaussian;
  std::size_t threads = 0;     // 0: default_thread_count()

  void validate() const {
    if (m < 1) throw ContractError("estimator: m must be >= 1");
    if (rollout < 1) throw ContractError("estimator: rollout length must be >= 1");
    if (!(radius > 0.0)) throw ContractError("estimator: radius must be positive");
  }
  std::size_t thread_count() const { return threads == 0 ? default_thread_count() : threads; }
};

/// Uniform draw from the sphere {U : ||U||_F = radius} (normalized Gaussian).
inline Mat sample_sphere(Eigen::Index rows, Eigen::Index cols, double radius, Stream stream) {
  if (!(radius > 0.0)) throw ContractError("sample_sphere: radius must be positive");
  StreamRng rng(stream);
  Mat u(rows, cols);
  for (;;) {
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) u(i, j) = rng.normal();
    const double n = u.norm();
    if (n > 0.0) return u * (radius / n);
  }
}

struct RolloutResult {
  double cost = 0.0;
  Mat Sigma;  // sum_t x_t x_t'
};

/// Simulates x_{t+1} = (A - BK - CL) x_t for a fixed number of steps from a
/// random x0 and accumulates stage costs and state outer products over
/// t = 0..R-1.
class RolloutEngine {
 public:
  RolloutEngine(const LqGame& g, InitialState x0)
      : game_(&g), x0_(x0), chol_(g.Sigma0.mat().llt().matrixL()) {}

  const LqGame& game() const { return *game_; }

  Vec sample_x0(StreamRng& rng) const {
    const Eigen::Index d = game_->d();
    Vec z(d);
    if (x0_ == InitialState::Gaussian) {
      for (Eigen::Index i = 0; i < d; ++i) z(i) = rng.normal();
    } else {
      const double half_width = std::sqrt(3.0);
      for (Eigen::Index i = 0; i < d; ++i) z(i) = (2.0 * rng.uniform() - 1.0) * half_width;
    }
    return chol_ * z;
  }

  /// One trajectory. Throws SampleError if (K, L) is not stabilizing.
  RolloutResult simulate(const Mat& K, const Mat& L, std::size_t steps, Stream stream) const {
    const LqGame& g = *game_;
    const Mat acl = closed_loop(g, K, L);
    const double rho = spectral_radius(acl);
    if (!(rho < 1.0)) {
      throw SampleError("perturbed policy is not stabilizing (rho " + std::to_string(rho) +
                        "); reduce the smoothing radius");
    }
    StreamRng rng(stream);
    Vec x = sample_x0(rng);
    return accumulate(acl, stage_weight(g, K, L).mat(), std::move(x), steps);
  }

 private:
  static RolloutResult accumulate(const Mat& acl, const Mat& w, Vec x, std::size_t steps) {
    const Eigen::Index d = acl.rows();
    RolloutResult r;
    r.Sigma = Mat::Zero(d, d);
    Vec next(d);
    for (std::size_t t = 0; t < steps; ++t) {
      r.cost += x.dot(w * x);
      r.Sigma.noalias() += x * x.transpose();
      next.noalias() = acl * x;
      x.swap(next);
    }
    return r;
  }

  const LqGame* game_;
  InitialState x0_;
  Mat chol_;
};

struct GradSigmaEstimate {
  Mat grad;
  SymMat Sigma;
  double cost_mean = 0.0;      // sample mean of the rollout costs
  double cost_variance = 0.0;  // unbiased sample variance
  std::size_t samples = 0;
};

namespace detail {

constexpr std::size_t kEstimatorChunk = 256;

struct Partial {
  Mat grad;
  Mat sigma;
  double cost_sum = 0.0;
  double cost_sq_sum = 0.0;
};

}  // namespace detail

/// Zeroth-order estimate of grad_K C(K, L) and Sigma_{K,L}: for each of m
/// trajectories perturb K by U on the radius-r Frobenius sphere, roll out,
/// and average (m1 d / r^2) C_i U_i and Sigma_i.
inline GradSigmaEstimate estimate_grad_sigma(const LqGame& g, const Mat& K, const Mat& L,
                                             const EstimatorConfig& cfg, Stream stream) {
  cfg.validate();
  check_gain_dims(g, K, L);
  const RolloutEngine engine(g, cfg.x0);
  const double dim = static_cast<double>(K.size());
  const double scale = dim / (cfg.radius * cfg.radius);
  const std::size_t chunks = (cfg.m + detail::kEstimatorChunk - 1) / detail::kEstimatorChunk;
  std::vector<detail::Partial> partial(chunks);

  parallel_chunks(chunks, cfg.thread_count(), [&](std::size_t c) {
    detail::Partial p;
    p.grad = Mat::Zero(K.rows(), K.cols());
    p.sigma = Mat::Zero(g.d(), g.d());
    const std::size_t begin = c * detail::kEstimatorChunk;
    const std::size_t end = std::min(cfg.m, begin + detail::kEstimatorChunk);
    for (std::size_t i = begin; i < end; ++i) {
      const Stream traj = stream.child(i);
      const Mat u = sample_sphere(K.rows(), K.cols(), cfg.radius, traj.child(0));
      RolloutResult r;
      try {
        r = engine.simulate(K + u, L, cfg.rollout, traj.child(1));
      } catch (const SampleError& e) {
        throw SampleError(std::string(e.what()) + " [trajectory " + std::to_string(i) + "]");
      }
      p.grad += (scale * r.cost) * u;
      p.sigma += r.Sigma;
      p.cost_sum += r.cost;
      p.cost_sq_sum += r.cost * r.cost;
    }
    partial[c] = std::move(p);
  });

  Mat grad = Mat::Zero(K.rows(), K.cols());
  Mat sigma = Mat::Zero(g.d(), g.d());
  double s1 = 0.0, s2 = 0.0;
  for (const auto& p : partial) {
    grad += p.grad;
    sigma += p.sigma;
    s1 += p.cost_sum;
    s2 += p.cost_sq_sum;
  }
  const double m = static_cast<double>(cfg.m);
  GradSigmaEstimate est;
  est.grad = grad / m;
  est.Sigma = SymMat::symmetrized(sigma / m);
  est.cost_mean = s1 / m;
  est.cost_variance = cfg.m > 1 ? (s2 - s1 * s1 / m) / (m - 1.0) : 0.0;
  est.samples = cfg.m;
  return est;
}

inline GradSigmaEstimate estimate_grad_sigma(const LqGame& g, const Mat& K, const Mat& L,
                                             const EstimatorConfig& cfg) {
  return estimate_grad_sigma(g, K, L, cfg, Stream::root(cfg.seed));
}

/// Exact gradient and Sigma in place of the sampled estimates.
struct AnalyticInnerEstimator {
  const LqGame* game;
  GradSigmaEstimate operator()(const Mat& K, const Mat& L, std::size_t /*step*/) const {
    const PolicyEval ev = evaluate(*game, {K, L});
    GradSigmaEstimate est;
    est.grad = ev.gradK;
    est.Sigma = ev.Sigma;
    est.cost_mean = ev.cost;
    return est;
  }
};

/// Sampled estimator; inner step tau draws from stream.child(tau).
struct SampledInnerEstimator {
  const LqGame* game;
  EstimatorConfig cfg;
  Stream stream;
  GradSigmaEstimate operator()(const Mat& K, const Mat& L, std::size_t step) const {
    return estimate_grad_sigma(*game, K, L, cfg, stream.child(step));
  }
};

namespace detail {

inline void require_sampleable(InnerMethod method) {
  if (method != InnerMethod::PG && method != InnerMethod::NaturalPG) {
    throw ContractError(std::string("model-free inner loop supports pg and natural_pg only, got ") +
                        to_string(method));
  }
}

}  // namespace detail

/// Runs `steps` inner updates K <- K - alpha g (PG) or K - alpha g Sigma^{-1}
/// (NaturalPG) with (g, Sigma) supplied by `estimator`.
template <class Estimator>
Mat inner_ng_with(const Estimator& estimator, const LqGame& g, const Mat& L, const Mat& K0,
                  std::size_t steps, double alpha, InnerMethod method) {
  detail::require_sampleable(method);
  if (!(alpha > 0.0)) throw ContractError("model-free inner stepsize must be positive");
  check_gain_dims(g, K0, L);
  Mat K = K0;
  for (std::size_t tau = 0; tau < steps; ++tau) {
    GradSigmaEstimate est;
    try {
      est = estimator(K, L, tau);
    } catch (const SampleError& e) {
      throw SampleError(std::string(e.what()) + " [inner step " + std::to_string(tau) + "]");
    } catch (const InstabilityError& e) {
      throw InstabilityError(e.rho(), "model-free inner loop", tau);
    }
    if (method == InnerMethod::PG) {
      K = K - alpha * est.grad;
    } else {
      // g Sigma^{-1} = (Sigma^{-1} g')' for symmetric Sigma.
      K = K - alpha * est.Sigma.mat().llt().solve(est.grad.transpose()).transpose();
    }
  }
  return K;
}

inline Mat inner_ng_modelfree(const LqGame& g, const Mat& L, const Mat& K0,
                              const EstimatorConfig& cfg, std::size_t steps, double alpha,
                              InnerMethod method) {
  detail::require_sampleable(method);
  cfg.validate();
  return inner_ng_with(SampledInnerEstimator{&g, cfg, Stream::root(cfg.seed)}, g, L, K0, steps,
                       alpha, method);
}

/// Settings of the model-free inner loop invoked by the outer loop.
struct ModelFreeInnerConfig {
  EstimatorConfig estimator;
  std::size_t steps = 5;
  double alpha = 0.01;
  InnerMethod method = InnerMethod::PG;
};

struct OuterEstimate {
  Mat grad;     // estimate of grad_L C(K(L), L)
  SymMat Sigma; // estimate of Sigma_{K(L), L}
};

/// Outer-gradient estimate by perturbing L on the sphere, approximately
/// solving the inner problem at each perturbed L, and rolling out.
struct SampledOuterEstimator {
  const LqGame* game;
  EstimatorConfig cfg;
  ModelFreeInnerConfig inner;
  Stream stream;

  OuterEstimate operator()(const Mat& L, const Mat& K_warm, std::size_t t) const {
    const LqGame& g = *game;
    const RolloutEngine engine(g, cfg.x0);
    const Stream step = stream.child(t);
    const double scale = static_cast<double>(L.size()) / (cfg.radius * cfg.radius);
    ModelFreeInnerConfig in = inner;
    in.estimator.threads = 1;  // parallelism lives at the perturbation level

    std::vector<detail::Partial> partial(cfg.m);
    parallel_chunks(cfg.m, cfg.thread_count(), [&](std::size_t i) {
      const Stream s = step.child(i);
      const Mat v = sample_sphere(L.rows(), L.cols(), cfg.radius, s.child(0));
      const Mat L_hat = L + v;
      const Mat K_hat =
          inner_ng_with(SampledInnerEstimator{&g, in.estimator, s.child(1)}, g, L_hat, K_warm,
                        in.steps, in.alpha, in.method);
      RolloutResult r;
      try {
        r = engine.simulate(K_hat, L_hat, cfg.rollout, s.child(2));
      } catch (const SampleError& e) {
        throw SampleError(std::string(e.what()) + " [outer perturbation " + std::to_string(i) +
                          "]");
      }
      partial[i].grad = (scale * r.cost) * v;
      partial[i].sigma = std::move(r.Sigma);
    });
    Mat grad = Mat::Zero(L.rows(), L.cols());
    Mat sigma = Mat::Zero(g.d(), g.d());
    for (const auto& p : partial) {
      grad += p.grad;
      sigma += p.sigma;
    }
    const double m = static_cast<double>(cfg.m);
    return {grad / m, SymMat::symmetrized(sigma / m)};
  }
};

/// Exact nested gradient and Sigma at (K(L), L).
struct AnalyticOuterEstimator {
  const LqGame* game;
  OuterEstimate operator()(const Mat& L, const Mat& K_at_L, std::size_t /*t*/) const {
    const PolicyEval ev = evaluate(*game, {K_at_L, L});
    return {ev.gradL, ev.Sigma};
  }
};

struct ModelFreeOuterResult {
  Mat L;
  Mat K;  // inner estimate at the final L
  OuterTrace trace;
};

/// Model-free projected (natural) nested gradient for T outer steps.
///
/// `solve_k(L, K_prev, t)` returns the approximation of K(L_t) used for the
/// trace and as the warm start of the estimator's inner solves; `estimator(L,
/// K, t)` returns (grad_L, Sigma). Trace costs are exact evaluations of the
/// recorded pair.
template <class SolveK, class Estimator>
ModelFreeOuterResult outer_ng_with(const SolveK& solve_k, const Estimator& estimator,
                                   const LqGame& g, const Mat& L0, const Mat& K0, std::size_t T,
                                   double eta, OuterVariant variant, const OmegaSet& omega,
                                   Projection projection) {
  if (variant == OuterVariant::GaussNewtonNG) {
    throw ContractError("model-free outer loop supports ng and natural_ng only");
  }
  if (!(eta > 0.0)) throw ContractError("outer stepsize must be positive");
  OuterConfig step_cfg;
  step_cfg.variant = variant;
  step_cfg.eta = eta;
  step_cfg.projection = projection;

  ModelFreeOuterResult out;
  out.trace.mu = min_singular_value(g.Sigma0);
  Mat L = L0;
  Mat K = K0;
  for (std::size_t t = 0;; ++t) {
    try {
      K = solve_k(L, K, t);
      if (t == T) break;
      const OuterEstimate est = estimator(L, K, t);
      Mat direction = variant == OuterVariant::NG
                          ? est.grad
                          : Mat(est.Sigma.mat().llt().solve(est.grad.transpose()).transpose());
      Mat candidate = L + eta * direction;
      bool active = false;
      if (projection == Projection::WhitenedSvClip) {
        auto p = detail::project_omega_impl(candidate, omega, g);
        candidate = std::move(p.L);
        active = p.active;
      }
      const PolicyEval ev = evaluate(g, {K, L});
      OuterRow row;
      row.t = t;
      row.L = L;
      row.K = K;
      row.cost = ev.cost;
      row.grad_map_norm = (candidate - L).norm() / (2.0 * eta);
      row.grad_norm = est.grad.norm();
      row.grad_norm_K = ev.gradK.norm();
      row.lambda_min_qtilde = min_eigenvalue_sym(q_tilde(g, L));
      row.proj_active = active;
      row.rho = ev.rho;
      out.trace.rows.push_back(std::move(row));
      L = std::move(candidate);
    } catch (const Error& e) {
      throw SolveFailure(std::string("model-free outer step ") + std::to_string(t) + ": " +
                         e.what(),
                         std::move(out.trace));
    }
  }
  // Final row at L_T.
  const PolicyEval ev = evaluate(g, {K, L});
  OuterRow last;
  last.t = T;
  last.L = L;
  last.K = K;
  last.cost = ev.cost;
  last.grad_norm = ev.gradL.norm();
  last.grad_norm_K = ev.gradK.norm();
  last.lambda_min_qtilde = min_eigenvalue_sym(q_tilde(g, L));
  last.rho = ev.rho;
  out.trace.rows.push_back(std::move(last));
  out.trace.converged = true;
  out.L = std::move(L);
  out.K = std::move(K);
  return out;
}

/// Fully sampled outer loop. K0 must stabilize (K0, L0); each outer step
/// first refines K(L_t) with the model-free inner loop from the previous
/// estimate, then estimates the nested gradient.
inline ModelFreeOuterResult outer_ng_modelfree(const LqGame& g, const Mat& L0, const Mat& K0,
                                               const EstimatorConfig& cfg,
                                               const ModelFreeInnerConfig& inner, std::size_t T,
                                               double eta, OuterVariant variant,
                                               const OmegaSet& omega,
                                               Projection projection = Projection::Off) {
  cfg.validate();
  inner.estimator.validate();
  detail::require_sampleable(inner.method);
  const Stream root = Stream::root(cfg.seed);
  const Stream k_streams = root.child(0);
  auto solve_k = [&](const Mat& L, const Mat& K_prev, std::size_t t) {
    return inner_ng_with(SampledInnerEstimator{&g, inner.estimator, k_streams.child(t)}, g, L,
                         K_prev, inner.steps, inner.alpha, inner.method);
  };
  return outer_ng_with(solve_k, SampledOuterEstimator{&g, cfg, inner, root.child(1)}, g, L0, K0,
                       T, eta, variant, omega, projection);
}

}  // namespace lqgame
