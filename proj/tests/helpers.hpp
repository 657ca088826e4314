#pragma once

#include <random>

#include "lqgame/lqgame.hpp"

namespace lqtest {

using lqgame::Mat;

inline Mat random_mat(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

/// Random matrix rescaled to the given spectral radius.
inline Mat random_stable(std::mt19937_64& rng, Eigen::Index d, double rho) {
  Mat a = random_mat(rng, d, d);
  return a * (rho / lqgame::spectral_radius(a));
}

/// Sum_{t<T} (A')^t W A^t.
inline Mat truncated_series_t(const Mat& a, const Mat& w, int terms) {
  Mat x = Mat::Zero(a.rows(), a.cols());
  Mat term = w;
  for (int t = 0; t < terms; ++t) {
    x += term;
    term = a.transpose() * term * a;
  }
  return x;
}

/// Riccati gain at L = 0, a stabilizing minimizer gain for the benchmark cases.
inline Mat k_zero(const lqgame::LqGame& g) {
  return lqgame::solve_inner_riccati(g, Mat::Zero(g.m2(), g.d()), 1e-12, 100000, false).K;
}

/// Random pair near (K(0), 0) that stabilizes the closed loop.
inline lqgame::PolicyPair random_stable_pair(std::mt19937_64& rng, const lqgame::LqGame& g,
                                             double scale) {
  const Mat k0 = k_zero(g);
  for (;;) {
    lqgame::PolicyPair pi{k0 + random_mat(rng, g.m1(), g.d(), scale),
                          random_mat(rng, g.m2(), g.d(), scale)};
    if (lqgame::spectral_radius(lqgame::closed_loop(g, pi.K, pi.L)) < 0.99) return pi;
  }
}

/// Central-difference gradient of f at X, step h.
template <class F>
Mat central_diff(const F& f, const Mat& x, double h) {
  Mat g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Mat xp = x, xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      g(i, j) = (f(xp) - f(xm)) / (2 * h);
    }
  }
  return g;
}

/// Scalar game used across modules: A=0.5, B=1, C=0.5, Q=1, Ru=1, Rv=2, Sigma0=1.
inline lqgame::LqGame scalar_game() {
  using lqgame::SymMat;
  return lqgame::LqGame(Mat::Constant(1, 1, 0.5), Mat::Constant(1, 1, 1.0),
                        Mat::Constant(1, 1, 0.5), SymMat(Mat::Constant(1, 1, 1.0)),
                        SymMat(Mat::Constant(1, 1, 1.0)), SymMat(Mat::Constant(1, 1, 2.0)),
                        SymMat(Mat::Constant(1, 1, 1.0)));
}

inline Mat scalar(double v) { return Mat::Constant(1, 1, v); }

}  // namespace lqtest
