#pragma once

// Dense real-matrix kernels shared by the rest of the library: spectral
// radius, discrete Lyapunov solves, symmetric extremal eigenvalues and SVD.
// Everything is a pure function over Eigen dense matrices.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <span>
#include <string>

#include "lqgame/errors.hpp"

namespace lqgame {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline void require_finite(const Mat& m, const char* name) {
  if (!m.allFinite()) throw ContractError(std::string(name) + " has non-finite entries");
}

inline void require_square(const Mat& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(name) + " must be square, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

/// Builds a rows x cols matrix from row-major entries.
inline Mat make_mat(Eigen::Index rows, Eigen::Index cols, std::span<const double> row_major) {
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != row_major.size()) {
    throw DimensionError("entry count " + std::to_string(row_major.size()) +
                         " does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row_major[i * cols + j];
  require_finite(m, "matrix");
  return m;
}

inline Mat make_mat(Eigen::Index rows, Eigen::Index cols, std::initializer_list<double> row_major) {
  return make_mat(rows, cols, std::span<const double>(row_major.begin(), row_major.size()));
}

/// Square matrix stored symmetrized. Construction repairs asymmetry up to
/// 1e-12 relative and rejects anything larger.
class SymMat {
 public:
  static constexpr double kSymmetryTol = 1e-12;

  SymMat() = default;

  explicit SymMat(const Mat& m) : m_(m) {
    require_square(m, "SymMat");
    require_finite(m, "SymMat");
    const double defect = (m - m.transpose()).norm();
    if (defect > kSymmetryTol * (1.0 + m.norm())) {
      throw ContractError("SymMat asymmetry " + std::to_string(defect) + " exceeds tolerance");
    }
    m_ = 0.5 * (m + m.transpose());
  }

  /// Symmetrizes without the defect check, for results of iterative updates.
  static SymMat symmetrized(const Mat& m) {
    require_square(m, "SymMat");
    require_finite(m, "SymMat");
    SymMat s;
    s.m_ = 0.5 * (m + m.transpose());
    return s;
  }

  static SymMat identity(Eigen::Index n) { return SymMat(Mat::Identity(n, n)); }

  const Mat& mat() const { return m_; }
  operator const Mat&() const { return m_; }
  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index size() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Mat m_;
};

/// max |lambda_i(M)| over the complex spectrum.
inline double spectral_radius(const Mat& m) {
  require_square(m, "spectral_radius input");
  require_finite(m, "spectral_radius input");
  if (m.rows() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigenvalue iteration did not converge",
                         static_cast<std::size_t>(40 * m.rows()));
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double min_eigenvalue_sym(const SymMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(m.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue_sym(const SymMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(m.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// Convenience overload: symmetrizes (with defect check) first.
inline double min_eigenvalue_sym(const Mat& m) { return min_eigenvalue_sym(SymMat(m)); }

inline double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

inline double min_singular_value(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

struct Svd {
  Mat U;
  Vec sigma;  // descending, nonnegative
  Mat V;
};

/// Thin SVD, M = U diag(sigma) V^T.
inline Svd svd(const Mat& m) {
  require_finite(m, "svd input");
  Eigen::JacobiSVD<Mat> s(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {s.matrixU(), s.singularValues(), s.matrixV()};
}

/// Symmetric square root of a PSD matrix (negative eigenvalues clamped to 0).
inline Mat sqrt_psd(const SymMat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m.mat());
  Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// Inverse symmetric square root of a PD matrix.
inline Mat inv_sqrt_pd(const SymMat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m.mat());
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw DefinitenessError("inverse square root of a non-PD matrix", es.eigenvalues().minCoeff());
  }
  Vec ev = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

namespace detail {

constexpr Eigen::Index kDirectLyapunovMaxDim = 30;

inline double lyap_residual_t(const Mat& acl, const Mat& w, const Mat& x) {
  return (x - acl.transpose() * x * acl - w).norm();
}

// X = Acl^T X Acl + W via the vectorized system (I - Acl^T (x) Acl^T) vec X = vec W.
inline Mat dlyap_t_direct(const Mat& acl, const Mat& w) {
  const Eigen::Index d = acl.rows();
  const Eigen::Index n = d * d;
  Mat sys = Mat::Identity(n, n);
  const Mat at = acl.transpose();
  // Column-major vec: vec(Acl^T X Acl) = (Acl^T (x) Acl^T) vec(X).
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      sys.block(i * d, j * d, d, d) -= at(i, j) * at;
  Eigen::PartialPivLU<Mat> lu(sys);
  Vec rhs = Eigen::Map<const Vec>(w.data(), n);
  Vec x = lu.solve(rhs);
  // One step of iterative refinement.
  Vec r = rhs - sys * x;
  x += lu.solve(r);
  return Eigen::Map<const Mat>(x.data(), d, d);
}

// Squared Smith iteration: X <- X + A_k^T X A_k, A_{k+1} = A_k^2.
inline Mat dlyap_t_smith(const Mat& acl, const Mat& w) {
  Mat x = w;
  Mat ak = acl;
  for (std::size_t k = 0; k < 200; ++k) {
    Mat inc = ak.transpose() * x * ak;
    x += inc;
    ak = ak * ak;
    if (inc.norm() <= 1e-17 * (1.0 + x.norm()) || ak.norm() == 0.0) return x;
  }
  throw NumericalError("Smith iteration for Lyapunov equation did not converge", 200);
}

}  // namespace detail

/// Solves X = Acl^T X Acl + W. Requires rho(Acl) < 1.
inline SymMat solve_dlyap_transpose(const Mat& acl, const SymMat& w) {
  require_square(acl, "Acl");
  if (w.size() != acl.rows()) throw DimensionError("Lyapunov: W dimension mismatch");
  const double rho = spectral_radius(acl);
  if (rho >= 1.0) throw InstabilityError(rho, "Lyapunov solve");
  Mat x = acl.rows() <= detail::kDirectLyapunovMaxDim ? detail::dlyap_t_direct(acl, w)
                                                      : detail::dlyap_t_smith(acl, w);
  SymMat xs = SymMat::symmetrized(x);
  const double res = detail::lyap_residual_t(acl, w, xs);
  if (res > 1e-10 * (1.0 + xs.mat().norm())) {
    throw NumericalError("Lyapunov residual " + std::to_string(res) + " above tolerance", 1);
  }
  return xs;
}

/// Solves X = Acl X Acl^T + W. Requires rho(Acl) < 1.
inline SymMat solve_dlyap(const Mat& acl, const SymMat& w) {
  require_square(acl, "Acl");
  return solve_dlyap_transpose(acl.transpose(), w);
}

}  // namespace lqgame
