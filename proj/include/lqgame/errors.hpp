#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lqgame {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Violated input contract (asymmetric SymMat, non-finite entries, bad config).
class ContractError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t iterations)
      : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations_(iterations) {}
  std::size_t iterations() const { return iterations_; }

 private:
  std::size_t iterations_;
};

/// Closed loop A - BK - CL is not (strictly) Schur stable.
class InstabilityError : public Error {
 public:
  explicit InstabilityError(double rho, const std::string& where = {})
      : Error("closed loop unstable: spectral radius " + std::to_string(rho) +
              (where.empty() ? std::string{} : " at " + where)),
        rho_(rho) {}
  InstabilityError(double rho, const std::string& where, std::size_t iteration)
      : Error("closed loop unstable: spectral radius " + std::to_string(rho) +
              " at " + where + " iteration " + std::to_string(iteration) +
              " (stepsize too large?)"),
        rho_(rho),
        iteration_(iteration) {}
  double rho() const { return rho_; }
  std::size_t iteration() const { return iteration_; }

 private:
  double rho_;
  std::size_t iteration_ = 0;
};

/// A matrix required to be definite or invertible is not.
class DefinitenessError : public Error {
 public:
  DefinitenessError(const std::string& what, double margin)
      : Error(what + " (margin " + std::to_string(margin) + ")"), margin_(margin) {}
  double margin() const { return margin_; }

 private:
  double margin_;
};

/// Input lies outside the region where an operation is defined (e.g. L not in
/// the inner-problem domain).
class DomainError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double residual, std::size_t iterations)
      : Error(what + ": residual " + std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations"),
        residual_(residual),
        iterations_(iterations) {}
  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

/// A converged Riccati iterate failed a posteriori validation.
class SolutionRejectedError : public Error {
 public:
  using Error::Error;
};

/// A sampled perturbation destabilized the closed loop.
class SampleError : public Error {
 public:
  using Error::Error;
};

}  // namespace lqgame
