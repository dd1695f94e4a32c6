#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hardshrink {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Ordered list of coordinate indices. Order is meaningful where a function
/// documents it (e.g. top_k_indices returns magnitude order).
using IndexSet = std::vector<Index>;

/// Raised on violated preconditions (bad sizes, out-of-range levels, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a linear system cannot be solved even after regularization.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Raised when an iterative solver produces a non-finite objective value.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Indices of the nonzero entries of v, ascending.
IndexSet support_of(const Vector& v);

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

}  // namespace hardshrink
