#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <stdexcept>
#include <string>

namespace hypo {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// A linear map given by its action on vectors.
using LinearMap = std::function<Vec(const Vec&)>;

/// Largest phase dimension for which dense materialization and dense
/// eigensolves are attempted.
inline constexpr Index kDenseCap = 4096;

/// Thrown when a caller-supplied value violates a precondition. `field`
/// names the offending parameter (dotted config path where applicable).
class ValidationError : public std::invalid_argument {
public:
  ValidationError(std::string field, const std::string& reason)
      : std::invalid_argument(field + ": " + reason), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// Iterative method failed to reach its tolerance, or a computed quantity
/// broke an invariant that the algorithm relies on.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace hypo
