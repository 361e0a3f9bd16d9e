#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mfg {

// Small fixed-capacity vectors/matrices: state and control dimensions are at most 2,
// so evaluations in hot loops never touch the heap.
using SVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using SMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

namespace tol {
inline constexpr double kMass = 1e-9;         // per-time-node probability mass
inline constexpr double kPlanMarginal = 1e-8; // transport plan marginals
inline constexpr double kRecompose = 1e-12;   // conditional-family recomposition
inline constexpr double kEigenClamp = 1e-12;  // PSD clamping threshold
inline constexpr double kNegativity = 1e-12;  // FPK weight floor
inline constexpr double kLp = 1e-8;           // LP optimality
inline constexpr double kJensen = 1e-12;      // sub-probability Jensen slack
inline constexpr double kMembership = 1e-12;  // control-set membership
}  // namespace tol

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Explicit time step violates the positivity (CFL) condition.
class StepSizeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The discrete scheme produced weights below the negativity floor,
// or no positive stencil exists for the diffusion matrix.
class SchemeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InfeasibleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BoundTooSmallError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace mfg
