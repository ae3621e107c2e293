#pragma once

// Method of moving asymptotes for box-constrained problems with at most one
// linear constraint.

#include <Eigen/Core>

#include <optional>
#include <stdexcept>

namespace dsco::opt {

class InfeasibleSubproblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MmaParams {
  double asyinit = 0.5;   ///< initial asymptote offset, fraction of (upper - lower)
  double asyincr = 1.2;   ///< widening factor on monotone progress
  double asydecr = 0.7;   ///< shrinking factor on oscillation
  double albefa = 0.1;    ///< subproblem bounds keep this fraction away from the asymptotes
  double move = 0.2;      ///< move limit, fraction of (upper - lower)
  double raa0 = 1e-5;     ///< curvature regularization
  double asymin = 1e-5;   ///< closest asymptote distance, fraction of (upper - lower)
};

/// Linear constraint g(y) = value + gradient^T (y - x) <= 0. Volume constraints
/// are linear, so the subproblem treats them exactly.
struct LinearConstraint {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

struct BoxConstrainedProblem {
  Eigen::VectorXd x;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double objective = 0.0;
  Eigen::VectorXd gradient;
  std::optional<LinearConstraint> constraint;
};

struct AsymptoteState {
  Eigen::VectorXd xold1;
  Eigen::VectorXd xold2;
  Eigen::VectorXd low;
  Eigen::VectorXd upp;
  int iteration = 0;
};

struct MmaStep {
  Eigen::VectorXd x;
  AsymptoteState state;
  double multiplier = 0.0;  ///< dual variable of the linear constraint
};

/// One MMA update. The returned x lies in [lower, upper] and inside the move
/// window; with a constraint, the returned x satisfies the linearized
/// constraint. Throws InfeasibleSubproblemError when no point in the window can
/// satisfy it, std::invalid_argument on inconsistent sizes or non-finite data.
MmaStep mma_update(const BoxConstrainedProblem& problem, const AsymptoteState& state,
                   const MmaParams& params = {});

}  // namespace dsco::opt
