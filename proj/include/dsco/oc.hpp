#pragma once

// Optimality-criteria updates for volume-constrained density problems.

#include <Eigen/Core>

#include <span>
#include <stdexcept>

namespace dsco::opt {

class BisectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OcParams {
  double move = 0.2;
  double damping = 0.5;        ///< exponent on the update ratio
  double density_floor = 1e-3; ///< step scale used below this density, so x = 0 can regrow
  double positive_clamp = -1e-12; ///< positive sensitivities are replaced by this value
};

struct OcResult {
  Eigen::VectorXd x;
  double volume = 0.0;         ///< sum of x after the update
  double target = 0.0;         ///< volume actually aimed at
  bool target_clipped = false; ///< requested volume was outside the reachable window
};

/// x_i <- clamp(x_i + max(x_i, floor) * ((-s_i / lambda)^damping - 1)) inside the
/// move window and [lower, upper], with lambda chosen by bisection so that
/// sum x = volume_target to 1e-9 * N. Targets outside the reachable window are
/// clipped to it. Throws BisectionError if the multiplier cannot be bracketed.
OcResult oc_update(std::span<const double> x, std::span<const double> sensitivities,
                   double volume_target, std::span<const double> lower,
                   std::span<const double> upper, const OcParams& params = {});

/// Convenience overload with uniform bounds.
OcResult oc_update(std::span<const double> x, std::span<const double> sensitivities,
                   double volume_target, double lower, double upper, const OcParams& params = {});

/// Exchange rule between two phases sharing a fixed per-element budget
/// x_a + x_b = r: x_a <- clamp(x_a + max(x_a, floor) * ((s_a / s_b)^damping - 1))
/// inside the move window and [lower, upper]. Both sensitivities are clamped negative first.
Eigen::VectorXd oc_exchange_update(std::span<const double> x, std::span<const double> s_a,
                                   std::span<const double> s_b, std::span<const double> lower,
                                   std::span<const double> upper, const OcParams& params = {});

}  // namespace dsco::opt
