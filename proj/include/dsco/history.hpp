#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dsco {

/// One row of convergence.csv.
struct IterationRecord {
  std::string stage;
  int iter = 0;
  double compliance = 0.0;
  std::optional<double> h_eta;
  double volume = 0.0;  ///< volume fraction
  std::string extra;
};

/// Population variance of the trailing five values, or nullopt with fewer
/// than five.
std::optional<double> convergence_variance(std::span<const double> history);

/// Running minimum of a sequence.
std::vector<double> best_so_far(std::span<const double> values);

}  // namespace dsco
