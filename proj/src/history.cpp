#include "dsco/history.hpp"

#include <algorithm>

namespace dsco {

std::optional<double> convergence_variance(std::span<const double> history) {
  if (history.size() < 5) return std::nullopt;
  const auto tail = history.subspan(history.size() - 5);
  double mean = 0.0;
  for (double c : tail) mean += c;
  mean /= 5.0;
  double var = 0.0;
  for (double c : tail) var += (c - mean) * (c - mean);
  return var / 5.0;
}

std::vector<double> best_so_far(std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(out.empty() ? v : std::min(out.back(), v));
  return out;
}

}  // namespace dsco
