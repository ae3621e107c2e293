#include "dsco/oc.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace dsco::opt {

namespace {

void check_sizes(std::size_t n, std::initializer_list<std::size_t> others) {
  for (auto m : others) {
    if (m != n) throw std::invalid_argument("OC: input lengths differ");
  }
}

}  // namespace

OcResult oc_update(std::span<const double> x, std::span<const double> sensitivities,
                   double volume_target, std::span<const double> lower,
                   std::span<const double> upper, const OcParams& params) {
  const std::size_t n = x.size();
  check_sizes(n, {sensitivities.size(), lower.size(), upper.size()});
  if (!std::isfinite(volume_target)) throw std::invalid_argument("OC: non-finite volume target");

  std::vector<double> lo(n), hi(n), base(n), s(n), xc(n);
  double vmin = 0.0, vmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(sensitivities[i])) {
      throw std::invalid_argument("OC: non-finite design or sensitivity");
    }
    if (lower[i] > upper[i]) throw std::invalid_argument("OC: lower bound exceeds upper bound");
    const double xi = std::clamp(x[i], lower[i], upper[i]);
    lo[i] = std::max(lower[i], xi - params.move);
    hi[i] = std::min(upper[i], xi + params.move);
    xc[i] = xi;
    base[i] = std::max(xi, params.density_floor);
    s[i] = std::min(sensitivities[i], params.positive_clamp);
    vmin += lo[i];
    vmax += hi[i];
  }

  OcResult out;
  out.target = volume_target;
  if (volume_target < vmin) {
    out.target = vmin;
    out.target_clipped = true;
  } else if (volume_target > vmax) {
    out.target = vmax;
    out.target_clipped = true;
  }

  Eigen::VectorXd xn(static_cast<Eigen::Index>(n));
  auto evaluate = [&](double lambda) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double cand = xc[i] + base[i] * (std::pow(-s[i] / lambda, params.damping) - 1.0);
      const double val = std::clamp(cand, lo[i], hi[i]);
      xn(static_cast<Eigen::Index>(i)) = val;
      v += val;
    }
    return v;
  };

  if (n == 0) {
    out.x = xn;
    return out;
  }
  if (out.target_clipped || vmax - vmin <= 0.0) {
    // Every element sits at one end of its window.
    const bool at_min = out.target <= vmin;
    for (std::size_t i = 0; i < n; ++i) xn(static_cast<Eigen::Index>(i)) = at_min ? lo[i] : hi[i];
    out.x = xn;
    out.volume = xn.sum();
    return out;
  }

  // Volume is non-increasing in lambda; bisect in log space.
  double l1 = 1e-300, l2 = 1.0;
  int guard = 0;
  while (evaluate(l2) > out.target) {
    l1 = l2;
    l2 *= 1e3;
    if (++guard > 200) throw BisectionError("OC multiplier bisection failed to bracket from above");
  }
  guard = 0;
  while (evaluate(l1) < out.target) {
    if (l1 <= 1e-300) break;
    l2 = l1;
    l1 *= 1e-3;
    if (++guard > 200) throw BisectionError("OC multiplier bisection failed to bracket from below");
  }
  const double tol = 1e-9 * static_cast<double>(n);
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(l1 * l2);
    const double v = evaluate(mid);
    if (std::abs(v - out.target) <= tol) break;
    if (v > out.target) l1 = mid; else l2 = mid;
    if (l2 / l1 - 1.0 < 1e-15) break;
  }
  out.x = xn;
  out.volume = xn.sum();
  if (std::abs(out.volume - out.target) > 1e-6 * static_cast<double>(n)) {
    throw BisectionError("OC multiplier bisection did not reach the volume target (off by " +
                         std::to_string(out.volume - out.target) + ")");
  }
  return out;
}

OcResult oc_update(std::span<const double> x, std::span<const double> sensitivities,
                   double volume_target, double lower, double upper, const OcParams& params) {
  std::vector<double> lo(x.size(), lower), hi(x.size(), upper);
  return oc_update(x, sensitivities, volume_target, lo, hi, params);
}

Eigen::VectorXd oc_exchange_update(std::span<const double> x, std::span<const double> s_a,
                                   std::span<const double> s_b, std::span<const double> lower,
                                   std::span<const double> upper, const OcParams& params) {
  const std::size_t n = x.size();
  check_sizes(n, {s_a.size(), s_b.size(), lower.size(), upper.size()});
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(s_a[i]) || !std::isfinite(s_b[i])) {
      throw std::invalid_argument("OC exchange: non-finite input");
    }
    const double xi = std::clamp(x[i], lower[i], upper[i]);
    const double sa = std::min(s_a[i], params.positive_clamp);
    const double sb = std::min(s_b[i], params.positive_clamp);
    const double cand =
        xi + std::max(xi, params.density_floor) * (std::pow(sa / sb, params.damping) - 1.0);
    const double lo = std::max(lower[i], xi - params.move);
    const double hi = std::min(upper[i], xi + params.move);
    out(static_cast<Eigen::Index>(i)) = std::clamp(cand, lo, hi);
  }
  return out;
}

}  // namespace dsco::opt
