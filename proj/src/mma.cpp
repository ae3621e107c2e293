#include "dsco/mma.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dsco::opt {

namespace {

struct Subproblem {
  Eigen::VectorXd p, q, low, upp, alpha, beta;
};

// argmin over [alpha, beta] of p/(U-y) + q/(y-L) + mu*y. The derivative is
// strictly increasing, so a safeguarded Newton iteration on it converges.
double solve_scalar(double p, double q, double L, double U, double a, double b, double mu) {
  auto dphi = [&](double y) {
    const double du = U - y, dl = y - L;
    return p / (du * du) - q / (dl * dl) + mu;
  };
  if (mu == 0.0) {
    const double sp = std::sqrt(p), sq = std::sqrt(q);
    return std::clamp((sp * L + sq * U) / (sp + sq), a, b);
  }
  if (dphi(a) >= 0.0) return a;
  if (dphi(b) <= 0.0) return b;
  double lo = a, hi = b;
  double y = 0.5 * (a + b);
  for (int it = 0; it < 100; ++it) {
    const double d = dphi(y);
    if (d > 0.0) hi = y; else lo = y;
    if (d == 0.0 || hi - lo <= 1e-15 * (1.0 + std::abs(y))) break;
    const double du = U - y, dl = y - L;
    const double dd = 2.0 * p / (du * du * du) + 2.0 * q / (dl * dl * dl);
    double next = y - d / dd;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - y) <= 1e-15 * (1.0 + std::abs(y))) {
      y = next;
      break;
    }
    y = next;
  }
  return y;
}

Eigen::VectorXd primal(const Subproblem& s, const Eigen::VectorXd* a, double lambda) {
  const Eigen::Index n = s.p.size();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = a ? lambda * (*a)(i) : 0.0;
    y(i) = solve_scalar(s.p(i), s.q(i), s.low(i), s.upp(i), s.alpha(i), s.beta(i), mu);
  }
  return y;
}

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string("non-finite ") + what + " in MMA input");
}

}  // namespace

MmaStep mma_update(const BoxConstrainedProblem& problem, const AsymptoteState& state,
                   const MmaParams& params) {
  const Eigen::Index n = problem.x.size();
  if (problem.lower.size() != n || problem.upper.size() != n || problem.gradient.size() != n) {
    throw std::invalid_argument("MMA: bounds and gradient must match the design length");
  }
  if (problem.constraint && problem.constraint->gradient.size() != n) {
    throw std::invalid_argument("MMA: constraint gradient must match the design length");
  }
  check_finite(problem.x, "design");
  check_finite(problem.gradient, "gradient");
  if ((problem.upper.array() < problem.lower.array()).any()) {
    throw std::invalid_argument("MMA: lower bound exceeds upper bound");
  }

  const Eigen::VectorXd x = problem.x.cwiseMax(problem.lower).cwiseMin(problem.upper);
  const Eigen::VectorXd range = (problem.upper - problem.lower).cwiseMax(1e-12);

  MmaStep out;
  out.state.iteration = state.iteration + 1;
  auto& low = out.state.low;
  auto& upp = out.state.upp;
  const bool warm = state.iteration >= 2 && state.xold1.size() == n && state.xold2.size() == n &&
                    state.low.size() == n && state.upp.size() == n;
  if (!warm) {
    low = x - params.asyinit * range;
    upp = x + params.asyinit * range;
  } else {
    low.resize(n);
    upp.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = (x(i) - state.xold1(i)) * (state.xold1(i) - state.xold2(i));
      const double factor = z > 0.0 ? params.asyincr : (z < 0.0 ? params.asydecr : 1.0);
      low(i) = x(i) - factor * (state.xold1(i) - state.low(i));
      upp(i) = x(i) + factor * (state.upp(i) - state.xold1(i));
      low(i) = std::clamp(low(i), x(i) - 10.0 * range(i), x(i) - params.asymin * range(i));
      upp(i) = std::clamp(upp(i), x(i) + params.asymin * range(i), x(i) + 10.0 * range(i));
    }
  }

  Subproblem s;
  s.low = low;
  s.upp = upp;
  s.alpha.resize(n);
  s.beta.resize(n);
  s.p.resize(n);
  s.q.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.alpha(i) = std::max({low(i) + params.albefa * (x(i) - low(i)), x(i) - params.move * range(i),
                           problem.lower(i)});
    s.beta(i) = std::min({upp(i) - params.albefa * (upp(i) - x(i)), x(i) + params.move * range(i),
                          problem.upper(i)});
    const double g = problem.gradient(i);
    const double gp = std::max(g, 0.0), gm = std::max(-g, 0.0);
    const double reg = params.raa0 / range(i);
    const double ux = upp(i) - x(i), xl = x(i) - low(i);
    s.p(i) = ux * ux * (1.001 * gp + 0.001 * gm + reg);
    s.q(i) = xl * xl * (0.001 * gp + 1.001 * gm + reg);
  }

  if (!problem.constraint) {
    out.x = primal(s, nullptr, 0.0);
  } else {
    const auto& con = *problem.constraint;
    check_finite(con.gradient, "constraint gradient");
    const Eigen::VectorXd& a = con.gradient;
    const double rhs = a.dot(x) - con.value;  // a^T y <= rhs
    auto violation = [&](const Eigen::VectorXd& y) { return a.dot(y) - rhs; };

    double best_case = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) best_case += std::min(a(i) * s.alpha(i), a(i) * s.beta(i));
    const double tol = 1e-12 * (1.0 + std::abs(rhs));
    if (best_case - rhs > tol) {
      throw InfeasibleSubproblemError(
          "MMA subproblem infeasible: constraint cannot be met within the move window (excess " +
          std::to_string(best_case - rhs) + ")");
    }

    Eigen::VectorXd y = primal(s, &a, 0.0);
    double lambda = 0.0;
    if (violation(y) > 0.0) {
      double lo = 0.0, hi = 1.0;
      Eigen::VectorXd y_hi = primal(s, &a, hi);
      int grow = 0;
      while (violation(y_hi) > 0.0) {
        lo = hi;
        hi *= 10.0;
        y_hi = primal(s, &a, hi);
        if (++grow > 400) throw InfeasibleSubproblemError("MMA dual bisection failed to bracket");
      }
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        Eigen::VectorXd y_mid = primal(s, &a, mid);
        if (violation(y_mid) > 0.0) {
          lo = mid;
        } else {
          hi = mid;
          y_hi = std::move(y_mid);
        }
      }
      y = std::move(y_hi);
      lambda = hi;
    }
    out.x = std::move(y);
    out.multiplier = lambda;
  }

  out.x = out.x.cwiseMax(problem.lower).cwiseMin(problem.upper);
  out.state.xold2 = (warm || state.xold1.size() == n) ? state.xold1 : x;
  out.state.xold1 = x;
  return out;
}

}  // namespace dsco::opt
