#include "helpers.hpp"

#include "dsco/filter.hpp"
#include "dsco/history.hpp"
#include "dsco/oc.hpp"

#include <numeric>

using namespace dsco;
using opt::oc_update;

namespace {

// Void stiffness for the toy problem; islands of solid held only by void cells
// would otherwise make the system numerically singular.
constexpr double kVoid = 1e-4;

double binary_compliance(fem::StiffnessSolver& solver, const std::vector<int>& solid,
                         const fem::Matrix3& D0) {
  std::vector<fem::Matrix3> D;
  for (int s : solid) D.push_back((s ? 1.0 : kVoid) * D0);
  return solver.solve(D).compliance;
}

}  // namespace

TEST_SUITE("oc") {
  TEST_CASE("equal sensitivities give a uniform design") {
    const std::vector<double> x(10, 0.5), s(10, -1.0);
    const auto r = oc_update(x, s, 4.0, 0.0, 1.0);
    for (int i = 0; i < 10; ++i) CHECK(r.x(i) == doctest::Approx(0.4).epsilon(1e-8));
    CHECK(std::abs(r.volume - 4.0) <= 1e-6 * 10);
    CHECK_FALSE(r.target_clipped);
  }

  TEST_CASE("dominant sensitivity saturates first") {
    std::vector<double> x(10, 0.5), s(10, -1.0);
    s[3] = -1e6;
    const auto r = oc_update(x, s, 5.0, 0.0, 1.0);
    CHECK(r.x(3) == doctest::Approx(0.7));  // upper end of the move window
    for (int i = 0; i < 10; ++i)
      if (i != 3) CHECK(r.x(i) < r.x(3));
    CHECK(std::abs(r.volume - 5.0) <= 1e-5);
  }

  TEST_CASE("zero density can regrow") {
    std::vector<double> x{0.0, 1.0}, s{-10.0, -0.1};
    const auto r = oc_update(x, s, 1.0, 0.0, 1.0);
    CHECK(r.x(0) > 0.0);
    CHECK(r.x(0) + r.x(1) == doctest::Approx(1.0));
  }

  TEST_CASE("out-of-reach targets are clipped and flagged") {
    const std::vector<double> x(4, 0.5), s(4, -1.0);
    const auto r = oc_update(x, s, 3.9, 0.0, 1.0);
    CHECK(r.target_clipped);
    CHECK(r.volume == doctest::Approx(2.8));
    for (int i = 0; i < 4; ++i) CHECK(r.x(i) == doctest::Approx(0.7));
  }

  TEST_CASE("per-element bounds are exact") {
    const std::vector<double> x{0.2, 0.5, 0.5, 0.9}, s{-3.0, -1.0, 2.0, -0.5};
    const std::vector<double> lo{0.1, 0.45, 0.0, 0.9}, hi{0.25, 0.6, 1.0, 0.9};
    const auto r = oc_update(x, s, 2.0, lo, hi);
    for (int i = 0; i < 4; ++i) {
      CHECK(r.x(i) >= lo[static_cast<std::size_t>(i)]);
      CHECK(r.x(i) <= hi[static_cast<std::size_t>(i)]);
    }
    CHECK(r.x(3) == 0.9);
  }

  TEST_CASE("exchange rule") {
    const std::vector<double> x{0.5, 0.5, 0.5}, sa{-2.0, -1.0, -1.0}, sb{-1.0, -1.0, -2.0};
    const std::vector<double> lo(3, 0.0), hi(3, 1.0);
    const auto y = opt::oc_exchange_update(x, sa, sb, lo, hi);
    CHECK(y(0) > 0.5);
    CHECK(y(1) == doctest::Approx(0.5));
    CHECK(y(2) < 0.5);
  }

  TEST_CASE("4x4 SIMP design is near the best binary layout") {
    const auto mesh = fem::build_mesh(4, 4);
    const auto bc = testutil::cantilever_bc(mesh);
    fem::StiffnessSolver solver(mesh, bc);
    const auto D0 = testutil::isotropic();
    const auto ke0 = fem::element_stiffness(D0);
    const int N = 16, solid = 8;

    // Exhaustive search over every layout with exactly 8 solid cells.
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < (1 << N); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) != solid) continue;
      std::vector<int> s(N);
      for (int e = 0; e < N; ++e) s[static_cast<std::size_t>(e)] = (mask >> e) & 1;
      best = std::min(best, binary_compliance(solver, s, D0));
    }

    Eigen::VectorXd x = Eigen::VectorXd::Constant(N, 0.5);
    for (int it = 0; it < 200; ++it) {
      std::vector<fem::Matrix3> D;
      for (int e = 0; e < N; ++e) D.push_back((kVoid + (1 - kVoid) * std::pow(x(e), 3)) * D0);
      const auto res = solver.solve(D);
      std::vector<double> s(N);
      for (int e = 0; e < N; ++e) {
        s[static_cast<std::size_t>(e)] = fem::element_compliance_sensitivity(
            res.displacements, mesh, e, 3 * (1 - kVoid) * x(e) * x(e) * ke0);
      }
      x = oc_update(std::span<const double>(x.data(), N), s, 0.5 * N, 0.0, 1.0).x;
    }
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x(a) > x(b); });
    std::vector<int> layout(N, 0);
    for (int k = 0; k < solid; ++k) layout[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
    const double c = binary_compliance(solver, layout, D0);
    CHECK(c <= 1.05 * best);
  }
}

TEST_SUITE("history") {
  TEST_CASE("variance of the last five values") {
    CHECK_FALSE(convergence_variance(std::vector<double>{1, 2, 3, 4}).has_value());
    CHECK(*convergence_variance(std::vector<double>{7, 7, 7, 7, 7}) == 0.0);
    CHECK(*convergence_variance(std::vector<double>{1, 2, 3, 4, 5}) == doctest::Approx(2.0));
    CHECK(*convergence_variance(std::vector<double>{302.7, 302.8, 302.7, 302.6, 302.7}) ==
          doctest::Approx(0.004).epsilon(1e-9));
    CHECK(*convergence_variance(std::vector<double>{100, 1, 2, 3, 4, 5}) == doctest::Approx(2.0));
  }

  TEST_CASE("best so far") {
    const auto b = best_so_far(std::vector<double>{5, 3, 4, 1, 2});
    CHECK(b == std::vector<double>{5, 3, 3, 1, 1});
  }
}
