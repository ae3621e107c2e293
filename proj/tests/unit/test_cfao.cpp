#include "helpers.hpp"

#include "dsco/cfao.hpp"

using namespace dsco;
using namespace dsco::cfao;
using material::kPi;
using testutil::rel_err;

namespace {

CfaoDesign random_design(int N) {
  CfaoDesign d;
  d.rho.resize(N);
  d.theta.resize(N);
  for (int e = 0; e < N; ++e) {
    d.rho(e) = testutil::uniform(0.2, 1.0);
    d.theta(e) = testutil::uniform(-1.2, 1.2);
  }
  return d;
}

CfaoModel model_for(const fem::Matrix3& D) {
  CfaoModel m;
  m.D_base = D;
  return m;
}

}  // namespace

TEST_SUITE("cfao") {
  TEST_CASE("initialization from phases") {
    Eigen::MatrixXd alpha(3, 5);
    alpha << 0, 0, 1, 0, 0,  //
        0, 0, 0, 0, 1,       //
        0.1, 0.5, 0.2, 0.0, 0.2;
    const material::CandidateAngleSet c({0, -45, 45, 90});
    const auto d = init_from_sbpto(alpha, c);
    CHECK(d.rho(0) == 1.0);
    CHECK(d.theta(0) == doctest::Approx(kPi / 4));
    CHECK(d.rho(1) == 0.0);
    CHECK(d.theta(1) == 0.0);
    CHECK(d.rho(2) == doctest::Approx(0.8));
    CHECK(d.theta(2) == doctest::Approx(-kPi / 4));
  }

  TEST_CASE("angle filter examples") {
    const auto mesh = fem::build_mesh(2, 1);
    const auto k15 = opt::build_filter_kernel(mesh, 1.5);
    CfaoDesign d{Eigen::Vector2d(1, 1), Eigen::Vector2d(0, kPi / 3)};
    const auto t = apply_angle_filter(k15, d);
    CHECK(t(0) == doctest::Approx(kPi / 12).epsilon(1e-14));
    CHECK(t(1) == doctest::Approx((0.5 * 0 + 1.5 * kPi / 3) / 2.0).epsilon(1e-14));

    const auto k1 = opt::build_filter_kernel(mesh, 1.0);
    CHECK(apply_angle_filter(k1, d) == d.theta);

    const auto big = fem::build_mesh(6, 5);
    const auto kb = opt::build_filter_kernel(big, 2.5);
    auto u = random_design(30);
    u.theta.setConstant(0.7);
    const auto tu = apply_angle_filter(kb, u);
    CHECK((tu.array() - 0.7).abs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("void neighbourhoods pass through and results stay in range") {
    const auto mesh = fem::build_mesh(4, 4);
    const auto k = opt::build_filter_kernel(mesh, 1.5);
    CfaoDesign d = uniform_design(16, 0.0, 0.3);
    d.theta(5) = -0.4;
    const auto t = apply_angle_filter(k, d);
    CHECK(t == d.theta);

    for (int trial = 0; trial < 20; ++trial) {
      auto r = random_design(16);
      for (int e = 0; e < 16; ++e) r.theta(e) = testutil::uniform(-kPi / 2, kPi / 2);
      const auto f = apply_angle_filter(k, r);
      CHECK(f.maxCoeff() <= kPi / 2);
      CHECK(f.minCoeff() >= -kPi / 2);
      AngleFilterOptions printed;
      printed.normalize_by_density = false;
      const auto g = apply_angle_filter(k, r, printed);
      CHECK(g.maxCoeff() <= kPi / 2);
    }
  }

  TEST_CASE("gradients match finite differences") {
    const auto mesh = fem::build_mesh(4, 3);
    fem::StiffnessSolver solver(mesh, testutil::cantilever_bc(mesh));
    const auto kernel = opt::build_filter_kernel(mesh, 1.5);
    for (bool by_density : {true, false}) {
      auto model = model_for(testutil::mbb_material());
      model.filter.normalize_by_density = by_density;
      const auto d = random_design(12);
      const auto ev = cfao_compliance_and_gradients(d, kernel, solver, model);
      const double sr = ev.d_rho.cwiseAbs().maxCoeff(), st = ev.d_theta.cwiseAbs().maxCoeff();
      int bad = 0;
      for (int e = 0; e < 12; ++e) {
        auto p = d, m = d;
        p.rho(e) += 1e-6;
        m.rho(e) -= 1e-6;
        const double fr = (cfao_compliance_and_gradients(p, kernel, solver, model).compliance -
                           cfao_compliance_and_gradients(m, kernel, solver, model).compliance) / 2e-6;
        if (rel_err(ev.d_rho(e), fr, 1e-6 * sr) > 1e-4) ++bad;
        p = d;
        m = d;
        p.theta(e) += 1e-5;
        m.theta(e) -= 1e-5;
        const double ft = (cfao_compliance_and_gradients(p, kernel, solver, model).compliance -
                           cfao_compliance_and_gradients(m, kernel, solver, model).compliance) / 2e-5;
        if (rel_err(ev.d_theta(e), ft, 1e-6 * st) > 1e-4) ++bad;
      }
      CHECK(bad == 0);
    }
  }

  TEST_CASE("isotropic material has no angle sensitivity") {
    const auto mesh = fem::build_mesh(4, 3);
    fem::StiffnessSolver solver(mesh, testutil::cantilever_bc(mesh));
    const auto kernel = opt::build_filter_kernel(mesh, 1.5);
    const auto ev = cfao_compliance_and_gradients(random_design(12), kernel, solver,
                                                  model_for(testutil::isotropic()));
    CHECK(ev.d_theta.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, ev.compliance));
  }

  TEST_CASE("zero density decouples the angle") {
    const auto mesh = fem::build_mesh(4, 3);
    fem::StiffnessSolver solver(mesh, testutil::cantilever_bc(mesh));
    const auto kernel = opt::build_filter_kernel(mesh, 1.0);
    auto d = random_design(12);
    d.rho(10) = 0.0;
    const auto ev = cfao_compliance_and_gradients(d, kernel, solver, model_for(testutil::mbb_material()));
    CHECK(ev.d_theta(10) == 0.0);
  }

  TEST_CASE("wrap hazards are flagged") {
    const auto mesh = fem::build_mesh(3, 1);
    const auto k = opt::build_filter_kernel(mesh, 1.5);
    CfaoDesign d{Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(1.5, -1.5, -1.5)};
    const auto h = angle_wrap_hazards(k, d);
    CHECK(h == std::vector<int>{0, 1});
    d.theta << 0.1, 0.2, 0.3;
    CHECK(angle_wrap_hazards(k, d).empty());
  }

  TEST_CASE("run improves on its start and keeps volume") {
    const auto mesh = fem::build_mesh(12, 6);
    fem::StiffnessSolver solver(mesh, testutil::cantilever_bc(mesh));
    CfaoOptions opt;
    opt.model = model_for(testutil::mbb_material());
    opt.max_iter = 60;
    const auto res = run_cfao(uniform_design(72, 0.5, 0.0), opt, solver);
    const auto& dg = res.diagnostics;
    CHECK(res.compliance <= dg.compliance.front());
    CHECK(res.compliance == dg.compliance[static_cast<std::size_t>(dg.best_iteration - 1)]);
    CHECK(res.design.rho.sum() <= 0.5 * 72 + 1e-6 * 72);
    CHECK(res.design.rho.minCoeff() >= 0.0);
    CHECK(res.design.rho.maxCoeff() <= 1.0);
    CHECK(res.design.theta.cwiseAbs().maxCoeff() <= kPi / 2);
    CHECK(dg.iterations() == static_cast<int>(dg.records.size()));
    CHECK_FALSE(dg.records.front().h_eta.has_value());
    if (!dg.converged) CHECK_FALSE(dg.warnings.empty());
  }

  TEST_CASE("optimal single element is a fixed point") {
    const auto mesh = fem::build_mesh(1, 1);
    fem::StiffnessSolver solver(mesh, testutil::cantilever_bc(mesh));
    const auto kernel = opt::build_filter_kernel(mesh, 1.5);
    const auto model = model_for(testutil::mbb_material());
    auto c_at = [&](double th) {
      return cfao_compliance_and_gradients(uniform_design(1, 1.0, th), kernel, solver, model).compliance;
    };
    // Golden-section search for the stiffest angle.
    double a = -kPi / 2, b = kPi / 2;
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 200; ++it) {
      const double x1 = b - g * (b - a), x2 = a + g * (b - a);
      if (c_at(x1) < c_at(x2)) b = x2;
      else a = x1;
    }
    const double best = 0.5 * (a + b);
    CfaoOptions opt;
    opt.model = model;
    opt.update_rho = false;
    opt.volume_fraction = 1.0;
    opt.max_iter = 20;
    const auto res = run_cfao(uniform_design(1, 1.0, best), opt, solver);
    CHECK(std::abs(res.design.theta(0) - best) <= 1e-6);
    CHECK(rel_err(res.compliance, c_at(best)) <= 1e-12);
  }
}
