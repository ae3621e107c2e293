#include "helpers.hpp"

#include "dsco/dmo.hpp"

using namespace dsco;
using testutil::rel_err;

namespace {

const material::CandidateAngleSet kFour({0, -45, 45, 90});

dmo::DmoDesign random_chi(int N, int n, double lo = 0.1, double hi = 0.9) {
  dmo::DmoDesign chi(N, n);
  for (int e = 0; e < N; ++e)
    for (int j = 0; j < n; ++j) chi(e, j) = testutil::uniform(lo, hi);
  return chi;
}

}  // namespace

TEST_SUITE("dmo") {
  TEST_CASE("uniform initial design") {
    const auto mesh = fem::build_mesh(6, 4);
    const auto chi = dmo::init_dmo(mesh, kFour, 0.5);
    CHECK(chi.rows() == 24);
    CHECK(chi.cols() == 4);
    CHECK((chi.array() == 0.125).all());
    CHECK(chi.sum() == 0.5 * 24);
    const auto two = dmo::init_dmo(mesh, material::CandidateAngleSet({0, 90}), 0.5);
    CHECK((two.array() == 0.25).all());
    CHECK_THROWS_AS(dmo::init_dmo(mesh, kFour, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(dmo::init_dmo(mesh, kFour, 0.0), std::invalid_argument);
  }

  TEST_CASE("one-hot design reproduces plain analysis") {
    const auto mesh = fem::build_mesh(2, 2);
    const auto bc = testutil::cantilever_bc(mesh);
    const auto D = testutil::mbb_material();
    dmo::DmoDesign chi = dmo::DmoDesign::Zero(4, 4);
    const int pick[4] = {0, 3, 2, 1};
    std::vector<fem::Matrix3> Ds;
    for (int e = 0; e < 4; ++e) {
      chi(e, pick[e]) = 1.0;
      Ds.push_back(material::rotate_constitutive(D, kFour.radians(static_cast<std::size_t>(pick[e]))));
    }
    const auto ev = dmo::dmo_compliance_and_gradient(chi, mesh, bc, kFour, D, 3.0, 1e-9);
    const auto ref = fem::assemble_and_solve(mesh, Ds, bc);
    CHECK(rel_err(ev.compliance, ref.compliance) < 1e-6);
  }

  TEST_CASE("gradient matches finite differences on every entry") {
    const auto mesh = fem::build_mesh(4, 3);
    const auto bc = testutil::cantilever_bc(mesh);
    const auto D = testutil::mbb_material();
    const auto chi = random_chi(12, 4);
    for (double p : {1.0, 3.0}) {
      const auto ev = dmo::dmo_compliance_and_gradient(chi, mesh, bc, kFour, D, p, 1e-9);
      const double scale = ev.gradient.cwiseAbs().maxCoeff();
      const double h = 1e-6;
      // Rounding noise of the difference quotient, a few ulps of c over 2h.
      const double noise = 100 * std::numeric_limits<double>::epsilon() * ev.compliance / h;
      int bad = 0;
      for (int e = 0; e < 12; ++e)
        for (int j = 0; j < 4; ++j) {
          auto cp = chi, cm = chi;
          cp(e, j) += h;
          cm(e, j) -= h;
          const double fd =
              (dmo::dmo_compliance_and_gradient(cp, mesh, bc, kFour, D, p, 1e-9).compliance -
               dmo::dmo_compliance_and_gradient(cm, mesh, bc, kFour, D, p, 1e-9).compliance) / (2 * h);
          const double err = std::abs(ev.gradient(e, j) - fd);
          if (err > std::max(1e-5 * std::max(std::abs(fd), 1e-6 * scale), noise)) ++bad;
        }
      CHECK(bad == 0);
    }
  }

  TEST_CASE("adding a candidate's own material never raises compliance") {
    const auto mesh = fem::build_mesh(4, 3);
    const auto bc = testutil::cantilever_bc(mesh);
    const auto D = testutil::mbb_material();

    // One nonzero candidate per row: the active entry is non-positive.
    dmo::DmoDesign chi = dmo::DmoDesign::Zero(12, 4);
    for (int e = 0; e < 12; ++e) chi(e, e % 4) = testutil::uniform(0.2, 0.9);
    const auto ev = dmo::dmo_compliance_and_gradient(chi, mesh, bc, kFour, D, 3.0, 1e-9);
    const double scale = ev.gradient.cwiseAbs().maxCoeff();
    for (int e = 0; e < 12; ++e) CHECK(ev.gradient(e, e % 4) <= 1e-9 * scale);

    // With unnormalized weights a competing candidate lowers the active weight,
    // so mixed rows can carry positive entries.
    const auto mixed = dmo::dmo_compliance_and_gradient(random_chi(12, 4), mesh, bc, kFour, D, 3.0, 1e-9);
    CHECK(mixed.gradient.maxCoeff() > 0.0);
  }

  TEST_CASE("fibre convergence counting") {
    Eigen::MatrixXd one_hot = Eigen::MatrixXd::Zero(5, 3);
    for (int e = 0; e < 5; ++e) one_hot(e, e % 3) = 1.0;
    CHECK(dmo::fibre_convergence(one_hot, 0.95) == 1.0);
    const Eigen::MatrixXd half = Eigen::MatrixXd::Constant(4, 2, 0.5);
    CHECK(dmo::fibre_convergence(half, 0.95) == 0.0);
    Eigen::MatrixXd ten = Eigen::MatrixXd::Zero(10, 4);
    for (int e = 0; e < 9; ++e) ten(e, 1) = 1.0;
    ten.row(9).setConstant(0.25);
    CHECK(dmo::fibre_convergence(ten, 0.95) == doctest::Approx(0.9));
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 4);
    CHECK(dmo::fibre_convergence(zero, 0.95) == 1.0);
  }

  TEST_CASE("run keeps volume and bounds and tracks penalty continuation") {
    const auto mesh = fem::build_mesh(12, 6);
    const auto bc = testutil::cantilever_bc(mesh);
    fem::StiffnessSolver solver(mesh, bc);
    dmo::DmoOptions opt;
    opt.volume_fraction = 0.5;
    opt.max_iter = 120;
    const auto res = dmo::run_dmo(opt, solver, kFour, testutil::mbb_material());
    const auto& d = res.diagnostics;
    const int N = mesh.element_count();
    CHECK(res.chi.minCoeff() >= 0.0);
    CHECK(res.chi.maxCoeff() <= 1.0);
    CHECK(res.chi.sum() <= 0.5 * N + 1e-6 * N);
    for (double v : d.volume_fraction) CHECK(v <= 0.5 + 1e-6);
    CHECK(d.iterations() == static_cast<int>(d.records.size()));
    CHECK(d.iterations() == solver.solve_count());
    CHECK(d.penalty.front() == 1.0);
    for (std::size_t k = 1; k < d.penalty.size(); ++k) CHECK(d.penalty[k] >= d.penalty[k - 1]);
    CHECK(d.records.front().stage == "DMO");
    CHECK(d.records.front().extra == "p=1");
    if (d.converged) {
      CHECK(d.final_penalty == 3.0);
      CHECK(d.warnings.empty());
    } else {
      CHECK_FALSE(d.warnings.empty());
    }
    CHECK(d.h_eta.back() >= d.h_eta.front() - 0.02);
  }

  TEST_CASE("iteration cap yields a warning, not an error") {
    const auto mesh = fem::build_mesh(6, 4);
    fem::StiffnessSolver solver(mesh, testutil::cantilever_bc(mesh));
    dmo::DmoOptions opt;
    opt.max_iter = 4;
    const auto res = dmo::run_dmo(opt, solver, kFour, testutil::mbb_material());
    CHECK(res.diagnostics.iterations() == 4);
    CHECK_FALSE(res.diagnostics.converged);
    REQUIRE(res.diagnostics.warnings.size() == 1);
    CHECK(res.diagnostics.warnings[0].find("cap") != std::string::npos);
  }

  TEST_CASE("single element picks the stiffer candidate") {
    const auto mesh = fem::build_mesh(1, 1);
    const auto bc = testutil::cantilever_bc(mesh);
    const material::CandidateAngleSet two({0, 90});
    const auto D = testutil::mbb_material();
    std::vector<double> solo;
    for (std::size_t k = 0; k < 2; ++k) {
      const std::vector<fem::Matrix3> Ds{material::rotate_constitutive(D, two.radians(k))};
      solo.push_back(fem::assemble_and_solve(mesh, Ds, bc).compliance);
    }
    fem::StiffnessSolver solver(mesh, bc);
    dmo::DmoOptions opt;
    opt.volume_fraction = 0.9;
    opt.filter = opt::FilterMode::none;
    const auto res = dmo::run_dmo(opt, solver, two, D);
    const int expected = solo[0] < solo[1] ? 0 : 1;
    CHECK(res.chi(0, expected) > res.chi(0, 1 - expected));
    CHECK(res.chi(0, expected) > 0.85);
  }
}
