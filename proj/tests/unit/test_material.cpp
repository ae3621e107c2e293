#include "helpers.hpp"

#include "dsco/material.hpp"

using namespace dsco::material;
using testutil::rel_err;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Central-difference derivative of the weights with respect to chi_j.
Eigen::VectorXd fd_weight_column(std::vector<double> chi, int j, double p, double eps, double h) {
  auto cp = chi, cm = chi;
  cp[static_cast<std::size_t>(j)] += h;
  cm[static_cast<std::size_t>(j)] -= h;
  return (dmo_weights(cp, p, eps) - dmo_weights(cm, p, eps)) / (2 * h);
}

}  // namespace

TEST_SUITE("material") {
  TEST_CASE("engineering constants") {
    const auto D = constitutive_from_engineering(2.0, 1.0, 0.25, 0.3);
    const double nu_yx = 0.3 * 1.0 / 2.0;
    const double den = 1.0 - 0.3 * nu_yx;
    CHECK(D(0, 0) == doctest::Approx(2.0 / den));
    CHECK(D(1, 1) == doctest::Approx(1.0 / den));
    CHECK(D(0, 1) == doctest::Approx(0.3 / den));
    CHECK(D(1, 0) == D(0, 1));
    CHECK(D(2, 2) == 0.25);
    CHECK(D(0, 0) == doctest::Approx(2.09424).epsilon(1e-5));
    CHECK(D(1, 1) == doctest::Approx(1.04712).epsilon(1e-5));
    CHECK(D(0, 1) == doctest::Approx(0.31414).epsilon(1e-4));

    const auto iso = constitutive_from_engineering(1.0, 1.0, 1.0 / 2.6, 0.3);
    CHECK(max_abs(iso - testutil::isotropic(1.0, 0.3)) < 1e-12);
    CHECK(iso(0, 0) == doctest::Approx(1.0989).epsilon(1e-4));
    CHECK(iso(0, 1) == doctest::Approx(0.32967).epsilon(1e-4));

    const auto dec = constitutive_from_engineering(3.0, 3.0, 1.0, 0.0);
    CHECK(dec(0, 0) == 3.0);
    CHECK(dec(1, 1) == 3.0);
    CHECK(dec(0, 1) == 0.0);

    CHECK_THROWS_AS(constitutive_from_engineering(1.0, 4.0, 1.0, 0.6), std::invalid_argument);
    CHECK_THROWS_AS(constitutive_from_engineering(-1.0, 1.0, 1.0, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(constitutive_from_engineering(1.0, 1.0, 0.0, 0.3), std::invalid_argument);
  }

  TEST_CASE("rotation matrix plug-in values") {
    CHECK(max_abs(rotation_matrix(0.0) - Eigen::Matrix3d::Identity()) == 0.0);
    Eigen::Matrix3d r90;
    r90 << 0, 1, 0, 1, 0, 0, 0, 0, -1;
    CHECK(max_abs(rotation_matrix(kPi / 2) - r90) < 1e-15);
    Eigen::Matrix3d r45;
    r45 << 0.5, 0.5, -1, 0.5, 0.5, 1, 0.5, -0.5, 0;
    CHECK(max_abs(rotation_matrix(kPi / 4) - r45) < 1e-15);
  }

  TEST_CASE("rotation derivative plug-in values") {
    Eigen::Matrix3d d0;
    d0 << 0, 0, -2, 0, 0, 2, 1, -1, 0;
    CHECK(max_abs(rotation_matrix_derivative(0.0) - d0) < 1e-15);
    Eigen::Matrix3d d45;
    d45 << -1, 1, 0, 1, -1, 0, 0, 0, -2;
    CHECK(max_abs(rotation_matrix_derivative(kPi / 4) - d45) < 1e-15);
  }

  TEST_CASE("rotation derivative matches finite differences") {
    for (int t = 0; t < 100; ++t) {
      const double th = testutil::uniform(-kPi, kPi);
      const double h = 1e-5;
      const Eigen::Matrix3d fd = (rotation_matrix(th + h) - rotation_matrix(th - h)) / (2 * h);
      CHECK(max_abs(fd - rotation_matrix_derivative(th)) <= 1e-8);
    }
  }

  TEST_CASE("inverse rotation and periodicity") {
    const auto D = testutil::mbb_material();
    for (int t = 0; t < 100; ++t) {
      const double th = testutil::uniform(-kPi, kPi);
      CHECK(max_abs(rotation_matrix(th) * rotation_matrix(-th) - Eigen::Matrix3d::Identity()) <= 1e-12);
      CHECK(max_abs(rotate_constitutive(D, th) - rotate_constitutive(D, th + kPi)) <= 1e-12);
    }
  }

  TEST_CASE("isotropic material is rotation invariant") {
    const auto D = testutil::isotropic();
    for (int t = 0; t < 100; ++t) {
      const double th = testutil::uniform(-kPi, kPi);
      CHECK(max_abs(rotate_constitutive(D, th) - D) <= 1e-12);
      CHECK(max_abs(rotate_constitutive_derivative(D, th)) <= 1e-12);
    }
  }

  TEST_CASE("rotated stiffness values") {
    const auto D = testutil::mbb_material();
    const auto d90 = rotate_constitutive(D, deg_to_rad(90));
    CHECK(d90(0, 0) == doctest::Approx(0.1277));
    CHECK(d90(1, 1) == doctest::Approx(0.5448));
    CHECK(d90(0, 1) == doctest::Approx(0.0383));
    CHECK(d90(2, 2) == doctest::Approx(0.0456));

    // Dense triple product computed entry by entry.
    const double c = std::cos(kPi / 4), s = std::sin(kPi / 4);
    const double L[3][3] = {{c * c, s * s, -2 * s * c}, {s * s, c * c, 2 * s * c}, {s * c, -s * c, c * c - s * s}};
    const auto d45 = rotate_constitutive(D, kPi / 4);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double sum = 0.0;
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) sum += L[i][k] * D(k, l) * L[j][l];
        CHECK(d45(i, j) == doctest::Approx(sum).epsilon(1e-12));
      }
    CHECK(max_abs(d45 - d45.transpose()) == 0.0);
  }

  TEST_CASE("rotated stiffness derivative matches finite differences") {
    const auto D = testutil::mbb_material();
    for (int t = 0; t < 20; ++t) {
      const double th = testutil::uniform(-kPi / 2, kPi / 2);
      const double h = 1e-5;
      const Eigen::Matrix3d fd = (rotate_constitutive(D, th + h) - rotate_constitutive(D, th - h)) / (2 * h);
      CHECK(max_abs(fd - rotate_constitutive_derivative(D, th)) <= 1e-9);
    }
  }

  TEST_CASE("candidate angle sets") {
    const CandidateAngleSet s({0, -45, 45, 90});
    CHECK(s.size() == 4);
    CHECK(s.radians(3) == doctest::Approx(kPi / 2));
    CHECK(s.rotated(testutil::mbb_material()).size() == 4);
    CHECK_THROWS_AS(CandidateAngleSet(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(CandidateAngleSet({0, 180}), std::invalid_argument);
    CHECK_THROWS_AS(CandidateAngleSet({-90, 90}), std::invalid_argument);
    CHECK_THROWS_AS(CandidateAngleSet({0, 95}), std::invalid_argument);
    try {
      CandidateAngleSet({0, 180});
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
  }

  TEST_CASE("dmo weight values") {
    const double eps = 1e-9;
    auto w = dmo_weights(std::vector<double>{1.0, 0.0}, 3.0, eps);
    CHECK(w(0) == doctest::Approx(1.0));
    CHECK(w(1) < 1e-17);
    w = dmo_weights(std::vector<double>{0.5, 0.5}, 3.0, eps);
    CHECK(w(0) == doctest::Approx(0.109375).epsilon(1e-8));
    CHECK(w(1) == w(0));
    w = dmo_weights(std::vector<double>(4, 0.5), 3.0, eps);
    for (int j = 0; j < 4; ++j) CHECK(w(j) == doctest::Approx(0.125 * std::pow(0.875, 3)).epsilon(1e-8));
    CHECK(w(0) == doctest::Approx(0.083740).epsilon(1e-5));
    CHECK_THROWS_AS(dmo_weights(std::vector<double>{1.2, 0.0}, 3.0, eps), std::invalid_argument);
    CHECK_THROWS_AS(dmo_weights(std::vector<double>{0.5}, 3.0, eps), std::invalid_argument);
    CHECK_THROWS_AS(dmo_weights(std::vector<double>{0.5, 0.5}, 0.5, eps), std::invalid_argument);
  }

  TEST_CASE("dmo weight gradient values") {
    const double eps = 1e-9;
    auto G = dmo_weight_gradient(std::vector<double>{0.5, 0.5}, 1.0, eps);
    CHECK(G(0, 0) == doctest::Approx(0.5));
    CHECK(G(0, 1) == doctest::Approx(-0.5));
    G = dmo_weight_gradient(std::vector<double>{1.0, 0.0, 0.0}, 3.0, eps);
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j)
        if (k != j) CHECK(std::abs(G(k, j)) < 1e-8);
  }

  TEST_CASE("dmo weight gradient matches finite differences") {
    const double eps = 1e-9;
    for (double p : {1.0, 2.0, 3.0}) {
      for (int t = 0; t < 100; ++t) {
        const int n = 2 + t % 4;
        std::vector<double> chi(static_cast<std::size_t>(n));
        for (auto& c : chi) c = testutil::uniform(0.05, 0.95);
        const auto G = dmo_weight_gradient(chi, p, eps);
        for (int j = 0; j < n; ++j) {
          const auto fd = fd_weight_column(chi, j, p, eps, 1e-6);
          for (int k = 0; k < n; ++k) CHECK(rel_err(G(k, j), fd(k), 1e-8) <= 1e-6);
        }
      }
    }
  }

  TEST_CASE("dmo weights are monotone") {
    for (int t = 0; t < 50; ++t) {
      std::vector<double> chi(4);
      for (auto& c : chi) c = testutil::uniform(0.05, 0.9);
      const auto w0 = dmo_weights(chi, 3.0, 1e-9);
      const int j = t % 4;
      auto up = chi;
      up[static_cast<std::size_t>(j)] += 0.05;
      const auto w1 = dmo_weights(up, 3.0, 1e-9);
      for (int k = 0; k < 4; ++k) {
        if (k == j) CHECK(w1(k) > w0(k));
        else CHECK(w1(k) < w0(k));
      }
    }
  }

  TEST_CASE("effective constitutive matrix") {
    const CandidateAngleSet s({0, -45, 45, 90});
    const auto D = testutil::mbb_material();
    const auto one_hot = dmo_effective_constitutive(std::vector<double>{0, 0, 1, 0}, s, D, 3.0, 1e-9);
    CHECK(max_abs(one_hot - rotate_constitutive(D, kPi / 4)) < 1e-8);
    const auto zero = dmo_effective_constitutive(std::vector<double>(4, 0.0), s, D, 3.0, 1e-9);
    CHECK(max_abs(zero) < 1e-8);
    const auto iso = testutil::isotropic();
    const auto half = dmo_effective_constitutive(std::vector<double>(4, 0.5), s, iso, 3.0, 1e-9);
    const double factor = 4 * 0.125 * std::pow(0.875, 3);
    CHECK(max_abs(half - factor * iso) < 1e-8);
    CHECK(factor == doctest::Approx(0.33496).epsilon(1e-5));
  }
}
