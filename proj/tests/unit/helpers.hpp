#pragma once

#include "dsco/fem.hpp"
#include "dsco/material.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace testutil {

using dsco::fem::Axis;
using dsco::fem::BoundaryConditions;
using dsco::fem::Matrix3;
using dsco::fem::Mesh;

inline Matrix3 isotropic(double E = 1.0, double nu = 0.3) {
  Matrix3 D;
  D << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, (1.0 - nu) / 2.0;
  return D * (E / (1.0 - nu * nu));
}

inline Matrix3 mbb_material() {
  return dsco::material::constitutive_from_entries(0.5448, 0.0383, 0.1277, 0.0456);
}

/// Left edge clamped, downward unit load at the right-edge node nearest mid-height.
inline BoundaryConditions cantilever_bc(const Mesh& mesh, double load = -1.0) {
  BoundaryConditions bc;
  for (int j = 0; j <= mesh.ny(); ++j) {
    const int node = mesh.node_index(0, j);
    bc.fixed_dofs.push_back(dsco::fem::dof_of(node, Axis::x));
    bc.fixed_dofs.push_back(dsco::fem::dof_of(node, Axis::y));
  }
  bc.point_loads.push_back({mesh.node_index(mesh.nx(), mesh.ny() / 2), Axis::y, load});
  return bc;
}

/// Relative error with an absolute floor on the denominator.
inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Dense global stiffness assembled directly from element_stiffness, used as an
/// independent check on the sparse solver.
inline Eigen::MatrixXd dense_stiffness(const Mesh& mesh, const std::vector<Matrix3>& D) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(mesh.dof_count(), mesh.dof_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto ke = dsco::fem::element_stiffness(D[static_cast<std::size_t>(e)]);
    const auto& el = mesh.element(e);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) K(el.dofs[a], el.dofs[b]) += ke(a, b);
  }
  return K;
}

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240611);
  return gen;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

}  // namespace testutil
