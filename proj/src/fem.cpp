#include "dsco/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dsco::fem {

namespace {

// B matrix of the unit-square Q4 at local point (xi, eta); nodes are
// counter-clockwise from the bottom-left corner.
Eigen::Matrix<double, 3, 8> strain_displacement(double xi, double eta) {
  // dN/dx = 2 dN/dxi on a unit square
  const std::array<double, 4> sx = {-1.0, 1.0, 1.0, -1.0};
  const std::array<double, 4> sy = {-1.0, -1.0, 1.0, 1.0};
  Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
  for (int a = 0; a < 4; ++a) {
    const double dNdx = 2.0 * 0.25 * sx[a] * (1.0 + sy[a] * eta);
    const double dNdy = 2.0 * 0.25 * sy[a] * (1.0 + sx[a] * xi);
    B(0, 2 * a) = dNdx;
    B(1, 2 * a + 1) = dNdy;
    B(2, 2 * a) = dNdy;
    B(2, 2 * a + 1) = dNdx;
  }
  return B;
}

ElementMatrix integrate(const Matrix3& D) {
  const double g = 1.0 / std::sqrt(3.0);
  const double det_j = 0.25;
  ElementMatrix k = ElementMatrix::Zero();
  for (double xi : {-g, g}) {
    for (double eta : {-g, g}) {
      const auto B = strain_displacement(xi, eta);
      k.noalias() += B.transpose() * D * B * det_j;
    }
  }
  return 0.5 * (k + k.transpose());
}

void require_symmetric(const Matrix3& D) {
  const double scale = std::max(1.0, D.cwiseAbs().maxCoeff());
  if ((D - D.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("constitutive matrix is not symmetric");
  }
}

}  // namespace

Eigen::Vector2d Mesh::node_coords(int node) const {
  if (node < 0 || node >= node_count()) throw std::out_of_range("node index out of range");
  return {static_cast<double>(node % (nx_ + 1)), static_cast<double>(node / (nx_ + 1))};
}

Eigen::Vector2d Mesh::centroid(int e) const {
  const auto& el = element(e);
  return {el.i + 0.5, el.j + 0.5};
}

int Mesh::element_at(int i, int j) const {
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
  return cell_to_element_[static_cast<std::size_t>(j * nx_ + i)];
}

int Mesh::nearest_node(double x, double y) const {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int n = 0; n < node_count(); ++n) {
    if (!node_used(n)) continue;
    const auto p = node_coords(n);
    const double d2 = (p.x() - x) * (p.x() - x) + (p.y() - y) * (p.y() - y);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = n;
    }
  }
  return best;
}

Mesh build_mesh(int nx, int ny, const std::vector<Rect>& cutouts) {
  if (nx < 1 || ny < 1) {
    throw std::invalid_argument("mesh dimensions must be positive, got " + std::to_string(nx) +
                                "x" + std::to_string(ny));
  }
  Mesh mesh;
  mesh.nx_ = nx;
  mesh.ny_ = ny;
  mesh.cell_to_element_.assign(static_cast<std::size_t>(nx) * ny, -1);
  mesh.node_used_.assign(static_cast<std::size_t>(nx + 1) * (ny + 1), 0);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double cx = i + 0.5, cy = j + 0.5;
      const bool removed = std::any_of(cutouts.begin(), cutouts.end(),
                                       [&](const Rect& r) { return r.contains(cx, cy); });
      if (removed) continue;
      Element el;
      el.i = i;
      el.j = j;
      el.nodes = {mesh.node_index(i, j), mesh.node_index(i + 1, j), mesh.node_index(i + 1, j + 1),
                  mesh.node_index(i, j + 1)};
      for (int a = 0; a < 4; ++a) {
        el.dofs[2 * a] = 2 * el.nodes[a];
        el.dofs[2 * a + 1] = 2 * el.nodes[a] + 1;
        mesh.node_used_[static_cast<std::size_t>(el.nodes[a])] = 1;
      }
      mesh.cell_to_element_[static_cast<std::size_t>(j * nx + i)] =
          static_cast<int>(mesh.elements_.size());
      mesh.elements_.push_back(el);
    }
  }
  if (mesh.elements_.empty()) throw std::invalid_argument("cutouts remove every element");
  return mesh;
}

int dof_of(int node, Axis axis) { return 2 * node + static_cast<int>(axis); }

std::vector<int> BoundaryConditions::normalized_fixed_dofs() const {
  std::vector<int> dofs = fixed_dofs;
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

void BoundaryConditions::validate(const Mesh& mesh) const {
  if (fixed_dofs.empty()) throw std::invalid_argument("no fixed DOFs: the structure is unsupported");
  const auto fixed = normalized_fixed_dofs();
  for (int d : fixed) {
    if (d < 0 || d >= mesh.dof_count()) throw std::invalid_argument("fixed DOF out of range");
  }
  for (const auto& load : point_loads) {
    if (load.node < 0 || load.node >= mesh.node_count()) {
      throw std::invalid_argument("load node out of range");
    }
    if (!std::isfinite(load.magnitude)) throw std::invalid_argument("non-finite load magnitude");
    if (!mesh.node_used(load.node)) {
      throw std::invalid_argument("load applied to node " + std::to_string(load.node) +
                                  " outside the meshed domain");
    }
    const int d = dof_of(load.node, load.direction);
    if (std::binary_search(fixed.begin(), fixed.end(), d)) {
      throw std::invalid_argument("load applied on fixed DOF " + std::to_string(d));
    }
  }
}

Eigen::VectorXd BoundaryConditions::load_vector(const Mesh& mesh) const {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(mesh.dof_count());
  for (const auto& load : point_loads) F(dof_of(load.node, load.direction)) += load.magnitude;
  return F;
}

ElementMatrix element_stiffness(const Matrix3& D) {
  require_symmetric(D);
  if (!D.allFinite()) throw std::invalid_argument("non-finite constitutive matrix");
  return integrate(D);
}

const std::array<ElementMatrix, 6>& element_stiffness_basis() {
  static const std::array<ElementMatrix, 6> basis = [] {
    std::array<ElementMatrix, 6> out;
    const std::array<std::pair<int, int>, 6> comp = {
        {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};
    for (std::size_t c = 0; c < comp.size(); ++c) {
      Matrix3 E = Matrix3::Zero();
      E(comp[c].first, comp[c].second) = 1.0;
      E(comp[c].second, comp[c].first) = 1.0;
      out[c] = integrate(E);
    }
    return out;
  }();
  return basis;
}

std::array<double, 6> constitutive_components(const Matrix3& D) {
  return {D(0, 0), D(1, 1), D(2, 2), D(0, 1), D(0, 2), D(1, 2)};
}

EnergyBasis energy_basis(const ElementVector& ue) {
  const auto& basis = element_stiffness_basis();
  EnergyBasis q;
  for (std::size_t c = 0; c < 6; ++c) q[c] = ue.dot(basis[c] * ue);
  return q;
}

double energy_product(const EnergyBasis& q, const Matrix3& D) {
  const auto d = constitutive_components(D);
  double s = 0.0;
  for (std::size_t c = 0; c < 6; ++c) s += d[c] * q[c];
  return s;
}

ElementVector gather(const Eigen::VectorXd& U, const Element& element) {
  ElementVector ue;
  for (int a = 0; a < 8; ++a) ue(a) = U(element.dofs[static_cast<std::size_t>(a)]);
  return ue;
}

struct StiffnessSolver::Factorization {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
};

StiffnessSolver::StiffnessSolver(const Mesh& mesh, const BoundaryConditions& bc)
    : mesh_(&mesh), bc_(bc), factorization_(std::make_unique<Factorization>()) {
  bc_.validate(mesh);
  F_ = bc_.load_vector(mesh);

  const auto fixed = bc_.normalized_fixed_dofs();
  reduced_index_.assign(static_cast<std::size_t>(mesh.dof_count()), -1);
  for (int d = 0; d < mesh.dof_count(); ++d) {
    if (!mesh.node_used(d / 2)) continue;
    if (std::binary_search(fixed.begin(), fixed.end(), d)) continue;
    reduced_index_[static_cast<std::size_t>(d)] = static_cast<int>(free_dofs_.size());
    free_dofs_.push_back(d);
  }
  const int n = static_cast<int>(free_dofs_.size());
  if (n == 0) throw std::invalid_argument("every DOF is fixed");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.element_count()) * 64);
  for (const auto& el : mesh.elements()) {
    for (int a = 0; a < 8; ++a) {
      const int ra = reduced_index_[static_cast<std::size_t>(el.dofs[a])];
      if (ra < 0) continue;
      for (int b = 0; b < 8; ++b) {
        const int rb = reduced_index_[static_cast<std::size_t>(el.dofs[b])];
        if (rb >= 0) triplets.emplace_back(ra, rb, 1.0);
      }
    }
  }
  K_.resize(n, n);
  K_.setFromTriplets(triplets.begin(), triplets.end());
  K_.makeCompressed();

  slots_.resize(static_cast<std::size_t>(mesh.element_count()));
  const int* outer = K_.outerIndexPtr();
  const int* inner = K_.innerIndexPtr();
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.element(e);
    auto& slot = slots_[static_cast<std::size_t>(e)];
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) {
        const int row = reduced_index_[static_cast<std::size_t>(el.dofs[a])];
        const int col = reduced_index_[static_cast<std::size_t>(el.dofs[b])];
        int s = -1;
        if (row >= 0 && col >= 0) {
          const int* first = inner + outer[col];
          const int* last = inner + outer[col + 1];
          s = static_cast<int>(std::lower_bound(first, last, row) - inner);
        }
        slot[static_cast<std::size_t>(a * 8 + b)] = s;
      }
    }
  }

  F_reduced_.resize(n);
  for (int r = 0; r < n; ++r) F_reduced_(r) = F_(free_dofs_[static_cast<std::size_t>(r)]);
  factorization_->ldlt.analyzePattern(K_);
}

StiffnessSolver::~StiffnessSolver() = default;

LinearSystemResult StiffnessSolver::solve(std::span<const Matrix3> per_element_D) {
  const Mesh& mesh = *mesh_;
  if (static_cast<int>(per_element_D.size()) != mesh.element_count()) {
    throw std::invalid_argument("expected " + std::to_string(mesh.element_count()) +
                                " constitutive matrices, got " +
                                std::to_string(per_element_D.size()));
  }
  const auto& basis = element_stiffness_basis();
  double* values = K_.valuePtr();
  std::fill(values, values + K_.nonZeros(), 0.0);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Matrix3& D = per_element_D[static_cast<std::size_t>(e)];
    if (!D.allFinite()) {
      throw std::invalid_argument("non-finite constitutive matrix at element " + std::to_string(e));
    }
    const auto d = constitutive_components(D);
    ElementMatrix ke = d[0] * basis[0];
    for (std::size_t c = 1; c < 6; ++c) ke += d[c] * basis[c];
    const auto& slot = slots_[static_cast<std::size_t>(e)];
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) {
        const int s = slot[static_cast<std::size_t>(a * 8 + b)];
        if (s >= 0) values[s] += ke(a, b);
      }
    }
  }

  LinearSystemResult result;
  result.displacements = Eigen::VectorXd::Zero(mesh.dof_count());
  ++solves_;
  if (F_reduced_.isZero(0.0)) return result;

  auto& ldlt = factorization_->ldlt;
  ldlt.factorize(K_);
  const auto pivots = ldlt.vectorD();
  const double max_pivot = pivots.cwiseAbs().maxCoeff();
  const double min_pivot = pivots.minCoeff();
  if (ldlt.info() != Eigen::Success || !(min_pivot > 1e-14 * max_pivot)) {
    std::ostringstream msg;
    msg << "stiffness matrix is singular after eliminating " << bc_.normalized_fixed_dofs().size()
        << " fixed DOFs (min/max pivot " << min_pivot << "/" << max_pivot
        << "); the supports do not suppress every rigid-body mode";
    throw SingularSystemError(msg.str());
  }
  Eigen::VectorXd u = ldlt.solve(F_reduced_);
  Eigen::VectorXd r = F_reduced_ - K_ * u;
  double residual = r.norm() / F_reduced_.norm();
  // Iterative refinement recovers accuracy lost to high stiffness contrast.
  for (int pass = 0; pass < 3 && u.allFinite() && residual > 1e-8; ++pass) {
    u += ldlt.solve(r);
    r = F_reduced_ - K_ * u;
    residual = r.norm() / F_reduced_.norm();
  }
  if (!u.allFinite() || !(residual <= 1e-8)) {
    std::ostringstream msg;
    msg << "linear solve residual " << residual << " exceeds 1e-8; the system is ill-posed";
    throw SingularSystemError(msg.str());
  }
  for (std::size_t r = 0; r < free_dofs_.size(); ++r) {
    result.displacements(free_dofs_[r]) = u(static_cast<Eigen::Index>(r));
  }
  result.compliance = F_reduced_.dot(u);
  return result;
}

LinearSystemResult assemble_and_solve(const Mesh& mesh, std::span<const Matrix3> per_element_D,
                                      const BoundaryConditions& bc) {
  StiffnessSolver solver(mesh, bc);
  return solver.solve(per_element_D);
}

double element_compliance_sensitivity(const Eigen::VectorXd& U, const Mesh& mesh, int e,
                                      const ElementMatrix& dK_e) {
  if (e < 0 || e >= mesh.element_count()) {
    throw std::out_of_range("element index " + std::to_string(e) + " out of range");
  }
  const ElementVector ue = gather(U, mesh.element(e));
  return -ue.dot(dK_e * ue);
}

}  // namespace dsco::fem
