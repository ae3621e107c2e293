#pragma once

// Plane-stress Q4 finite elements on a structured grid of unit squares.

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseCholesky>

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsco::fem {

using Matrix3 = Eigen::Matrix3d;
using ElementMatrix = Eigen::Matrix<double, 8, 8>;
using ElementVector = Eigen::Matrix<double, 8, 1>;

enum class Axis : int { x = 0, y = 1 };

/// Raised when the reduced stiffness matrix cannot be factorized.
class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned rectangle in grid coordinates, used to cut elements out of
/// the bounding grid (L-shaped domains).
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(double x, double y) const { return x > x0 && x < x1 && y > y0 && y < y1; }
};

struct Element {
  int i = 0;                  ///< column in the bounding grid
  int j = 0;                  ///< row in the bounding grid
  std::array<int, 4> nodes{}; ///< counter-clockwise from bottom-left
  std::array<int, 8> dofs{};  ///< (ux, uy) of each node, same order
};

/// Structured mesh of unit-square Q4 elements.
///
/// Numbering is row-major from the bottom-left corner. Node (i, j) with
/// 0 <= i <= nx and 0 <= j <= ny has index j*(nx+1) + i, and DOFs 2k (ux) and
/// 2k+1 (uy). Grid cell (i, j) spans [i, i+1] x [j, j+1]. Elements are the
/// cells that survive the cutouts, numbered in row-major cell order; without
/// cutouts element (i, j) is j*nx + i.
class Mesh {
 public:
  Mesh() = default;

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int element_count() const { return static_cast<int>(elements_.size()); }
  int node_count() const { return (nx_ + 1) * (ny_ + 1); }
  int dof_count() const { return 2 * node_count(); }

  const Element& element(int e) const { return elements_.at(static_cast<std::size_t>(e)); }
  const std::vector<Element>& elements() const { return elements_; }

  int node_index(int i, int j) const { return j * (nx_ + 1) + i; }
  Eigen::Vector2d node_coords(int node) const;
  Eigen::Vector2d centroid(int e) const;

  /// Element index of grid cell (i, j), or -1 when the cell is cut out or
  /// outside the grid.
  int element_at(int i, int j) const;

  /// True when at least one element touches the node.
  bool node_used(int node) const { return node_used_[static_cast<std::size_t>(node)] != 0; }

  /// Nearest grid node to (x, y) that belongs to some element.
  int nearest_node(double x, double y) const;

 private:
  friend Mesh build_mesh(int nx, int ny, const std::vector<Rect>& cutouts);

  int nx_ = 0;
  int ny_ = 0;
  std::vector<Element> elements_;
  std::vector<int> cell_to_element_;
  std::vector<std::uint8_t> node_used_;
};

/// Builds an nx-by-ny grid; cells whose centroid lies inside a cutout are
/// dropped. Throws std::invalid_argument on non-positive dimensions or when
/// every cell is cut out.
Mesh build_mesh(int nx, int ny, const std::vector<Rect>& cutouts = {});

struct PointLoad {
  int node = 0;
  Axis direction = Axis::x;
  double magnitude = 0.0;
};

struct BoundaryConditions {
  std::vector<int> fixed_dofs;
  std::vector<PointLoad> point_loads;

  /// Sorted, de-duplicated copy of fixed_dofs.
  std::vector<int> normalized_fixed_dofs() const;
  /// Throws std::invalid_argument if the conditions are inconsistent with the mesh.
  void validate(const Mesh& mesh) const;
  Eigen::VectorXd load_vector(const Mesh& mesh) const;
};

int dof_of(int node, Axis axis);

struct LinearSystemResult {
  Eigen::VectorXd displacements;
  double compliance = 0.0;
};

/// k_e = integral of B^T D B over the unit square (2x2 Gauss, unit thickness).
/// Throws std::invalid_argument if D is not symmetric to 1e-10 relative.
ElementMatrix element_stiffness(const Matrix3& D);

/// Element stiffness basis: k_e(D) = sum_c D_c * basis[c] over the six
/// independent entries of a symmetric D, ordered (11, 22, 33, 12, 13, 23).
const std::array<ElementMatrix, 6>& element_stiffness_basis();

/// The six independent entries of a symmetric D in basis order.
std::array<double, 6> constitutive_components(const Matrix3& D);

/// Per-element quadratic forms u_e^T basis[c] u_e; the strain-energy product
/// u_e^T k_e(D) u_e then costs six multiplies for any D.
using EnergyBasis = std::array<double, 6>;
EnergyBasis energy_basis(const ElementVector& ue);
double energy_product(const EnergyBasis& q, const Matrix3& D);

ElementVector gather(const Eigen::VectorXd& U, const Element& element);

/// Factorizes and solves K U = F for a fixed mesh and set of boundary
/// conditions. The sparsity pattern and symbolic factorization are computed
/// once; each solve only assembles values and refactorizes numerically.
class StiffnessSolver {
 public:
  StiffnessSolver(const Mesh& mesh, const BoundaryConditions& bc);
  StiffnessSolver(const StiffnessSolver&) = delete;
  StiffnessSolver& operator=(const StiffnessSolver&) = delete;
  ~StiffnessSolver();

  const Mesh& mesh() const { return *mesh_; }
  const BoundaryConditions& boundary_conditions() const { return bc_; }
  const Eigen::VectorXd& load_vector() const { return F_; }

  /// Throws SingularSystemError when the reduced system is not positive
  /// definite, and std::invalid_argument on non-finite input.
  LinearSystemResult solve(std::span<const Matrix3> per_element_D);

  /// Number of numeric factorizations performed so far.
  long solve_count() const { return solves_; }

 private:
  struct Factorization;

  const Mesh* mesh_;
  BoundaryConditions bc_;
  Eigen::VectorXd F_;
  std::vector<int> reduced_index_;      // full DOF -> reduced DOF or -1
  std::vector<int> free_dofs_;          // reduced DOF -> full DOF
  std::vector<std::array<int, 64>> slots_;  // element entry -> value slot or -1
  Eigen::SparseMatrix<double> K_;
  Eigen::VectorXd F_reduced_;
  std::unique_ptr<Factorization> factorization_;
  long solves_ = 0;
};

/// One-shot convenience wrapper around StiffnessSolver.
LinearSystemResult assemble_and_solve(const Mesh& mesh, std::span<const Matrix3> per_element_D,
                                      const BoundaryConditions& bc);

/// -u_e^T dK_e u_e. Throws std::out_of_range for a bad element index.
double element_compliance_sensitivity(const Eigen::VectorXd& U, const Mesh& mesh, int e,
                                      const ElementMatrix& dK_e);

}  // namespace dsco::fem
