#pragma once

// Orthotropic plane-stress constitutive laws, fibre rotation and the DMO
// weighted-sum interpolation over candidate fibre angles.

#include <Eigen/Core>

#include <span>
#include <vector>

namespace dsco::material {

/// 3x3 plane-stress stiffness in Voigt order (xx, yy, xy) with engineering
/// shear strain. Base materials have zero 13/23 coupling; rotated ones do not.
using ConstitutiveMatrix = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;
inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Direct entries D11, D12, D22, D33.
ConstitutiveMatrix constitutive_from_entries(double d11, double d12, double d22, double d33);

/// Orthotropic plane stress from engineering constants. Throws
/// std::invalid_argument for non-positive moduli or 1 - nu_xy*nu_yx <= 0.
ConstitutiveMatrix constitutive_from_engineering(double ex, double ey, double gxy, double nu_xy);

/// Rotation operator lambda(theta) such that the global stiffness is
/// lambda * D * lambda^T.
Eigen::Matrix3d rotation_matrix(double theta);

/// Entry-wise d lambda / d theta.
Eigen::Matrix3d rotation_matrix_derivative(double theta);

ConstitutiveMatrix rotate_constitutive(const ConstitutiveMatrix& D, double theta);

/// d/dtheta of lambda D lambda^T.
ConstitutiveMatrix rotate_constitutive_derivative(const ConstitutiveMatrix& D, double theta);

/// Ordered set of distinct fibre angles, stored in degrees.
class CandidateAngleSet {
 public:
  CandidateAngleSet() = default;
  /// Throws std::invalid_argument on an empty set, angles outside
  /// [-90, 90] or duplicates modulo 180 degrees.
  explicit CandidateAngleSet(std::vector<double> degrees);

  std::size_t size() const { return degrees_.size(); }
  const std::vector<double>& degrees() const { return degrees_; }
  double radians(std::size_t k) const { return deg_to_rad(degrees_.at(k)); }

  /// lambda(theta_k) D lambda(theta_k)^T for every candidate.
  std::vector<ConstitutiveMatrix> rotated(const ConstitutiveMatrix& D) const;

 private:
  std::vector<double> degrees_;
};

/// w_j = (eps + chi_j^p) * prod_{k != j} (eps + 1 - chi_k^p).
/// Throws std::invalid_argument if some chi is outside [0, 1], n < 2 or p < 1.
Eigen::VectorXd dmo_weights(std::span<const double> chi, double p, double eps);

/// G(k, j) = d w_k / d chi_j.
Eigen::MatrixXd dmo_weight_gradient(std::span<const double> chi, double p, double eps);

/// sum_j w_j * Dbar_j for precomputed rotated candidates.
ConstitutiveMatrix dmo_effective_constitutive(std::span<const double> chi,
                                              std::span<const ConstitutiveMatrix> rotated,
                                              double p, double eps);

ConstitutiveMatrix dmo_effective_constitutive(std::span<const double> chi,
                                              const CandidateAngleSet& candidates,
                                              const ConstitutiveMatrix& D_base, double p,
                                              double eps);

}  // namespace dsco::material
