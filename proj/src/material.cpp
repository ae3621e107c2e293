#include "dsco/material.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dsco::material {

ConstitutiveMatrix constitutive_from_entries(double d11, double d12, double d22, double d33) {
  ConstitutiveMatrix D;
  D << d11, d12, 0.0,
       d12, d22, 0.0,
       0.0, 0.0, d33;
  return D;
}

ConstitutiveMatrix constitutive_from_engineering(double ex, double ey, double gxy, double nu_xy) {
  if (!(ex > 0.0) || !(ey > 0.0) || !(gxy > 0.0)) {
    throw std::invalid_argument("Ex, Ey and Gxy must be positive");
  }
  const double nu_yx = nu_xy * ey / ex;
  const double denom = 1.0 - nu_xy * nu_yx;
  if (!(denom > 0.0)) {
    throw std::invalid_argument("non-physical Poisson coupling: 1 - nu_xy*nu_yx = " +
                                std::to_string(denom));
  }
  const double d11 = ex / denom;
  const double d22 = ey / denom;
  return constitutive_from_entries(d11, nu_xy * d22, d22, gxy);
}

Eigen::Matrix3d rotation_matrix(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double s2 = std::sin(2.0 * theta);
  Eigen::Matrix3d L;
  L << c * c, s * s, -s2,
       s * s, c * c, s2,
       s * c, -s * c, c * c - s * s;
  return L;
}

Eigen::Matrix3d rotation_matrix_derivative(double theta) {
  const double s2 = std::sin(2.0 * theta), c2 = std::cos(2.0 * theta);
  Eigen::Matrix3d dL;
  dL << -s2, s2, -2.0 * c2,
        s2, -s2, 2.0 * c2,
        c2, -c2, -2.0 * s2;
  return dL;
}

ConstitutiveMatrix rotate_constitutive(const ConstitutiveMatrix& D, double theta) {
  const Eigen::Matrix3d L = rotation_matrix(theta);
  const ConstitutiveMatrix R = L * D * L.transpose();
  return 0.5 * (R + R.transpose());
}

ConstitutiveMatrix rotate_constitutive_derivative(const ConstitutiveMatrix& D, double theta) {
  const Eigen::Matrix3d L = rotation_matrix(theta);
  const Eigen::Matrix3d dL = rotation_matrix_derivative(theta);
  const Eigen::Matrix3d half = dL * D * L.transpose();
  return half + half.transpose();
}

CandidateAngleSet::CandidateAngleSet(std::vector<double> degrees) : degrees_(std::move(degrees)) {
  if (degrees_.empty()) throw std::invalid_argument("candidate angle set is empty");
  for (double a : degrees_) {
    if (!std::isfinite(a)) throw std::invalid_argument("candidate angle is not finite");
  }
  for (std::size_t i = 0; i < degrees_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double diff = std::fmod(std::abs(degrees_[i] - degrees_[j]), 180.0);
      if (diff < 1e-9 || 180.0 - diff < 1e-9) {
        throw std::invalid_argument("duplicate candidate angles " + std::to_string(degrees_[j]) + " and " +
                                    std::to_string(degrees_[i]) + " (equal modulo 180 degrees)");
      }
    }
  }
  for (double a : degrees_) {
    if (a < -90.0 || a > 90.0) {
      throw std::invalid_argument("candidate angle " + std::to_string(a) +
                                  " outside [-90, 90] degrees");
    }
  }
}

std::vector<ConstitutiveMatrix> CandidateAngleSet::rotated(const ConstitutiveMatrix& D) const {
  std::vector<ConstitutiveMatrix> out;
  out.reserve(degrees_.size());
  for (std::size_t k = 0; k < degrees_.size(); ++k) out.push_back(rotate_constitutive(D, radians(k)));
  return out;
}

namespace {

void check_dmo_inputs(std::span<const double> chi, double p, double eps) {
  if (chi.size() < 2) throw std::invalid_argument("DMO needs at least two candidates");
  if (!(p >= 1.0)) throw std::invalid_argument("DMO penalty must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("DMO eps must be positive");
  for (double x : chi) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::invalid_argument("DMO density " + std::to_string(x) + " outside [0, 1]");
    }
  }
}

}  // namespace

Eigen::VectorXd dmo_weights(std::span<const double> chi, double p, double eps) {
  check_dmo_inputs(chi, p, eps);
  const auto n = static_cast<Eigen::Index>(chi.size());
  Eigen::VectorXd w(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double v = eps + std::pow(chi[static_cast<std::size_t>(j)], p);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != j) v *= eps + (1.0 - std::pow(chi[static_cast<std::size_t>(k)], p));
    }
    w(j) = v;
  }
  return w;
}

Eigen::MatrixXd dmo_weight_gradient(std::span<const double> chi, double p, double eps) {
  check_dmo_inputs(chi, p, eps);
  const auto n = static_cast<Eigen::Index>(chi.size());
  Eigen::VectorXd pw(n), dpw(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = chi[static_cast<std::size_t>(j)];
    pw(j) = std::pow(x, p);
    dpw(j) = p * std::pow(x, p - 1.0);
  }
  Eigen::MatrixXd G(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double v;
      if (k == j) {
        v = dpw(j);
        for (Eigen::Index m = 0; m < n; ++m) {
          if (m != j) v *= eps + (1.0 - pw(m));
        }
      } else {
        v = -dpw(j) * (eps + pw(k));
        for (Eigen::Index m = 0; m < n; ++m) {
          if (m != k && m != j) v *= eps + (1.0 - pw(m));
        }
      }
      G(k, j) = v;
    }
  }
  return G;
}

ConstitutiveMatrix dmo_effective_constitutive(std::span<const double> chi,
                                              std::span<const ConstitutiveMatrix> rotated,
                                              double p, double eps) {
  if (rotated.size() != chi.size()) {
    throw std::invalid_argument("candidate count does not match density row length");
  }
  const Eigen::VectorXd w = dmo_weights(chi, p, eps);
  ConstitutiveMatrix D = ConstitutiveMatrix::Zero();
  for (std::size_t j = 0; j < rotated.size(); ++j) D += w(static_cast<Eigen::Index>(j)) * rotated[j];
  return D;
}

ConstitutiveMatrix dmo_effective_constitutive(std::span<const double> chi,
                                              const CandidateAngleSet& candidates,
                                              const ConstitutiveMatrix& D_base, double p,
                                              double eps) {
  const auto rotated = candidates.rotated(D_base);
  return dmo_effective_constitutive(chi, rotated, p, eps);
}

}  // namespace dsco::material
