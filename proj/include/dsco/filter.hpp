#pragma once

// Cone-kernel neighbourhood filter shared by every stage.

#include "dsco/fem.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace dsco::opt {

/// Neighbour lists with weights H_ei = max(0, r_min - |x_e - x_i|) between
/// element centroids. Neighbours of e are stored contiguously in row-major
/// cell order, so iteration order is deterministic.
class FilterKernel {
 public:
  FilterKernel() = default;

  double radius() const { return r_min_; }
  int element_count() const { return static_cast<int>(offsets_.size()) - 1; }

  std::span<const int> neighbors(int e) const {
    return {neighbors_.data() + offsets_[e], static_cast<std::size_t>(offsets_[e + 1] - offsets_[e])};
  }
  std::span<const double> weights(int e) const {
    return {weights_.data() + offsets_[e], static_cast<std::size_t>(offsets_[e + 1] - offsets_[e])};
  }
  double weight_sum(int e) const { return weight_sums_[static_cast<std::size_t>(e)]; }

 private:
  friend FilterKernel build_filter_kernel(const fem::Mesh& mesh, double r_min);

  double r_min_ = 0.0;
  std::vector<int> offsets_{0};
  std::vector<int> neighbors_;
  std::vector<double> weights_;
  std::vector<double> weight_sums_;
};

/// Throws std::invalid_argument unless r_min > 0.
FilterKernel build_filter_kernel(const fem::Mesh& mesh, double r_min);

/// s~_i = sum_j H_ij rho_j s_j / (max(rho_i, 1e-3) * sum_j H_ij).
Eigen::VectorXd filter_sensitivities(const FilterKernel& kernel, std::span<const double> densities,
                                     std::span<const double> sensitivities);

/// x~_i = sum_j H_ij x_j / sum_j H_ij.
Eigen::VectorXd filter_densities(const FilterKernel& kernel, std::span<const double> x);

/// Chain rule of filter_densities: given dc/dx~, returns dc/dx.
Eigen::VectorXd filter_densities_adjoint(const FilterKernel& kernel,
                                         std::span<const double> d_filtered);

enum class FilterMode { none, sensitivity, density };

FilterMode parse_filter_mode(const std::string& name);
const char* to_string(FilterMode mode);

}  // namespace dsco::opt
