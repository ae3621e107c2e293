#include "dsco/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsco::opt {

FilterKernel build_filter_kernel(const fem::Mesh& mesh, double r_min) {
  if (!(r_min > 0.0) || !std::isfinite(r_min)) {
    throw std::invalid_argument("filter radius must be positive, got " + std::to_string(r_min));
  }
  FilterKernel k;
  k.r_min_ = r_min;
  const int reach = static_cast<int>(std::ceil(r_min)) - 1;
  const int n = mesh.element_count();
  k.offsets_.assign(1, 0);
  k.offsets_.reserve(static_cast<std::size_t>(n) + 1);
  k.weight_sums_.assign(static_cast<std::size_t>(n), 0.0);
  for (int e = 0; e < n; ++e) {
    const auto& el = mesh.element(e);
    double sum = 0.0;
    for (int dj = -reach; dj <= reach; ++dj) {
      for (int di = -reach; di <= reach; ++di) {
        const int other = mesh.element_at(el.i + di, el.j + dj);
        if (other < 0) continue;
        const double w = r_min - std::sqrt(static_cast<double>(di * di + dj * dj));
        if (w <= 0.0) continue;
        k.neighbors_.push_back(other);
        k.weights_.push_back(w);
        sum += w;
      }
    }
    k.weight_sums_[static_cast<std::size_t>(e)] = sum;
    k.offsets_.push_back(static_cast<int>(k.neighbors_.size()));
  }
  return k;
}

namespace {

void check_length(const FilterKernel& kernel, std::size_t len, const char* what) {
  if (static_cast<int>(len) != kernel.element_count()) {
    throw std::invalid_argument(std::string(what) + " length " + std::to_string(len) +
                                " does not match element count " +
                                std::to_string(kernel.element_count()));
  }
}

}  // namespace

Eigen::VectorXd filter_sensitivities(const FilterKernel& kernel, std::span<const double> densities,
                                     std::span<const double> sensitivities) {
  check_length(kernel, densities.size(), "density");
  check_length(kernel, sensitivities.size(), "sensitivity");
  const int n = kernel.element_count();
  Eigen::VectorXd out(n);
  for (int e = 0; e < n; ++e) {
    const auto nb = kernel.neighbors(e);
    const auto w = kernel.weights(e);
    double acc = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const auto j = static_cast<std::size_t>(nb[k]);
      acc += w[k] * densities[j] * sensitivities[j];
    }
    const double rho = std::max(densities[static_cast<std::size_t>(e)], 1e-3);
    out(e) = acc / (rho * kernel.weight_sum(e));
  }
  return out;
}

Eigen::VectorXd filter_densities(const FilterKernel& kernel, std::span<const double> x) {
  check_length(kernel, x.size(), "density");
  const int n = kernel.element_count();
  Eigen::VectorXd out(n);
  for (int e = 0; e < n; ++e) {
    const auto nb = kernel.neighbors(e);
    const auto w = kernel.weights(e);
    double acc = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) acc += w[k] * x[static_cast<std::size_t>(nb[k])];
    out(e) = acc / kernel.weight_sum(e);
  }
  return out;
}

Eigen::VectorXd filter_densities_adjoint(const FilterKernel& kernel,
                                         std::span<const double> d_filtered) {
  check_length(kernel, d_filtered.size(), "gradient");
  const int n = kernel.element_count();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int e = 0; e < n; ++e) {
    const auto nb = kernel.neighbors(e);
    const auto w = kernel.weights(e);
    const double scale = d_filtered[static_cast<std::size_t>(e)] / kernel.weight_sum(e);
    for (std::size_t k = 0; k < nb.size(); ++k) out(nb[k]) += w[k] * scale;
  }
  return out;
}

FilterMode parse_filter_mode(const std::string& name) {
  if (name == "none") return FilterMode::none;
  if (name == "sensitivity") return FilterMode::sensitivity;
  if (name == "density") return FilterMode::density;
  throw std::invalid_argument("unknown filter mode '" + name +
                              "' (expected none, sensitivity or density)");
}

const char* to_string(FilterMode mode) {
  switch (mode) {
    case FilterMode::none: return "none";
    case FilterMode::sensitivity: return "sensitivity";
    case FilterMode::density: return "density";
  }
  return "none";
}

}  // namespace dsco::opt
