#include "dsco/cfao.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsco::cfao {

using material::kPi;

CfaoDesign init_from_sbpto(const Eigen::MatrixXd& alpha,
                           const material::CandidateAngleSet& candidates) {
  const auto n = static_cast<Eigen::Index>(candidates.size());
  if (alpha.cols() != n + 1) {
    throw std::invalid_argument("phase design has " + std::to_string(alpha.cols()) +
                                " columns, expected " + std::to_string(n + 1));
  }
  CfaoDesign d;
  d.rho.resize(alpha.rows());
  d.theta.resize(alpha.rows());
  for (Eigen::Index e = 0; e < alpha.rows(); ++e) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (alpha(e, i) > alpha(e, best)) best = i;
    }
    d.theta(e) = alpha(e, best) > 0.0 ? candidates.radians(static_cast<std::size_t>(best)) : 0.0;
    d.rho(e) = std::clamp(1.0 - alpha(e, n), 0.0, 1.0);
  }
  return d;
}

CfaoDesign uniform_design(int elements, double rho, double theta) {
  return {Eigen::VectorXd::Constant(elements, rho), Eigen::VectorXd::Constant(elements, theta)};
}

namespace {

constexpr double kDegenerate = 1e-9;

struct FilterState {
  Eigen::VectorXd theta;     // filtered, unclamped
  Eigen::VectorXd denom;     // S_e
  std::vector<char> passthrough;
};

FilterState filter_state(const opt::FilterKernel& kernel, const CfaoDesign& design,
                         const AngleFilterOptions& options) {
  const int N = kernel.element_count();
  if (design.rho.size() != N || design.theta.size() != N) {
    throw std::invalid_argument("CFAO design length does not match the filter kernel");
  }
  FilterState st;
  st.theta.resize(N);
  st.denom.resize(N);
  st.passthrough.assign(static_cast<std::size_t>(N), 0);
  for (int e = 0; e < N; ++e) {
    const auto nb = kernel.neighbors(e);
    const auto w = kernel.weights(e);
    double hr = 0.0, hrt = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      hr += w[k] * design.rho(nb[k]);
      hrt += w[k] * design.rho(nb[k]) * design.theta(nb[k]);
    }
    if (hr <= kDegenerate) {
      st.passthrough[static_cast<std::size_t>(e)] = 1;
      st.theta(e) = design.theta(e);
      st.denom(e) = 1.0;
      continue;
    }
    st.denom(e) = options.normalize_by_density ? hr : kernel.weight_sum(e);
    st.theta(e) = hrt / st.denom(e);
  }
  return st;
}

}  // namespace

Eigen::VectorXd apply_angle_filter(const opt::FilterKernel& kernel, const CfaoDesign& design,
                                   const AngleFilterOptions& options) {
  return filter_state(kernel, design, options).theta.cwiseMax(-kPi / 2).cwiseMin(kPi / 2);
}

CfaoEvaluation cfao_compliance_and_gradients(const CfaoDesign& design,
                                             const opt::FilterKernel& kernel,
                                             fem::StiffnessSolver& solver, const CfaoModel& model) {
  const auto& mesh = solver.mesh();
  const int N = mesh.element_count();
  if (kernel.element_count() != N) {
    throw std::invalid_argument("angle filter kernel does not match the mesh");
  }
  const auto st = filter_state(kernel, design, model.filter);
  const Eigen::VectorXd Theta = st.theta.cwiseMax(-kPi / 2).cwiseMin(kPi / 2);
  const double p = model.penalty;

  std::vector<fem::Matrix3> D(static_cast<std::size_t>(N));
  for (int e = 0; e < N; ++e) {
    D[static_cast<std::size_t>(e)] =
        std::pow(design.rho(e), p) * material::rotate_constitutive(model.D_base, Theta(e)) +
        model.eps * model.D_base;
  }
  const auto result = solver.solve(D);

  CfaoEvaluation out;
  out.compliance = result.compliance;
  out.filtered_theta = Theta;
  out.d_rho = Eigen::VectorXd::Zero(N);
  out.d_theta = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd dTheta(N);
  for (int e = 0; e < N; ++e) {
    const auto q = fem::energy_basis(fem::gather(result.displacements, mesh.element(e)));
    const double rp = std::pow(design.rho(e), p);
    const double clamp_factor = (st.theta(e) > kPi / 2 || st.theta(e) < -kPi / 2) ? 0.0 : 1.0;
    dTheta(e) = clamp_factor * -rp *
                fem::energy_product(q, material::rotate_constitutive_derivative(model.D_base, Theta(e)));
    out.d_rho(e) = -p * std::pow(design.rho(e), p - 1.0) *
                   fem::energy_product(q, material::rotate_constitutive(model.D_base, Theta(e)));
  }

  for (int e = 0; e < N; ++e) {
    if (st.passthrough[static_cast<std::size_t>(e)]) {
      out.d_theta(e) += dTheta(e);
      continue;
    }
    const auto nb = kernel.neighbors(e);
    const auto w = kernel.weights(e);
    const double S = st.denom(e);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const int i = nb[k];
      out.d_theta(i) += dTheta(e) * w[k] * design.rho(i) / S;
      if (model.exact_rho_filter_term) {
        const double dT_drho = model.filter.normalize_by_density
                                   ? w[k] * (design.theta(i) - st.theta(e)) / S
                                   : w[k] * design.theta(i) / S;
        out.d_rho(i) += dTheta(e) * dT_drho;
      }
    }
  }
  return out;
}

std::vector<int> angle_wrap_hazards(const opt::FilterKernel& kernel, const CfaoDesign& design,
                                    double solid_threshold) {
  std::vector<int> out;
  for (int e = 0; e < kernel.element_count(); ++e) {
    if (design.rho(e) < solid_threshold) continue;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i : kernel.neighbors(e)) {
      if (design.rho(i) < solid_threshold) continue;
      lo = std::min(lo, design.theta(i));
      hi = std::max(hi, design.theta(i));
    }
    if (hi - lo > kPi / 2) out.push_back(e);
  }
  return out;
}

CfaoResult run_cfao(CfaoDesign design, const CfaoOptions& options, fem::StiffnessSolver& solver) {
  const auto& mesh = solver.mesh();
  const int N = mesh.element_count();
  if (design.rho.size() != N || design.theta.size() != N) {
    throw std::invalid_argument("CFAO design length does not match the mesh");
  }
  if (options.max_iter < 1) throw std::invalid_argument("CFAO max_iter must be positive");
  design.rho = design.rho.cwiseMax(0.0).cwiseMin(1.0);
  design.theta = design.theta.cwiseMax(-kPi / 2).cwiseMin(kPi / 2);

  const auto angle_kernel = opt::build_filter_kernel(mesh, options.R_c);
  const auto rho_kernel = opt::build_filter_kernel(mesh, options.r_min);
  const double budget = options.volume_fraction * static_cast<double>(N);

  opt::BoxConstrainedProblem rho_problem;
  rho_problem.lower = Eigen::VectorXd::Zero(N);
  rho_problem.upper = Eigen::VectorXd::Ones(N);
  rho_problem.constraint = opt::LinearConstraint{0.0, Eigen::VectorXd::Ones(N)};
  opt::BoxConstrainedProblem theta_problem;
  theta_problem.lower = Eigen::VectorXd::Constant(N, -kPi / 2);
  theta_problem.upper = Eigen::VectorXd::Constant(N, kPi / 2);
  opt::AsymptoteState rho_state, theta_state;

  CfaoResult result;
  auto& diag = result.diagnostics;
  result.compliance = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const auto eval = cfao_compliance_and_gradients(design, angle_kernel, solver, options.model);
    const double volume = design.rho.sum() / static_cast<double>(N);
    diag.compliance.push_back(eval.compliance);
    diag.records.push_back({"CFAO", iter, eval.compliance, std::nullopt, volume, ""});
    if (eval.compliance < result.compliance) {
      result.compliance = eval.compliance;
      result.design = design;
      result.filtered_theta = eval.filtered_theta;
      diag.best_iteration = iter;
    }
    const auto var = convergence_variance(diag.compliance);
    if (var && *var <= options.eps0) {
      diag.converged = true;
      break;
    }
    if (iter == options.max_iter) break;

    CfaoDesign next = design;
    if (options.update_rho) {
      Eigen::VectorXd s = eval.d_rho;
      if (options.rho_filter == opt::FilterMode::sensitivity) {
        s = opt::filter_sensitivities(
            rho_kernel, std::span<const double>(design.rho.data(), static_cast<std::size_t>(N)),
            std::span<const double>(s.data(), static_cast<std::size_t>(N)));
      }
      rho_problem.x = design.rho;
      rho_problem.objective = eval.compliance;
      rho_problem.gradient = s;
      rho_problem.constraint->value = design.rho.sum() - budget;
      auto step = opt::mma_update(rho_problem, rho_state, options.mma);
      rho_state = std::move(step.state);
      next.rho = std::move(step.x);
    }
    theta_problem.x = design.theta;
    theta_problem.objective = eval.compliance;
    theta_problem.gradient = eval.d_theta;
    auto step = opt::mma_update(theta_problem, theta_state, options.mma);
    theta_state = std::move(step.state);
    next.theta = std::move(step.x);
    design = std::move(next);
  }

  if (!diag.converged) {
    diag.warnings.push_back("CFAO reached the iteration cap (" + std::to_string(options.max_iter) +
                            ") without meeting the variance criterion");
  }
  diag.wrap_hazards = angle_wrap_hazards(angle_kernel, result.design);
  if (!diag.wrap_hazards.empty()) {
    diag.warnings.push_back(std::to_string(diag.wrap_hazards.size()) +
                            " elements have solid neighbours whose angles span more than 90 degrees");
  }
  return result;
}

}  // namespace dsco::cfao
