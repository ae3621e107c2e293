#include "dsco/dmo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace dsco::dmo {

using material::ConstitutiveMatrix;

DmoDesign init_dmo(const fem::Mesh& mesh, const material::CandidateAngleSet& candidates, double f) {
  if (!(f > 0.0 && f < 1.0)) {
    throw std::invalid_argument("volume fraction must lie in (0, 1), got " + std::to_string(f));
  }
  const auto n = static_cast<Eigen::Index>(candidates.size());
  return DmoDesign::Constant(mesh.element_count(), n, f / static_cast<double>(n));
}

DmoEvaluation dmo_compliance_and_gradient(const DmoDesign& chi, fem::StiffnessSolver& solver,
                                          const std::vector<ConstitutiveMatrix>& rotated,
                                          double p, double eps) {
  const auto& mesh = solver.mesh();
  const int N = mesh.element_count();
  const auto n = static_cast<Eigen::Index>(rotated.size());
  if (chi.rows() != N || chi.cols() != n) {
    throw std::invalid_argument("DMO design must be " + std::to_string(N) + " x " +
                                std::to_string(n));
  }
  std::vector<fem::Matrix3> D(static_cast<std::size_t>(N));
  std::vector<double> row(static_cast<std::size_t>(n));
  for (int e = 0; e < N; ++e) {
    for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = chi(e, j);
    D[static_cast<std::size_t>(e)] = material::dmo_effective_constitutive(row, rotated, p, eps);
  }
  const auto result = solver.solve(D);

  DmoEvaluation out;
  out.compliance = result.compliance;
  out.gradient.resize(N, n);
  Eigen::VectorXd energy(n);
  for (int e = 0; e < N; ++e) {
    const auto q = fem::energy_basis(fem::gather(result.displacements, mesh.element(e)));
    for (Eigen::Index k = 0; k < n; ++k) {
      energy(k) = fem::energy_product(q, rotated[static_cast<std::size_t>(k)]);
    }
    for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = chi(e, j);
    const Eigen::MatrixXd G = material::dmo_weight_gradient(row, p, eps);
    out.gradient.row(e) = -(G.transpose() * energy).transpose();
  }
  return out;
}

DmoEvaluation dmo_compliance_and_gradient(const DmoDesign& chi, const fem::Mesh& mesh,
                                          const fem::BoundaryConditions& bc,
                                          const material::CandidateAngleSet& candidates,
                                          const ConstitutiveMatrix& D_base, double p,
                                          double eps) {
  fem::StiffnessSolver solver(mesh, bc);
  return dmo_compliance_and_gradient(chi, solver, candidates.rotated(D_base), p, eps);
}

double fibre_convergence(const Eigen::MatrixXd& design, double eta) {
  if (design.rows() == 0) return 0.0;
  Eigen::Index converged = 0;
  for (Eigen::Index e = 0; e < design.rows(); ++e) {
    const double norm = design.row(e).norm();
    if (norm <= 1e-9 || design.row(e).maxCoeff() >= eta * norm) ++converged;
  }
  return static_cast<double>(converged) / static_cast<double>(design.rows());
}

namespace {

std::string penalty_tag(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p=%g", p);
  return buf;
}

}  // namespace

DmoResult run_dmo(const DmoOptions& options, fem::StiffnessSolver& solver,
                  const material::CandidateAngleSet& candidates, const ConstitutiveMatrix& D_base) {
  if (options.p_schedule.empty()) throw std::invalid_argument("DMO penalty schedule is empty");
  if (options.max_iter < 1) throw std::invalid_argument("DMO max_iter must be positive");
  const auto& mesh = solver.mesh();
  const int N = mesh.element_count();
  const auto n = static_cast<Eigen::Index>(candidates.size());
  const auto rotated = candidates.rotated(D_base);
  const auto kernel = opt::build_filter_kernel(mesh, options.r_min);

  DmoResult result;
  auto& diag = result.diagnostics;
  DmoDesign chi = init_dmo(mesh, candidates, options.volume_fraction);
  const double budget = options.volume_fraction * static_cast<double>(N);
  const Eigen::Index nv = static_cast<Eigen::Index>(N) * n;

  opt::BoxConstrainedProblem problem;
  problem.lower = Eigen::VectorXd::Zero(nv);
  problem.upper = Eigen::VectorXd::Ones(nv);
  problem.constraint = opt::LinearConstraint{0.0, Eigen::VectorXd::Ones(nv)};
  opt::AsymptoteState state;

  std::size_t stage = 0;
  std::vector<double> stage_history;
  DmoDesign best_chi = chi;
  double best_c = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const double p = options.p_schedule[stage];
    const bool last_stage = stage + 1 == options.p_schedule.size();

    DmoDesign physical = chi;
    if (options.filter == opt::FilterMode::density) {
      for (Eigen::Index j = 0; j < n; ++j) {
        physical.col(j) = opt::filter_densities(
            kernel, std::span<const double>(chi.col(j).data(), static_cast<std::size_t>(N)));
      }
      physical = physical.cwiseMax(0.0).cwiseMin(1.0);
    }
    auto eval = dmo_compliance_and_gradient(physical, solver, rotated, p, options.eps);

    const double volume = chi.sum() / static_cast<double>(N);
    const double h = fibre_convergence(physical, options.eta);
    diag.compliance.push_back(eval.compliance);
    diag.h_eta.push_back(h);
    diag.volume_fraction.push_back(volume);
    diag.penalty.push_back(p);
    diag.records.push_back({"DMO", iter, eval.compliance, h, volume, penalty_tag(p)});
    stage_history.push_back(eval.compliance);
    if (last_stage && eval.compliance < best_c) {
      best_c = eval.compliance;
      best_chi = chi;
    }

    const auto var = convergence_variance(stage_history);
    if (var && *var <= options.eps0) {
      if (last_stage) {
        diag.converged = true;
        break;
      }
      ++stage;
      stage_history.clear();
      state = {};
    }
    if (iter == options.max_iter) break;

    Eigen::MatrixXd grad = eval.gradient;
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::span<const double> col(chi.col(j).data(), static_cast<std::size_t>(N));
      if (options.filter == opt::FilterMode::sensitivity) {
        const Eigen::VectorXd s = grad.col(j);
        grad.col(j) = opt::filter_sensitivities(
            kernel, col, std::span<const double>(s.data(), static_cast<std::size_t>(N)));
      } else if (options.filter == opt::FilterMode::density) {
        const Eigen::VectorXd s = grad.col(j);
        grad.col(j) = opt::filter_densities_adjoint(
            kernel, std::span<const double>(s.data(), static_cast<std::size_t>(N)));
      }
    }

    problem.x = Eigen::Map<const Eigen::VectorXd>(chi.data(), nv);
    problem.objective = eval.compliance;
    problem.gradient = Eigen::Map<const Eigen::VectorXd>(grad.data(), nv);
    problem.constraint->value = problem.x.sum() - budget;
    auto step = opt::mma_update(problem, state, options.mma);
    state = std::move(step.state);
    chi = Eigen::Map<const DmoDesign>(step.x.data(), N, n);
  }

  diag.final_penalty = options.p_schedule[stage];
  if (!diag.converged) {
    diag.warnings.push_back("DMO reached the iteration cap (" + std::to_string(options.max_iter) +
                            ") without meeting the variance criterion at the final penalty");
    if (std::isfinite(best_c)) chi = best_chi;
  }
  if (options.filter == opt::FilterMode::density) {
    DmoDesign physical = chi;
    for (Eigen::Index j = 0; j < n; ++j) {
      physical.col(j) = opt::filter_densities(
          kernel, std::span<const double>(chi.col(j).data(), static_cast<std::size_t>(N)));
    }
    chi = physical.cwiseMax(0.0).cwiseMin(1.0);
  }
  result.chi = std::move(chi);
  return result;
}

}  // namespace dsco::dmo
