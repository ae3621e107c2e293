#include "dsco/sbpto.hpp"

#include "dsco/dmo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsco::sbpto {

SbptoDesign init_from_dmo(const Eigen::MatrixXd& chi, std::vector<std::string>* log) {
  const Eigen::Index N = chi.rows(), n = chi.cols();
  if (n < 1) throw std::invalid_argument("DMO design has no candidate columns");
  SbptoDesign d;
  d.alpha.resize(N, n + 1);
  d.upper = Eigen::MatrixXd::Ones(N, n + 1);
  d.frozen.assign(static_cast<std::size_t>(N), 0);
  for (Eigen::Index e = 0; e < N; ++e) {
    Eigen::RowVectorXd row = chi.row(e).cwiseMax(0.0).cwiseMin(1.0);
    const double sum = row.sum();
    if (sum > 1.0 + 1e-9) {
      if (log) {
        log->push_back("element " + std::to_string(e) + ": candidate densities sum to " +
                       std::to_string(sum) + ", rescaled to 1");
      }
      row /= sum;
    }
    d.alpha.row(e).head(n) = row;
    d.alpha(e, n) = std::max(0.0, 1.0 - row.sum());
  }
  return d;
}

namespace {

void check_pair(const SbptoDesign& design, ActivePair pair) {
  const int P = design.phases();
  if (pair.a < 0 || pair.b < 0 || pair.a >= P || pair.b >= P || pair.a == pair.b) {
    throw std::invalid_argument("invalid phase pair (" + std::to_string(pair.a) + ", " +
                                std::to_string(pair.b) + ") for " + std::to_string(P) + " phases");
  }
}

}  // namespace

Eigen::VectorXd pair_budget(const SbptoDesign& design, ActivePair pair) {
  check_pair(design, pair);
  const Eigen::Index N = design.alpha.rows();
  Eigen::VectorXd r(N);
  for (Eigen::Index e = 0; e < N; ++e) {
    double others = 0.0;
    for (Eigen::Index i = 0; i < design.alpha.cols(); ++i) {
      if (i != pair.a && i != pair.b) others += design.alpha(e, i);
    }
    r(e) = std::clamp(1.0 - others, 0.0, 1.0);
  }
  return r;
}

std::vector<std::uint8_t> freeze_elements(const SbptoDesign& design, ActivePair pair,
                                          double lambda_thresh) {
  check_pair(design, pair);
  const Eigen::Index N = design.alpha.rows();
  std::vector<std::uint8_t> frozen(static_cast<std::size_t>(N), 0);
  for (Eigen::Index e = 0; e < N; ++e) {
    const double xa = design.alpha(e, pair.a), xb = design.alpha(e, pair.b);
    const bool absent = std::abs(xa) <= 1e-9 && std::abs(xb) <= 1e-9;
    frozen[static_cast<std::size_t>(e)] = (xa > lambda_thresh || xb > lambda_thresh || absent);
  }
  return frozen;
}

PhaseModel make_phase_model(const material::CandidateAngleSet& candidates,
                            const material::ConstitutiveMatrix& D_base, double penalty,
                            double eps_void) {
  return {candidates.rotated(D_base), D_base, penalty, eps_void};
}

fem::Matrix3 phase_constitutive(const PhaseModel& model,
                                const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  const auto n = static_cast<Eigen::Index>(model.rotated.size());
  fem::Matrix3 D = std::pow(row(n), model.penalty) * model.eps_void * model.D_base;
  for (Eigen::Index i = 0; i < n; ++i) {
    D += std::pow(row(i), model.penalty) * model.rotated[static_cast<std::size_t>(i)];
  }
  return D;
}

PhaseEvaluation phase_compliance_and_partials(const Eigen::MatrixXd& alpha,
                                              fem::StiffnessSolver& solver,
                                              const PhaseModel& model) {
  const auto& mesh = solver.mesh();
  const int N = mesh.element_count();
  const auto n = static_cast<Eigen::Index>(model.rotated.size());
  if (alpha.rows() != N || alpha.cols() != n + 1) {
    throw std::invalid_argument("phase design must be " + std::to_string(N) + " x " +
                                std::to_string(n + 1));
  }
  std::vector<fem::Matrix3> D(static_cast<std::size_t>(N));
  for (int e = 0; e < N; ++e) D[static_cast<std::size_t>(e)] = phase_constitutive(model, alpha.row(e));
  const auto result = solver.solve(D);

  PhaseEvaluation out;
  out.compliance = result.compliance;
  out.partials.resize(N, n + 1);
  const double p = model.penalty;
  for (int e = 0; e < N; ++e) {
    const auto q = fem::energy_basis(fem::gather(result.displacements, mesh.element(e)));
    for (Eigen::Index i = 0; i < n; ++i) {
      out.partials(e, i) = -p * std::pow(alpha(e, i), p - 1.0) *
                           fem::energy_product(q, model.rotated[static_cast<std::size_t>(i)]);
    }
    out.partials(e, n) = -p * std::pow(alpha(e, n), p - 1.0) * model.eps_void *
                         fem::energy_product(q, model.D_base);
  }
  return out;
}

Eigen::VectorXd pair_gradient(const PhaseEvaluation& eval, ActivePair pair) {
  return eval.partials.col(pair.a) - eval.partials.col(pair.b);
}

double angle_convergence(const SbptoDesign& design, double eta) {
  return dmo::fibre_convergence(design.alpha.leftCols(design.phases() - 1), eta);
}

double solid_volume(const SbptoDesign& design) {
  return static_cast<double>(design.elements()) - design.alpha.col(design.void_phase()).sum();
}

std::vector<int> argmax_labels(const Eigen::MatrixXd& alpha) {
  std::vector<int> labels(static_cast<std::size_t>(alpha.rows()), 0);
  for (Eigen::Index e = 0; e < alpha.rows(); ++e) {
    int best = 0;
    for (Eigen::Index i = 1; i < alpha.cols(); ++i) {
      if (alpha(e, i) > alpha(e, best)) best = static_cast<int>(i);
    }
    labels[static_cast<std::size_t>(e)] = best;
  }
  return labels;
}

SubproblemReport binary_phase_subproblem(SbptoDesign& design, ActivePair pair,
                                         fem::StiffnessSolver& solver, const PhaseModel& model,
                                         const SubproblemOptions& options) {
  check_pair(design, pair);
  if (options.filter == opt::FilterMode::density) {
    throw std::invalid_argument("SBPTO supports sensitivity filtering only");
  }
  if (options.filter != opt::FilterMode::none && options.kernel == nullptr) {
    throw std::invalid_argument("SBPTO subproblem needs a filter kernel");
  }
  const int N = design.elements();
  const int V = design.void_phase();
  if (design.upper.rows() != N || design.upper.cols() != design.phases()) {
    design.upper = Eigen::MatrixXd::Ones(N, design.phases());
  }

  SubproblemReport report;
  design.frozen = freeze_elements(design, pair, options.lambda_thresh);
  std::vector<int> active;
  for (int e = 0; e < N; ++e) {
    if (!design.frozen[static_cast<std::size_t>(e)]) active.push_back(e);
  }
  report.active_elements = static_cast<int>(active.size());
  if (active.empty()) return report;

  const bool void_pair = pair.a == V || pair.b == V;
  // The phase whose fraction is handed to the update rule; for void pairs this
  // is always the solid side so the budget is a plain sum.
  const int moving = void_pair ? (pair.a == V ? pair.b : pair.a) : pair.a;
  const int partner = moving == pair.a ? pair.b : pair.a;
  const Eigen::VectorXd r = pair_budget(design, pair);

  // Bounds on the moving phase from 0 <= alpha <= u on both members of the pair.
  const std::size_t na = active.size();
  std::vector<double> lo(na), hi(na), x(na), sa(na), sb(na);
  for (std::size_t k = 0; k < na; ++k) {
    const int e = active[k];
    lo[k] = std::max(0.0, r(e) - std::min(design.upper(e, partner), r(e)));
    hi[k] = std::min(design.upper(e, moving), r(e));
  }

  const double budget = options.volume_fraction * static_cast<double>(N);
  for (int it = 0; it < options.inner_iter; ++it) {
    const auto eval = phase_compliance_and_partials(design.alpha, solver, model);
    report.compliance.push_back(eval.compliance);
    report.h_eta.push_back(angle_convergence(design, options.eta));
    report.volume.push_back(solid_volume(design) / static_cast<double>(N));

    const Eigen::VectorXd xm = design.alpha.col(moving);
    const Eigen::VectorXd xp = design.alpha.col(partner);
    auto filtered = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& rho) -> Eigen::VectorXd {
      if (options.filter != opt::FilterMode::sensitivity) return s;
      return opt::filter_sensitivities(
          *options.kernel, std::span<const double>(rho.data(), static_cast<std::size_t>(N)),
          std::span<const double>(s.data(), static_cast<std::size_t>(N)));
    };

    std::vector<double> next(na);
    if (void_pair) {
      const Eigen::VectorXd total = eval.partials.col(moving) - eval.partials.col(partner);
      const Eigen::VectorXd solid = Eigen::VectorXd::Ones(N) - design.alpha.col(V);
      const Eigen::VectorXd s = filtered(total, solid);
      double active_solid = 0.0;
      for (std::size_t k = 0; k < na; ++k) {
        x[k] = xm(active[k]);
        sa[k] = s(active[k]);
        active_solid += x[k];
      }
      const double target = budget - (solid_volume(design) - active_solid);
      const auto res = opt::oc_update(x, sa, target, lo, hi, options.oc);
      report.volume_clipped = report.volume_clipped || res.target_clipped;
      for (std::size_t k = 0; k < na; ++k) next[k] = res.x(static_cast<Eigen::Index>(k));
    } else {
      const bool f = options.filter_angle_pairs;
      const Eigen::VectorXd fa = f ? filtered(eval.partials.col(moving), xm) : eval.partials.col(moving);
      const Eigen::VectorXd fb = f ? filtered(eval.partials.col(partner), xp) : eval.partials.col(partner);
      for (std::size_t k = 0; k < na; ++k) {
        x[k] = xm(active[k]);
        sa[k] = fa(active[k]);
        sb[k] = fb(active[k]);
      }
      const Eigen::VectorXd res = opt::oc_exchange_update(x, sa, sb, lo, hi, options.oc);
      for (std::size_t k = 0; k < na; ++k) next[k] = res(static_cast<Eigen::Index>(k));
    }
    for (std::size_t k = 0; k < na; ++k) {
      const int e = active[k];
      design.alpha(e, moving) = next[k];
      design.alpha(e, partner) = r(e) - next[k];
    }
  }
  return report;
}

namespace {

std::string pair_tag(ActivePair pair) {
  return "pair=" + std::to_string(pair.a) + "-" + std::to_string(pair.b);
}

}  // namespace

SbptoResult run_sbpto(SbptoDesign design, const SbptoOptions& options,
                      fem::StiffnessSolver& solver, const material::CandidateAngleSet& candidates,
                      const material::ConstitutiveMatrix& D_base) {
  const int N = solver.mesh().element_count();
  const int P = static_cast<int>(candidates.size()) + 1;
  if (design.elements() != N || design.phases() != P) {
    throw std::invalid_argument("SBPTO design does not match mesh and candidate set");
  }
  if (options.p_schedule.empty()) throw std::invalid_argument("SBPTO penalty schedule is empty");
  if (options.max_sweeps < 1) throw std::invalid_argument("SBPTO max_sweeps must be positive");

  std::vector<ActivePair> pairs;
  for (int a = 0; a < P; ++a) {
    for (int b = 0; b < P; ++b) {
      if (a == b || (!options.ordered_pairs && b < a)) continue;
      pairs.push_back({a, b});
    }
  }

  const auto kernel = opt::build_filter_kernel(solver.mesh(), options.r_min);
  SubproblemOptions sub;
  sub.inner_iter = options.inner_iter;
  sub.volume_fraction = options.volume_fraction;
  sub.lambda_thresh = options.lambda_thresh;
  sub.eta = options.eta;
  sub.oc = options.oc;
  sub.filter = options.filter;
  sub.filter_angle_pairs = options.filter_angle_pairs;
  sub.kernel = &kernel;

  SbptoResult result;
  auto& diag = result.diagnostics;
  auto model = make_phase_model(candidates, D_base, options.p_schedule.front(), options.eps_void);
  int iter = 0;
  bool clipped = false;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    model.penalty = options.p_schedule[std::min<std::size_t>(static_cast<std::size_t>(sweep - 1),
                                                             options.p_schedule.size() - 1)];
    for (const auto& pair : pairs) {
      const auto rep = binary_phase_subproblem(design, pair, solver, model, sub);
      clipped = clipped || rep.volume_clipped;
      for (std::size_t k = 0; k < rep.compliance.size(); ++k) {
        diag.compliance.push_back(rep.compliance[k]);
        diag.records.push_back(
            {"SBPTO", ++iter, rep.compliance[k], rep.h_eta[k], rep.volume[k], pair_tag(pair)});
      }
    }
    diag.sweeps = sweep;
    const double h = angle_convergence(design, options.eta);
    diag.sweep_h_eta.push_back(h);
    diag.sweep_volume_fraction.push_back(solid_volume(design) / static_cast<double>(N));
    if (h >= options.h_target) {
      diag.converged = true;
      break;
    }
  }

  const auto final_eval = phase_compliance_and_partials(design.alpha, solver, model);
  diag.compliance.push_back(final_eval.compliance);
  diag.records.push_back({"SBPTO", ++iter, final_eval.compliance, angle_convergence(design, options.eta),
                          solid_volume(design) / static_cast<double>(N), "final"});

  if (clipped) {
    diag.warnings.push_back("SBPTO volume target was outside the reachable window and was clipped");
  }
  if (!diag.converged) {
    diag.warnings.push_back("SBPTO stopped after " + std::to_string(options.max_sweeps) +
                            " sweeps with h_eta below " + std::to_string(options.h_target));
  }

  result.labels = argmax_labels(design.alpha);
  const Eigen::Index n = P - 1;
  for (int e = 0; e < N; ++e) {
    const Eigen::RowVectorXd angles = design.alpha.row(e).head(n);
    const double norm = angles.norm();
    if (norm > 1e-9 && angles.maxCoeff() < options.eta * norm) {
      diag.labeling_log.push_back("element " + std::to_string(e) + " mixed, labeled phase " +
                                  std::to_string(result.labels[static_cast<std::size_t>(e)]));
    }
  }
  result.design = std::move(design);
  return result;
}

}  // namespace dsco::sbpto
