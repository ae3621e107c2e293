#pragma once

// Stage 1: discrete material optimization over candidate fibre angles.

#include "dsco/fem.hpp"
#include "dsco/filter.hpp"
#include "dsco/history.hpp"
#include "dsco/material.hpp"
#include "dsco/mma.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace dsco::dmo {

/// N x n matrix; row e holds the candidate densities chi of element e.
using DmoDesign = Eigen::MatrixXd;

/// chi = f / n everywhere. Throws std::invalid_argument unless 0 < f < 1.
DmoDesign init_dmo(const fem::Mesh& mesh, const material::CandidateAngleSet& candidates, double f);

struct DmoEvaluation {
  double compliance = 0.0;
  Eigen::MatrixXd gradient;  ///< dc/dchi, N x n
};

/// Compliance and its gradient with respect to chi, using precomputed rotated
/// candidate stiffnesses.
DmoEvaluation dmo_compliance_and_gradient(const DmoDesign& chi, fem::StiffnessSolver& solver,
                                          const std::vector<material::ConstitutiveMatrix>& rotated,
                                          double p, double eps);

/// One-shot form that builds its own solver.
DmoEvaluation dmo_compliance_and_gradient(const DmoDesign& chi, const fem::Mesh& mesh,
                                          const fem::BoundaryConditions& bc,
                                          const material::CandidateAngleSet& candidates,
                                          const material::ConstitutiveMatrix& D_base, double p,
                                          double eps);

/// Fraction of rows whose largest entry is at least eta times the row's
/// Euclidean norm. Rows with norm <= 1e-9 count as converged.
double fibre_convergence(const Eigen::MatrixXd& design, double eta);

struct DmoOptions {
  double volume_fraction = 0.5;
  std::vector<double> p_schedule{1.0, 2.0, 3.0};
  double eps = 1e-9;
  double eps0 = 1e-2;
  double eta = 0.95;
  int max_iter = 300;
  double r_min = 1.5;
  opt::FilterMode filter = opt::FilterMode::sensitivity;
  opt::MmaParams mma;
};

struct DmoDiagnostics {
  std::vector<double> compliance;
  std::vector<double> h_eta;
  std::vector<double> volume_fraction;
  std::vector<double> penalty;
  std::vector<IterationRecord> records;
  std::vector<std::string> warnings;
  bool converged = false;
  double final_penalty = 0.0;
  int iterations() const { return static_cast<int>(compliance.size()); }
};

struct DmoResult {
  DmoDesign chi;
  DmoDiagnostics diagnostics;
};

/// Evaluate, filter, MMA-update and test the variance criterion until it holds
/// at the last penalty of the schedule or max_iter evaluations are spent.
DmoResult run_dmo(const DmoOptions& options, fem::StiffnessSolver& solver,
                  const material::CandidateAngleSet& candidates,
                  const material::ConstitutiveMatrix& D_base);

}  // namespace dsco::dmo
