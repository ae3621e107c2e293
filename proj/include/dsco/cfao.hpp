#pragma once

// Stage 3: continuous fibre angle optimization with a density-weighted
// spatial angle filter.

#include "dsco/fem.hpp"
#include "dsco/filter.hpp"
#include "dsco/history.hpp"
#include "dsco/material.hpp"
#include "dsco/mma.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace dsco::cfao {

struct CfaoDesign {
  Eigen::VectorXd rho;    ///< densities in [0, 1]
  Eigen::VectorXd theta;  ///< fibre angles in radians, [-pi/2, pi/2]
};

/// theta = argmax angle phase (0 when the row has no angle material),
/// rho = 1 - alpha_void clipped to [0, 1].
CfaoDesign init_from_sbpto(const Eigen::MatrixXd& alpha,
                           const material::CandidateAngleSet& candidates);

/// Uniform start used when CFAO runs alone.
CfaoDesign uniform_design(int elements, double rho, double theta);

struct AngleFilterOptions {
  bool normalize_by_density = true;  ///< false selects the sum-of-H denominator
};

/// Filtered angles Theta_e = sum_i H_ei rho_i theta_i / S_e with S_e = sum_j
/// H_ej rho_j (or sum_j H_ej), clamped to [-pi/2, pi/2]. Neighbourhoods with
/// sum H rho <= 1e-9 pass theta through.
Eigen::VectorXd apply_angle_filter(const opt::FilterKernel& kernel, const CfaoDesign& design,
                                   const AngleFilterOptions& options = {});

struct CfaoModel {
  material::ConstitutiveMatrix D_base = material::ConstitutiveMatrix::Zero();
  double penalty = 3.0;
  double eps = 1e-9;                 ///< stiffness floor eps * D_base
  AngleFilterOptions filter;
  bool exact_rho_filter_term = true; ///< include dTheta/drho in dc/drho
};

struct CfaoEvaluation {
  double compliance = 0.0;
  Eigen::VectorXd d_rho;
  Eigen::VectorXd d_theta;
  Eigen::VectorXd filtered_theta;
};

/// Element stiffness rho^p Dbar(Theta) + eps D_base; gradients are chained
/// through the angle filter.
CfaoEvaluation cfao_compliance_and_gradients(const CfaoDesign& design,
                                             const opt::FilterKernel& kernel,
                                             fem::StiffnessSolver& solver, const CfaoModel& model);

/// Elements whose solid neighbours span more than pi/2 in angle, where a
/// plain weighted mean of angles is not a meaningful average orientation.
std::vector<int> angle_wrap_hazards(const opt::FilterKernel& kernel, const CfaoDesign& design,
                                    double solid_threshold = 0.5);

struct CfaoOptions {
  double volume_fraction = 0.5;
  int max_iter = 200;
  double eps0 = 1e-2;
  double r_min = 1.5;  ///< sensitivity filter radius for rho
  double R_c = 1.5;    ///< angle filter radius
  bool update_rho = true;
  opt::FilterMode rho_filter = opt::FilterMode::sensitivity;
  opt::MmaParams mma;
  CfaoModel model;
};

struct CfaoDiagnostics {
  std::vector<double> compliance;
  std::vector<IterationRecord> records;
  std::vector<std::string> warnings;
  std::vector<int> wrap_hazards;
  int best_iteration = 0;
  bool converged = false;
  int iterations() const { return static_cast<int>(compliance.size()); }
};

struct CfaoResult {
  CfaoDesign design;               ///< best iterate
  Eigen::VectorXd filtered_theta;  ///< physical fibre field of the best iterate
  double compliance = 0.0;
  CfaoDiagnostics diagnostics;
};

/// Joint MMA updates of rho (volume constrained) and theta (box only) from one
/// FEA solve per iteration, until the variance criterion or max_iter.
CfaoResult run_cfao(CfaoDesign design, const CfaoOptions& options, fem::StiffnessSolver& solver);

}  // namespace dsco::cfao
