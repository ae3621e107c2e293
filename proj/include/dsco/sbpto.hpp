#pragma once

// Stage 2: sequential binary-phase topology optimization. Each element carries
// n angle phases plus a void phase (last column) that sum to one; pairs of
// phases are optimized in turn while every other phase is held fixed.

#include "dsco/fem.hpp"
#include "dsco/filter.hpp"
#include "dsco/history.hpp"
#include "dsco/material.hpp"
#include "dsco/oc.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace dsco::sbpto {

struct SbptoDesign {
  Eigen::MatrixXd alpha;            ///< N x (n+1), void phase last
  std::vector<std::uint8_t> frozen; ///< mask of the most recent subproblem
  Eigen::MatrixXd upper;            ///< per-variable upper bounds u, default 1

  int elements() const { return static_cast<int>(alpha.rows()); }
  int phases() const { return static_cast<int>(alpha.cols()); }
  int void_phase() const { return phases() - 1; }
};

struct ActivePair {
  int a = 0;
  int b = 0;
};

/// Copies chi into the angle columns and sets void = 1 - sum chi. Rows whose
/// sum exceeds 1 + 1e-9 are rescaled to sum 1; a note per row goes to `log`.
SbptoDesign init_from_dmo(const Eigen::MatrixXd& chi, std::vector<std::string>* log = nullptr);

/// Per-element budget r_ab = 1 - sum of the phases outside the pair.
Eigen::VectorXd pair_budget(const SbptoDesign& design, ActivePair pair);

/// Element e is frozen iff alpha_a > lambda, alpha_b > lambda, or both are zero
/// within 1e-9.
std::vector<std::uint8_t> freeze_elements(const SbptoDesign& design, ActivePair pair,
                                          double lambda_thresh);

/// Stiffness model: D_e = sum_i alpha_i^p Dbar_i + alpha_void^p eps_void D_base.
struct PhaseModel {
  std::vector<material::ConstitutiveMatrix> rotated;
  material::ConstitutiveMatrix D_base = material::ConstitutiveMatrix::Zero();
  double penalty = 3.0;
  double eps_void = 1e-9;
};

PhaseModel make_phase_model(const material::CandidateAngleSet& candidates,
                            const material::ConstitutiveMatrix& D_base, double penalty,
                            double eps_void);

fem::Matrix3 phase_constitutive(const PhaseModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& row);

struct PhaseEvaluation {
  double compliance = 0.0;
  Eigen::MatrixXd partials;  ///< dc/dalpha_i with every other phase held fixed, N x (n+1)
};

PhaseEvaluation phase_compliance_and_partials(const Eigen::MatrixXd& alpha,
                                              fem::StiffnessSolver& solver,
                                              const PhaseModel& model);

/// Total derivative of compliance with respect to alpha_a when alpha_b = r_ab -
/// alpha_a follows it: partials(:, a) - partials(:, b).
Eigen::VectorXd pair_gradient(const PhaseEvaluation& eval, ActivePair pair);

struct SubproblemOptions {
  int inner_iter = 5;
  double volume_fraction = 0.5;
  double lambda_thresh = 0.99;
  double eta = 0.95;
  opt::OcParams oc;
  opt::FilterMode filter = opt::FilterMode::sensitivity;
  bool filter_angle_pairs = false;  ///< also filter the exchange between two angle phases
  const opt::FilterKernel* kernel = nullptr;  ///< required unless filter is none
};

struct SubproblemReport {
  std::vector<double> compliance;  ///< one entry per FEA solve
  std::vector<double> h_eta;       ///< angle convergence of each evaluated design
  std::vector<double> volume;      ///< solid volume fraction of each evaluated design
  int active_elements = 0;
  bool volume_clipped = false;
};

/// Runs `inner_iter` evaluate-and-update steps of the binary subproblem for
/// `pair`. Frozen elements and phases outside the pair are left untouched. A
/// pair involving the void phase is updated by OC under the solid-volume
/// budget; a pair of two angle phases by the per-element exchange rule.
SubproblemReport binary_phase_subproblem(SbptoDesign& design, ActivePair pair,
                                         fem::StiffnessSolver& solver, const PhaseModel& model,
                                         const SubproblemOptions& options);

struct SbptoOptions {
  double volume_fraction = 0.5;
  double lambda_thresh = 0.99;
  double eta = 0.95;
  double h_target = 0.99;
  int inner_iter = 5;
  int max_sweeps = 10;
  bool ordered_pairs = true;
  std::vector<double> p_schedule{3.0};  ///< penalty per sweep, last value repeats
  double eps_void = 1e-9;
  double r_min = 1.5;
  opt::FilterMode filter = opt::FilterMode::sensitivity;
  bool filter_angle_pairs = false;
  opt::OcParams oc;
};

struct SbptoDiagnostics {
  std::vector<double> compliance;
  std::vector<IterationRecord> records;
  std::vector<double> sweep_h_eta;
  std::vector<double> sweep_volume_fraction;
  std::vector<std::string> warnings;
  std::vector<std::string> labeling_log;
  int sweeps = 0;
  bool converged = false;
  int iterations() const { return static_cast<int>(compliance.size()); }
};

struct SbptoResult {
  SbptoDesign design;
  std::vector<int> labels;  ///< argmax phase per element
  SbptoDiagnostics diagnostics;
};

/// h over the angle columns only; rows with no angle material count as converged.
double angle_convergence(const SbptoDesign& design, double eta);

/// Solid measure sum_e (1 - alpha_void).
double solid_volume(const SbptoDesign& design);

/// Row-wise argmax with ties toward the lowest index.
std::vector<int> argmax_labels(const Eigen::MatrixXd& alpha);

/// Sweeps of pair subproblems until h_eta >= h_target at a sweep boundary or
/// max_sweeps is reached; one final FEA solve evaluates the returned design.
SbptoResult run_sbpto(SbptoDesign design, const SbptoOptions& options,
                      fem::StiffnessSolver& solver, const material::CandidateAngleSet& candidates,
                      const material::ConstitutiveMatrix& D_base);

}  // namespace dsco::sbpto
