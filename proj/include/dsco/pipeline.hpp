#pragma once

// DMO -> SBPTO -> CFAO orchestration and artifact output.

#include "dsco/cfao.hpp"
#include "dsco/config.hpp"
#include "dsco/fem.hpp"
#include "dsco/history.hpp"
#include "dsco/sbpto.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsco::pipeline {

/// A failure inside one stage; what() starts with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(stage + " stage failed: " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RunSummary {
  double compliance = 0.0;
  int iterations = 0;
  int dmo_iterations = 0;
  int sbpto_iterations = 0;
  int cfao_iterations = 0;
  std::optional<double> h_eta;  ///< angle convergence at the end of SBPTO
  double volume_fraction = 0.0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

struct StageEndpoints {
  std::optional<double> dmo_compliance;
  std::optional<double> dmo_h_eta;
  std::optional<double> sbpto_compliance;
  std::optional<double> sbpto_h_eta;
  double cfao_start_compliance = 0.0;
  double cfao_best_compliance = 0.0;
};

struct RunResult {
  config::ProblemConfig config;
  fem::Mesh mesh;
  cfao::CfaoDesign design;
  Eigen::VectorXd filtered_theta;
  std::vector<std::string> labels;
  std::optional<sbpto::SbptoDesign> sbpto_design;
  std::vector<int> sbpto_labels;
  std::vector<IterationRecord> history;
  StageEndpoints endpoints;
  RunSummary summary;
  std::vector<std::string> log;  ///< load snaps, row clipping, labeling notes
};

/// Runs the configured pipeline. With out_dir, writes convergence.csv,
/// design.csv, layout.svg and summary.json there; if a stage fails, the
/// convergence rows gathered so far are still written before StageError
/// propagates.
RunResult run_dsco(const config::ProblemConfig& cfg,
                   const std::optional<std::filesystem::path>& out_dir = std::nullopt);

void write_artifacts(const RunResult& result, const std::filesystem::path& dir);

nlohmann::json summary_json(const RunResult& result);

/// Thread count from DSCO_THREADS (default 1, minimum 1).
int thread_count_from_env();

}  // namespace dsco::pipeline
