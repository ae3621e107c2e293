#pragma once

// Result writers: convergence.csv, design.csv, layout.svg, summary.json.
// Column orders and element markup are fixed; see docs/formats.md.

#include "dsco/fem.hpp"
#include "dsco/history.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace dsco::io {

/// Shortest round-trip decimal form of x.
std::string format_number(double x);

void write_convergence_csv(std::ostream& os, const std::vector<IterationRecord>& records);

struct DesignTable {
  Eigen::VectorXd rho;
  Eigen::VectorXd theta;           ///< radians
  Eigen::VectorXd filtered_theta;  ///< radians
  std::vector<std::string> labels;
};

void write_design_csv(std::ostream& os, const fem::Mesh& mesh, const DesignTable& design);

/// One <g id="e<k>"> per element: a unit cell shaded by rho and, for rho >=
/// 0.5, a centred segment along the filtered angle. The y axis points up.
void write_layout_svg(std::ostream& os, const fem::Mesh& mesh, const DesignTable& design,
                      double cell_px = 10.0);

/// Writes text to path, throwing std::runtime_error if the file cannot be written.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace dsco::io
