#pragma once

// Problem configuration: JSON schema, defaults, validation, and resolution to
// a mesh plus boundary conditions.

#include "dsco/fem.hpp"
#include "dsco/filter.hpp"
#include "dsco/material.hpp"
#include "dsco/mma.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsco::config {

/// Validation failure; key() is the dotted path of the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class Mode { dsco, cfao_only };

struct MaterialSpec {
  bool engineering = false;
  double D11 = 0.0, D12 = 0.0, D22 = 0.0, D33 = 0.0;
  double Ex = 0.0, Ey = 0.0, Gxy = 0.0, nu_xy = 0.0;
  material::ConstitutiveMatrix matrix() const;
};

/// Nodes on the segment [from, to] get the listed DOFs fixed. A segment that
/// hits no node snaps to the nearest node.
struct SupportSpec {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool fix_x = true;
  bool fix_y = true;
};

/// Force applied at the node nearest to (x, y).
struct LoadSpec {
  double x = 0.0, y = 0.0;
  double fx = 0.0, fy = 0.0;
};

struct DmoSettings {
  std::vector<double> p_schedule{1.0, 2.0, 3.0};
  int max_iter = 300;
  opt::FilterMode filter = opt::FilterMode::sensitivity;
};

struct SbptoSettings {
  int inner_iter = 5;
  int max_sweeps = 10;
  bool ordered_pairs = true;
  std::vector<double> p_schedule{3.0};
  double eps_void = 1e-9;
  opt::FilterMode filter = opt::FilterMode::sensitivity;
  bool filter_angle_pairs = false;
};

struct CfaoSettings {
  int max_iter = 200;
  double penalty = 3.0;
  bool update_rho = true;
  bool normalize_by_density = true;
  bool exact_rho_filter_term = true;
  opt::FilterMode filter = opt::FilterMode::sensitivity;
};

struct ProblemConfig {
  std::string name = "problem";
  Mode mode = Mode::dsco;
  int nx = 0, ny = 0;
  std::vector<fem::Rect> cutouts;
  MaterialSpec material;
  std::vector<SupportSpec> supports;
  std::vector<LoadSpec> loads;
  double volume_fraction = 0.5;
  double r_min = 1.5;
  double R_c = 1.5;
  std::vector<double> candidates_deg;
  double initial_angle_deg = 0.0;
  double eps = 1e-9;
  double eps0 = 1e-2;
  double eta = 0.95;
  double lambda_thresh = 0.99;
  double h_target = 0.99;
  opt::MmaParams mma;
  double oc_damping = 0.5;
  DmoSettings dmo;
  SbptoSettings sbpto;
  CfaoSettings cfao;
};

/// Parses and validates; unspecified optional keys take their defaults.
/// Throws ConfigError naming the key on any schema or range violation.
ProblemConfig parse_config(const nlohmann::json& j);
ProblemConfig load_config_text(const std::string& text);
ProblemConfig load_config_file(const std::filesystem::path& path);

/// Range and consistency checks on an already-built config.
void validate(const ProblemConfig& cfg);

/// Normalized form with every default written out; parse_config(to_json(c))
/// reproduces c.
nlohmann::json to_json(const ProblemConfig& cfg);

const char* to_string(Mode mode);

fem::Mesh make_mesh(const ProblemConfig& cfg);

/// Resolves supports and loads to mesh DOFs. Snaps of load or support points
/// that do not sit on a node are described in `log`.
fem::BoundaryConditions make_boundary_conditions(const ProblemConfig& cfg, const fem::Mesh& mesh,
                                                 std::vector<std::string>* log = nullptr);

}  // namespace dsco::config
