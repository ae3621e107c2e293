#include "dsco/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dsco::config {

using nlohmann::json;

material::ConstitutiveMatrix MaterialSpec::matrix() const {
  if (engineering) return material::constitutive_from_engineering(Ex, Ey, Gxy, nu_xy);
  return material::constitutive_from_entries(D11, D12, D22, D33);
}

const char* to_string(Mode mode) { return mode == Mode::dsco ? "dsco" : "cfao_only"; }

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Reads fields from one JSON object and remembers which keys were consumed,
// so leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback, bool required = false) {
    const json* v = find(key);
    if (!v) {
      if (required) throw ConfigError(join(path_, key), "required number is missing");
      return fallback;
    }
    if (!v->is_number()) throw ConfigError(join(path_, key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(join(path_, key), "must be finite");
    return x;
  }

  int integer(const std::string& key, int fallback, bool required = false) {
    const json* v = find(key);
    if (!v) {
      if (required) throw ConfigError(join(path_, key), "required integer is missing");
      return fallback;
    }
    if (!v->is_number_integer()) throw ConfigError(join(path_, key), "expected an integer");
    return v->get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(join(path_, key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback,
                              bool required = false) {
    const json* v = find(key);
    if (!v) {
      if (required) throw ConfigError(join(path_, key), "required list is missing");
      return fallback;
    }
    if (!v->is_array()) throw ConfigError(join(path_, key), "expected a list of numbers");
    std::vector<double> out;
    for (const auto& x : *v) {
      if (!x.is_number()) throw ConfigError(join(path_, key), "expected a list of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::pair<double, double> point(const json* v, const std::string& key) {
  if (!v || !v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
    throw ConfigError(key, "expected a point [x, y]");
  }
  return {(*v)[0].get<double>(), (*v)[1].get<double>()};
}

void check(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

opt::FilterMode filter_mode(ObjectReader& r, const std::string& key, opt::FilterMode fallback) {
  const std::string s = r.string(key, opt::to_string(fallback));
  try {
    return opt::parse_filter_mode(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(r.path(key), e.what());
  }
}

}  // namespace

ProblemConfig parse_config(const json& j) {
  ProblemConfig c;
  ObjectReader root(j, "");
  c.name = root.string("name", c.name);

  const std::string mode = root.string("mode", "dsco");
  if (mode == "dsco") c.mode = Mode::dsco;
  else if (mode == "cfao_only") c.mode = Mode::cfao_only;
  else throw ConfigError("mode", "expected \"dsco\" or \"cfao_only\", got \"" + mode + "\"");

  const json* mesh = root.find("mesh");
  if (!mesh) throw ConfigError("mesh", "required object is missing");
  {
    ObjectReader m(*mesh, "mesh");
    c.nx = m.integer("nx", 0, true);
    c.ny = m.integer("ny", 0, true);
    if (const json* cut = m.find("cutouts")) {
      check(cut->is_array(), "mesh.cutouts", "expected a list of rectangles");
      for (std::size_t k = 0; k < cut->size(); ++k) {
        ObjectReader r((*cut)[k], "mesh.cutouts[" + std::to_string(k) + "]");
        fem::Rect rect;
        rect.x0 = r.number("x0", 0, true);
        rect.y0 = r.number("y0", 0, true);
        rect.x1 = r.number("x1", 0, true);
        rect.y1 = r.number("y1", 0, true);
        r.finish();
        c.cutouts.push_back(rect);
      }
    }
    m.finish();
  }

  const json* mat = root.find("material");
  if (!mat) throw ConfigError("material", "required object is missing");
  {
    ObjectReader m(*mat, "material");
    const bool direct = m.has("D11") || m.has("D12") || m.has("D22") || m.has("D33");
    const bool eng = m.has("Ex") || m.has("Ey") || m.has("Gxy") || m.has("nu_xy");
    check(direct != eng, "material",
          "give exactly one form: {D11, D12, D22, D33} or {Ex, Ey, Gxy, nu_xy}");
    c.material.engineering = eng;
    if (eng) {
      c.material.Ex = m.number("Ex", 0, true);
      c.material.Ey = m.number("Ey", 0, true);
      c.material.Gxy = m.number("Gxy", 0, true);
      c.material.nu_xy = m.number("nu_xy", 0, true);
    } else {
      c.material.D11 = m.number("D11", 0, true);
      c.material.D12 = m.number("D12", 0, true);
      c.material.D22 = m.number("D22", 0, true);
      c.material.D33 = m.number("D33", 0, true);
    }
    m.finish();
  }

  const json* sup = root.find("supports");
  if (!sup) throw ConfigError("supports", "required list is missing");
  check(sup->is_array(), "supports", "expected a list");
  for (std::size_t k = 0; k < sup->size(); ++k) {
    const std::string key = "supports[" + std::to_string(k) + "]";
    ObjectReader r((*sup)[k], key);
    SupportSpec s;
    std::tie(s.x0, s.y0) = point(r.find("from"), key + ".from");
    if (r.has("to")) std::tie(s.x1, s.y1) = point(r.find("to"), key + ".to");
    else std::tie(s.x1, s.y1) = std::pair{s.x0, s.y0};
    const std::string fix = r.string("fix", "xy");
    check(fix == "x" || fix == "y" || fix == "xy", key + ".fix", "expected \"x\", \"y\" or \"xy\"");
    s.fix_x = fix.find('x') != std::string::npos;
    s.fix_y = fix.find('y') != std::string::npos;
    r.finish();
    c.supports.push_back(s);
  }

  const json* loads = root.find("loads");
  if (!loads) throw ConfigError("loads", "required list is missing");
  check(loads->is_array(), "loads", "expected a list");
  for (std::size_t k = 0; k < loads->size(); ++k) {
    const std::string key = "loads[" + std::to_string(k) + "]";
    ObjectReader r((*loads)[k], key);
    LoadSpec l;
    std::tie(l.x, l.y) = point(r.find("at"), key + ".at");
    l.fx = r.number("fx", 0.0);
    l.fy = r.number("fy", 0.0);
    r.finish();
    c.loads.push_back(l);
  }

  c.volume_fraction = root.number("volume_fraction", 0, true);
  c.r_min = root.number("r_min", c.r_min);
  c.R_c = root.number("R_c", c.r_min);
  c.candidates_deg = root.numbers("candidates_deg", {}, c.mode == Mode::dsco);
  c.initial_angle_deg = root.number("initial_angle_deg", c.initial_angle_deg);
  c.eps = root.number("eps", c.eps);
  c.eps0 = root.number("eps0", c.eps0);
  c.eta = root.number("eta", c.eta);
  c.lambda_thresh = root.number("lambda_thresh", c.lambda_thresh);
  c.h_target = root.number("h_target", c.h_target);

  if (const json* s = root.find("solver")) {
    ObjectReader r(*s, "solver");
    c.mma.move = r.number("move_limit", c.mma.move);
    c.mma.asyinit = r.number("asyinit", c.mma.asyinit);
    c.mma.asyincr = r.number("asyincr", c.mma.asyincr);
    c.mma.asydecr = r.number("asydecr", c.mma.asydecr);
    c.mma.albefa = r.number("albefa", c.mma.albefa);
    c.oc_damping = r.number("oc_damping", c.oc_damping);
    r.finish();
  }
  if (const json* s = root.find("dmo")) {
    ObjectReader r(*s, "dmo");
    c.dmo.p_schedule = r.numbers("p_schedule", c.dmo.p_schedule);
    c.dmo.max_iter = r.integer("max_iter", c.dmo.max_iter);
    c.dmo.filter = filter_mode(r, "filter", c.dmo.filter);
    r.finish();
  }
  if (const json* s = root.find("sbpto")) {
    ObjectReader r(*s, "sbpto");
    c.sbpto.inner_iter = r.integer("inner_iter", c.sbpto.inner_iter);
    c.sbpto.max_sweeps = r.integer("max_sweeps", c.sbpto.max_sweeps);
    c.sbpto.ordered_pairs = r.boolean("ordered_pairs", c.sbpto.ordered_pairs);
    c.sbpto.p_schedule = r.numbers("p_schedule", c.sbpto.p_schedule);
    c.sbpto.eps_void = r.number("eps_void", c.sbpto.eps_void);
    c.sbpto.filter = filter_mode(r, "filter", c.sbpto.filter);
    check(c.sbpto.filter != opt::FilterMode::density, "sbpto.filter",
          "density filtering is not available for phase fractions");
    c.sbpto.filter_angle_pairs = r.boolean("filter_angle_pairs", c.sbpto.filter_angle_pairs);
    r.finish();
  }
  if (const json* s = root.find("cfao")) {
    ObjectReader r(*s, "cfao");
    c.cfao.max_iter = r.integer("max_iter", c.cfao.max_iter);
    c.cfao.penalty = r.number("penalty", c.cfao.penalty);
    c.cfao.update_rho = r.boolean("update_rho", c.cfao.update_rho);
    c.cfao.normalize_by_density = r.boolean("normalize_by_density", c.cfao.normalize_by_density);
    c.cfao.exact_rho_filter_term = r.boolean("exact_rho_filter_term", c.cfao.exact_rho_filter_term);
    c.cfao.filter = filter_mode(r, "filter", c.cfao.filter);
    check(c.cfao.filter != opt::FilterMode::density, "cfao.filter",
          "density filtering is not available for CFAO densities");
    r.finish();
  }
  root.finish();
  validate(c);
  return c;
}

void validate(const ProblemConfig& c) {
  check(c.nx >= 1, "mesh.nx", "must be >= 1");
  check(c.ny >= 1, "mesh.ny", "must be >= 1");
  for (std::size_t k = 0; k < c.cutouts.size(); ++k) {
    const auto& r = c.cutouts[k];
    check(r.x1 > r.x0 && r.y1 > r.y0, "mesh.cutouts[" + std::to_string(k) + "]",
          "needs x1 > x0 and y1 > y0");
  }
  try {
    (void)c.material.matrix();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("material", e.what());
  }
  if (!c.material.engineering) {
    const auto& m = c.material;
    check(m.D11 > 0 && m.D22 > 0 && m.D33 > 0 && m.D11 * m.D22 - m.D12 * m.D12 > 0, "material",
          "D must be positive definite (D11, D22, D33 > 0 and D11*D22 > D12^2)");
  }
  check(!c.supports.empty(), "supports", "at least one support is required");
  check(!c.loads.empty(), "loads", "at least one load is required");
  for (std::size_t k = 0; k < c.loads.size(); ++k) {
    check(c.loads[k].fx != 0.0 || c.loads[k].fy != 0.0, "loads[" + std::to_string(k) + "]",
          "load has zero magnitude");
  }
  check(c.volume_fraction > 0.0 && c.volume_fraction < 1.0, "volume_fraction",
        "must lie in (0, 1), got " + std::to_string(c.volume_fraction));
  check(c.r_min > 0.0, "r_min", "must be > 0");
  check(c.R_c > 0.0, "R_c", "must be > 0");
  if (c.mode == Mode::dsco) {
    check(c.candidates_deg.size() >= 2, "candidates_deg", "needs at least two angles");
    try {
      material::CandidateAngleSet set(c.candidates_deg);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("candidates_deg", e.what());
    }
  }
  check(c.initial_angle_deg >= -90.0 && c.initial_angle_deg <= 90.0, "initial_angle_deg",
        "must lie in [-90, 90]");
  check(c.eps > 0.0 && c.eps < 1e-2, "eps", "must lie in (0, 1e-2)");
  check(c.eps0 > 0.0, "eps0", "must be > 0");
  check(c.eta > 0.0 && c.eta <= 1.0, "eta", "must lie in (0, 1]");
  check(c.lambda_thresh > 0.5 && c.lambda_thresh < 1.0, "lambda_thresh", "must lie in (0.5, 1)");
  check(c.h_target > 0.0 && c.h_target <= 1.0, "h_target", "must lie in (0, 1]");
  check(c.mma.move > 0.0 && c.mma.move <= 1.0, "solver.move_limit", "must lie in (0, 1]");
  check(c.mma.asyinit > 0.0 && c.mma.asyinit <= 1.0, "solver.asyinit", "must lie in (0, 1]");
  check(c.mma.asyincr >= 1.0, "solver.asyincr", "must be >= 1");
  check(c.mma.asydecr > 0.0 && c.mma.asydecr <= 1.0, "solver.asydecr", "must lie in (0, 1]");
  check(c.mma.albefa > 0.0 && c.mma.albefa < 1.0, "solver.albefa", "must lie in (0, 1)");
  check(c.oc_damping > 0.0 && c.oc_damping <= 1.0, "solver.oc_damping", "must lie in (0, 1]");
  check(!c.dmo.p_schedule.empty(), "dmo.p_schedule", "must not be empty");
  for (double p : c.dmo.p_schedule) check(p >= 1.0, "dmo.p_schedule", "penalties must be >= 1");
  check(c.dmo.max_iter >= 1, "dmo.max_iter", "must be >= 1");
  check(c.sbpto.inner_iter >= 1, "sbpto.inner_iter", "must be >= 1");
  check(c.sbpto.max_sweeps >= 1, "sbpto.max_sweeps", "must be >= 1");
  check(!c.sbpto.p_schedule.empty(), "sbpto.p_schedule", "must not be empty");
  for (double p : c.sbpto.p_schedule) check(p >= 1.0, "sbpto.p_schedule", "penalties must be >= 1");
  check(c.sbpto.eps_void > 0.0 && c.sbpto.eps_void < 1e-2, "sbpto.eps_void", "must lie in (0, 1e-2)");
  check(c.cfao.max_iter >= 1, "cfao.max_iter", "must be >= 1");
  check(c.cfao.penalty >= 1.0, "cfao.penalty", "must be >= 1");
  for (std::size_t k = 0; k < c.supports.size(); ++k) {
    const auto& s = c.supports[k];
    check(s.fix_x || s.fix_y, "supports[" + std::to_string(k) + "].fix", "fixes nothing");
  }
}

ProblemConfig load_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

ProblemConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str());
}

json to_json(const ProblemConfig& c) {
  json j;
  j["name"] = c.name;
  j["mode"] = to_string(c.mode);
  json mesh{{"nx", c.nx}, {"ny", c.ny}};
  if (!c.cutouts.empty()) {
    mesh["cutouts"] = json::array();
    for (const auto& r : c.cutouts) {
      mesh["cutouts"].push_back({{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}});
    }
  }
  j["mesh"] = mesh;
  if (c.material.engineering) {
    j["material"] = {{"Ex", c.material.Ex}, {"Ey", c.material.Ey}, {"Gxy", c.material.Gxy},
                     {"nu_xy", c.material.nu_xy}};
  } else {
    j["material"] = {{"D11", c.material.D11}, {"D12", c.material.D12}, {"D22", c.material.D22},
                     {"D33", c.material.D33}};
  }
  j["supports"] = json::array();
  for (const auto& s : c.supports) {
    const std::string fix = std::string(s.fix_x ? "x" : "") + (s.fix_y ? "y" : "");
    j["supports"].push_back({{"from", {s.x0, s.y0}}, {"to", {s.x1, s.y1}}, {"fix", fix}});
  }
  j["loads"] = json::array();
  for (const auto& l : c.loads) {
    j["loads"].push_back({{"at", {l.x, l.y}}, {"fx", l.fx}, {"fy", l.fy}});
  }
  j["volume_fraction"] = c.volume_fraction;
  j["r_min"] = c.r_min;
  j["R_c"] = c.R_c;
  j["candidates_deg"] = c.candidates_deg;
  j["initial_angle_deg"] = c.initial_angle_deg;
  j["eps"] = c.eps;
  j["eps0"] = c.eps0;
  j["eta"] = c.eta;
  j["lambda_thresh"] = c.lambda_thresh;
  j["h_target"] = c.h_target;
  j["solver"] = {{"move_limit", c.mma.move},   {"asyinit", c.mma.asyinit},
                 {"asyincr", c.mma.asyincr},   {"asydecr", c.mma.asydecr},
                 {"albefa", c.mma.albefa},     {"oc_damping", c.oc_damping}};
  j["dmo"] = {{"p_schedule", c.dmo.p_schedule},
              {"max_iter", c.dmo.max_iter},
              {"filter", opt::to_string(c.dmo.filter)}};
  j["sbpto"] = {{"inner_iter", c.sbpto.inner_iter},   {"max_sweeps", c.sbpto.max_sweeps},
                {"ordered_pairs", c.sbpto.ordered_pairs}, {"p_schedule", c.sbpto.p_schedule},
                {"eps_void", c.sbpto.eps_void},       {"filter", opt::to_string(c.sbpto.filter)},
                {"filter_angle_pairs", c.sbpto.filter_angle_pairs}};
  j["cfao"] = {{"max_iter", c.cfao.max_iter},
               {"penalty", c.cfao.penalty},
               {"update_rho", c.cfao.update_rho},
               {"normalize_by_density", c.cfao.normalize_by_density},
               {"exact_rho_filter_term", c.cfao.exact_rho_filter_term},
               {"filter", opt::to_string(c.cfao.filter)}};
  return j;
}

fem::Mesh make_mesh(const ProblemConfig& cfg) { return fem::build_mesh(cfg.nx, cfg.ny, cfg.cutouts); }

namespace {

std::string fmt_point(double x, double y) {
  std::ostringstream os;
  os << "(" << x << ", " << y << ")";
  return os.str();
}

}  // namespace

fem::BoundaryConditions make_boundary_conditions(const ProblemConfig& cfg, const fem::Mesh& mesh,
                                                 std::vector<std::string>* log) {
  fem::BoundaryConditions bc;
  for (std::size_t k = 0; k < cfg.supports.size(); ++k) {
    const auto& s = cfg.supports[k];
    std::vector<int> nodes;
    const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
    const double len2 = dx * dx + dy * dy;
    for (int node = 0; node < mesh.node_count(); ++node) {
      if (!mesh.node_used(node)) continue;
      const Eigen::Vector2d p = mesh.node_coords(node);
      double t = len2 > 0.0 ? ((p.x() - s.x0) * dx + (p.y() - s.y0) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = p.x() - (s.x0 + t * dx), ey = p.y() - (s.y0 + t * dy);
      if (ex * ex + ey * ey <= 1e-18) nodes.push_back(node);
    }
    if (nodes.empty()) {
      const int node = mesh.nearest_node(s.x0, s.y0);
      nodes.push_back(node);
      if (log) {
        const auto p = mesh.node_coords(node);
        log->push_back("support " + std::to_string(k) + " at " + fmt_point(s.x0, s.y0) +
                       " snapped to node " + std::to_string(node) + " " + fmt_point(p.x(), p.y()));
      }
    }
    for (int node : nodes) {
      if (s.fix_x) bc.fixed_dofs.push_back(fem::dof_of(node, fem::Axis::x));
      if (s.fix_y) bc.fixed_dofs.push_back(fem::dof_of(node, fem::Axis::y));
    }
  }
  bc.fixed_dofs = bc.normalized_fixed_dofs();
  for (std::size_t k = 0; k < cfg.loads.size(); ++k) {
    const auto& l = cfg.loads[k];
    const int node = mesh.nearest_node(l.x, l.y);
    const auto p = mesh.node_coords(node);
    if (log && (std::abs(p.x() - l.x) > 1e-9 || std::abs(p.y() - l.y) > 1e-9)) {
      log->push_back("load " + std::to_string(k) + " at " + fmt_point(l.x, l.y) +
                     " snapped to node " + std::to_string(node) + " " + fmt_point(p.x(), p.y()));
    }
    if (l.fx != 0.0) bc.point_loads.push_back({node, fem::Axis::x, l.fx});
    if (l.fy != 0.0) bc.point_loads.push_back({node, fem::Axis::y, l.fy});
  }
  bc.validate(mesh);
  return bc;
}

}  // namespace dsco::config
