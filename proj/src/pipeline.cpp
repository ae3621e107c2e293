#include "dsco/pipeline.hpp"

#include "dsco/dmo.hpp"
#include "dsco/export.hpp"

#include <chrono>
#include <cstdlib>
#include <sstream>

namespace dsco::pipeline {

namespace {

void append(std::vector<IterationRecord>& dst, const std::vector<IterationRecord>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

void append(std::vector<std::string>& dst, const std::vector<std::string>& src,
            const std::string& prefix = {}) {
  for (const auto& s : src) dst.push_back(prefix + s);
}

std::string angle_label(double deg) { return io::format_number(deg); }

template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

int thread_count_from_env() {
  const char* v = std::getenv("DSCO_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min<long>(n, 256));
}

RunResult run_dsco(const config::ProblemConfig& cfg,
                   const std::optional<std::filesystem::path>& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  config::validate(cfg);
  RunResult run;
  run.config = cfg;

  auto flush_partial = [&]() {
    if (!out_dir) return;
    std::error_code ec;
    std::filesystem::create_directories(*out_dir, ec);
    std::ostringstream os;
    io::write_convergence_csv(os, run.history);
    try {
      io::write_file(*out_dir / "convergence.csv", os.str());
    } catch (const std::exception&) {
    }
  };

  try {
    run.mesh = config::make_mesh(cfg);
    const auto bc = in_stage("setup", [&] {
      return config::make_boundary_conditions(cfg, run.mesh, &run.log);
    });
    const auto D_base = cfg.material.matrix();
    fem::StiffnessSolver solver(run.mesh, bc);
    const int N = run.mesh.element_count();

    cfao::CfaoDesign start;
    if (cfg.mode == config::Mode::dsco) {
      const material::CandidateAngleSet candidates(cfg.candidates_deg);

      dmo::DmoOptions dopt;
      dopt.volume_fraction = cfg.volume_fraction;
      dopt.p_schedule = cfg.dmo.p_schedule;
      dopt.eps = cfg.eps;
      dopt.eps0 = cfg.eps0;
      dopt.eta = cfg.eta;
      dopt.max_iter = cfg.dmo.max_iter;
      dopt.r_min = cfg.r_min;
      dopt.filter = cfg.dmo.filter;
      dopt.mma = cfg.mma;
      const auto dmo_res = in_stage("DMO", [&] { return dmo::run_dmo(dopt, solver, candidates, D_base); });
      const auto& dd = dmo_res.diagnostics;
      append(run.history, dd.records);
      append(run.summary.warnings, dd.warnings);
      run.summary.dmo_iterations = dd.iterations();
      run.endpoints.dmo_compliance = dd.compliance.back();
      run.endpoints.dmo_h_eta = dd.h_eta.back();

      sbpto::SbptoOptions sopt;
      sopt.volume_fraction = cfg.volume_fraction;
      sopt.lambda_thresh = cfg.lambda_thresh;
      sopt.eta = cfg.eta;
      sopt.h_target = cfg.h_target;
      sopt.inner_iter = cfg.sbpto.inner_iter;
      sopt.max_sweeps = cfg.sbpto.max_sweeps;
      sopt.ordered_pairs = cfg.sbpto.ordered_pairs;
      sopt.p_schedule = cfg.sbpto.p_schedule;
      sopt.eps_void = cfg.sbpto.eps_void;
      sopt.r_min = cfg.r_min;
      sopt.filter = cfg.sbpto.filter;
      sopt.filter_angle_pairs = cfg.sbpto.filter_angle_pairs;
      sopt.oc.move = cfg.mma.move;
      sopt.oc.damping = cfg.oc_damping;
      auto sb_init = sbpto::init_from_dmo(dmo_res.chi, &run.log);
      const auto sb = in_stage("SBPTO", [&] {
        return sbpto::run_sbpto(std::move(sb_init), sopt, solver, candidates, D_base);
      });
      const auto& sd = sb.diagnostics;
      append(run.history, sd.records);
      append(run.summary.warnings, sd.warnings);
      append(run.log, sd.labeling_log, "labeling: ");
      if (!sd.labeling_log.empty()) {
        run.summary.warnings.push_back(std::to_string(sd.labeling_log.size()) +
                                       " mixed elements were resolved by argmax labeling");
      }
      run.summary.sbpto_iterations = sd.iterations();
      run.endpoints.sbpto_compliance = sd.compliance.back();
      run.endpoints.sbpto_h_eta = sbpto::angle_convergence(sb.design, cfg.eta);
      run.summary.h_eta = run.endpoints.sbpto_h_eta;
      run.sbpto_labels = sb.labels;
      run.labels.resize(static_cast<std::size_t>(N));
      for (int e = 0; e < N; ++e) {
        const int lab = sb.labels[static_cast<std::size_t>(e)];
        run.labels[static_cast<std::size_t>(e)] =
            lab == sb.design.void_phase()
                ? "void"
                : angle_label(candidates.degrees()[static_cast<std::size_t>(lab)]);
      }
      start = cfao::init_from_sbpto(sb.design.alpha, candidates);
      run.sbpto_design = sb.design;
    } else {
      start = cfao::uniform_design(N, cfg.volume_fraction, material::deg_to_rad(cfg.initial_angle_deg));
    }

    cfao::CfaoOptions copt;
    copt.volume_fraction = cfg.volume_fraction;
    copt.max_iter = cfg.cfao.max_iter;
    copt.eps0 = cfg.eps0;
    copt.r_min = cfg.r_min;
    copt.R_c = cfg.R_c;
    copt.update_rho = cfg.cfao.update_rho;
    copt.rho_filter = cfg.cfao.filter;
    copt.mma = cfg.mma;
    copt.model.D_base = D_base;
    copt.model.penalty = cfg.cfao.penalty;
    copt.model.eps = cfg.eps;
    copt.model.filter.normalize_by_density = cfg.cfao.normalize_by_density;
    copt.model.exact_rho_filter_term = cfg.cfao.exact_rho_filter_term;
    const auto cf = in_stage("CFAO", [&] { return cfao::run_cfao(start, copt, solver); });
    const auto& cd = cf.diagnostics;
    append(run.history, cd.records);
    append(run.summary.warnings, cd.warnings);
    run.summary.cfao_iterations = cd.iterations();
    run.endpoints.cfao_start_compliance = cd.compliance.front();
    run.endpoints.cfao_best_compliance = cf.compliance;

    run.design = cf.design;
    run.filtered_theta = cf.filtered_theta;
    if (cfg.mode == config::Mode::cfao_only) {
      run.labels.resize(static_cast<std::size_t>(N));
      for (int e = 0; e < N; ++e) {
        run.labels[static_cast<std::size_t>(e)] = run.design.rho(e) >= 0.5 ? "solid" : "void";
      }
    }
    run.summary.compliance = cf.compliance;
    run.summary.iterations =
        run.summary.dmo_iterations + run.summary.sbpto_iterations + run.summary.cfao_iterations;
    run.summary.volume_fraction = run.design.rho.sum() / static_cast<double>(N);
  } catch (...) {
    flush_partial();
    throw;
  }

  run.summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (out_dir) write_artifacts(run, *out_dir);
  return run;
}

nlohmann::json summary_json(const RunResult& r) {
  nlohmann::json j;
  j["name"] = r.config.name;
  j["mode"] = config::to_string(r.config.mode);
  j["compliance"] = r.summary.compliance;
  j["iterations"] = r.summary.iterations;
  j["stages"] = {{"dmo", r.summary.dmo_iterations},
                 {"sbpto", r.summary.sbpto_iterations},
                 {"cfao", r.summary.cfao_iterations}};
  j["h_eta"] = r.summary.h_eta ? nlohmann::json(*r.summary.h_eta) : nlohmann::json(nullptr);
  j["volume_fraction"] = r.summary.volume_fraction;
  j["warnings"] = r.summary.warnings;
  j["wall_seconds"] = r.summary.wall_seconds;
  return j;
}

void write_artifacts(const RunResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  io::DesignTable table{r.design.rho, r.design.theta, r.filtered_theta, r.labels};
  {
    std::ostringstream os;
    io::write_convergence_csv(os, r.history);
    io::write_file(dir / "convergence.csv", os.str());
  }
  {
    std::ostringstream os;
    io::write_design_csv(os, r.mesh, table);
    io::write_file(dir / "design.csv", os.str());
  }
  {
    std::ostringstream os;
    io::write_layout_svg(os, r.mesh, table);
    io::write_file(dir / "layout.svg", os.str());
  }
  io::write_file(dir / "summary.json", summary_json(r).dump(2) + "\n");
}

}  // namespace dsco::pipeline
