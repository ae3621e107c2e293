// Command-line front end: run, benchmark, sweep, validate.

#include "dsco/benchmarks.hpp"
#include "dsco/config.hpp"
#include "dsco/export.hpp"
#include "dsco/pipeline.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace {

using namespace dsco;

void print_summary(const pipeline::RunResult& r, std::ostream& os) {
  const auto& s = r.summary;
  os << r.config.name << ": compliance " << io::format_number(s.compliance) << ", iterations "
     << s.iterations << " (DMO " << s.dmo_iterations << ", SBPTO " << s.sbpto_iterations
     << ", CFAO " << s.cfao_iterations << ")";
  if (s.h_eta) os << ", h_eta " << io::format_number(*s.h_eta);
  os << ", volume " << io::format_number(s.volume_fraction) << ", " << s.wall_seconds << " s\n";
  for (const auto& w : s.warnings) os << "  warning: " << w << '\n';
}

std::string parse_cases(const std::string& spec, const std::string& available) {
  if (spec.empty() || spec == "all") return available;
  std::string out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.size() == 4 && item.substr(1, 2) == "..") {
      if (item[3] < item[0]) throw std::invalid_argument("empty case range '" + item + "'");
      for (char c = item[0]; c <= item[3]; ++c) out += c;
    } else if (item.size() == 1) {
      out += item[0];
    } else {
      throw std::invalid_argument("bad case list entry '" + item + "'");
    }
  }
  for (char c : out) {
    if (available.find(c) == std::string::npos) {
      throw std::invalid_argument(std::string("case '") + c + "' is not defined (cases: " +
                                  available + ")");
    }
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& out) {
  const auto cfg = config::load_config_file(config_path);
  const auto r = pipeline::run_dsco(cfg, std::filesystem::path(out));
  print_summary(r, std::cout);
  return 0;
}

int cmd_benchmark(const std::string& name, const std::string& letter, const std::string& out) {
  if (letter.size() != 1) throw std::invalid_argument("--case takes a single letter");
  const auto b = benchmarks::benchmark(name, letter[0]);
  const auto r = pipeline::run_dsco(b.config, std::filesystem::path(out));
  print_summary(r, std::cout);
  return 0;
}

int cmd_sweep(const std::string& name, const std::string& cases_spec, const std::string& out_arg) {
  const std::string cases = parse_cases(cases_spec, benchmarks::case_letters(name));
  const std::filesystem::path out = out_arg.empty() ? "sweep_" + name : out_arg;
  struct Row {
    char letter = 'a';
    std::string mode;
    double compliance = 0.0;
    int iterations = 0;
    std::string error;
  };
  std::vector<Row> rows(cases.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < cases.size(); k = next++) {
      Row& row = rows[k];
      row.letter = cases[k];
      try {
        const auto b = benchmarks::benchmark(name, row.letter);
        row.mode = config::to_string(b.config.mode);
        const auto r = pipeline::run_dsco(b.config, out / std::string(1, row.letter));
        row.compliance = r.summary.compliance;
        row.iterations = r.summary.iterations;
        std::lock_guard lock(io_mutex);
        print_summary(r, std::cerr);
      } catch (const std::exception& e) {
        row.error = e.what();
        std::lock_guard lock(io_mutex);
        std::cerr << name << " case " << row.letter << " failed: " << e.what() << '\n';
      }
    }
  };
  const int threads = std::max(1, std::min<int>(pipeline::thread_count_from_env(),
                                                static_cast<int>(cases.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "case,mode,compliance,iterations\n";
  bool failed = false;
  for (const auto& row : rows) {
    if (!row.error.empty()) {
      failed = true;
      continue;
    }
    csv << row.letter << ',' << row.mode << ',' << io::format_number(row.compliance) << ','
        << row.iterations << '\n';
  }
  std::filesystem::create_directories(out);
  io::write_file(out / "sweep.csv", csv.str());
  std::cout << csv.str();
  return failed ? 1 : 0;
}

int cmd_validate(const std::string& config_path) {
  const auto cfg = config::load_config_file(config_path);
  std::cout << config::to_json(cfg).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-stiffness composite topology optimization (DMO, SBPTO, CFAO)", "dsco"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", name, letter, cases, sweep_out;
  auto* run = app.add_subcommand("run", "Run a problem described by a JSON config");
  run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* bench = app.add_subcommand("benchmark", "Run one benchmark case");
  bench->add_option("name", name, "mbb | lshape | cantilever | cantilever_multi")->required();
  bench->add_option("--case", letter, "Case letter")->required();
  bench->add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Run several cases of a benchmark and tabulate them");
  sweep->add_option("name", name, "Benchmark name")->required();
  sweep->add_option("--cases", cases, "Cases, e.g. a..n or a,b,h (default: all)");
  sweep->add_option("--out", sweep_out, "Output directory (default: sweep_<name>)");

  auto* validate = app.add_subcommand("validate", "Check a config and print its normalized form");
  validate->add_option("--config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir);
    if (*bench) return cmd_benchmark(name, letter, out_dir);
    if (*sweep) return cmd_sweep(name, cases, sweep_out);
    if (*validate) return cmd_validate(config_path);
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
