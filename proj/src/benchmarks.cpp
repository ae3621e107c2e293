#include "dsco/benchmarks.hpp"

#include <map>
#include <stdexcept>

namespace dsco::benchmarks {

namespace {

using config::Mode;
using config::ProblemConfig;

// Letter -> angle list. A single angle means a CFAO-only run started from that
// uniform orientation.
using CaseTable = std::map<char, std::vector<double>>;

const CaseTable& mbb_cases() {
  static const CaseTable t{
      {'a', {0}},
      {'b', {90}},
      {'c', {45}},
      {'d', {-45}},
      {'e', {0, 90}},
      {'f', {0, -30, 30, 90}},
      {'g', {0, -60, 60, 90}},
      {'h', {0, -45, 45, 90}},
      {'i', {0, -45, 45, 90, -30, 30}},
      {'j', {0, -45, 45, 90, -60, 60}},
      {'k', {0, -45, 45, 90, -30, 60}},
      {'l', {0, -45, 45, 90, 30, 60}},
      {'m', {0, -45, 45, 90, 30, -60}},
      {'n', {0, -45, 45, 90, -30, -60}},
  };
  return t;
}

const CaseTable& lshape_cases() {
  static const CaseTable t{
      {'a', {0}},
      {'b', {90}},
      {'c', {45}},
      {'d', {-45}},
      {'e', {0, 90}},
      {'f', {0, -30, 30, 90}},
      {'g', {0, -60, 60, 90}},
      {'h', {0, -45, 45, 90}},
      {'i', {0, -45, 45, 90, -30, 30}},
      {'j', {0, -45, 45, 90, -60, 60}},
  };
  return t;
}

const CaseTable& multi_cases() {
  static const CaseTable t{
      {'a', {0}},
      {'b', {90}},
      {'c', {45}},
      {'d', {-45}},
      {'e', {0, 90}},
      {'f', {0, -45, 45, 90}},
      {'g', {0, -30, 30, 90}},
      {'h', {0, -60, 60, 90}},
  };
  return t;
}

const CaseTable& table(const std::string& name) {
  if (name == "mbb") return mbb_cases();
  if (name == "lshape" || name == "cantilever") return lshape_cases();
  if (name == "cantilever_multi") return multi_cases();
  throw std::invalid_argument("unknown benchmark '" + name +
                              "' (expected mbb, lshape, cantilever or cantilever_multi)");
}

config::MaterialSpec direct_material() {
  config::MaterialSpec m;
  m.D11 = 0.5448;
  m.D12 = 0.0383;
  m.D22 = 0.1277;
  m.D33 = 0.0456;
  return m;
}

config::MaterialSpec engineering_material() {
  config::MaterialSpec m;
  m.engineering = true;
  m.Ex = 2.0;
  m.Ey = 1.0;
  m.Gxy = 0.25;
  m.nu_xy = 0.3;
  return m;
}

ProblemConfig mbb() {
  ProblemConfig c;
  c.nx = 120;
  c.ny = 40;
  c.material = direct_material();
  c.volume_fraction = 0.5;
  // Both bottom corners pinned.
  c.supports = {{0, 0, 0, 0, true, true}, {120, 0, 120, 0, true, true}};
  c.loads = {{30, 40, 0, -1}, {90, 40, 0, -1}, {60, 0, 0, -2}};
  return c;
}

ProblemConfig lshape() {
  ProblemConfig c;
  c.nx = 100;
  c.ny = 100;
  c.cutouts = {{50, 50, 100, 100}};
  c.material = direct_material();
  c.volume_fraction = 0.6;
  c.supports = {{0, 100, 50, 100, true, true}};
  c.loads = {{100, 50, 0, -1}};
  return c;
}

ProblemConfig cantilever() {
  ProblemConfig c;
  c.nx = 50;
  c.ny = 40;
  c.material = engineering_material();
  c.volume_fraction = 0.5;
  c.supports = {{0, 0, 0, 40, true, true}};
  c.loads = {{50, 20, 0, -1}};
  return c;
}

ProblemConfig cantilever_multi() {
  ProblemConfig c;
  c.nx = 60;
  c.ny = 40;
  c.material = engineering_material();
  c.volume_fraction = 0.5;
  c.supports = {{0, 0, 0, 40, true, true}};
  c.loads = {{60, 20, 0, -1}, {30, 0, 0, -1}};
  return c;
}

}  // namespace

const std::vector<std::string>& names() {
  static const std::vector<std::string> n{"mbb", "lshape", "cantilever", "cantilever_multi"};
  return n;
}

std::string case_letters(const std::string& name) {
  std::string out;
  for (const auto& [letter, angles] : table(name)) out += letter;
  return out;
}

BenchmarkCase benchmark(const std::string& name, char letter) {
  const auto& t = table(name);
  const auto it = t.find(letter);
  if (it == t.end()) {
    throw std::invalid_argument("benchmark '" + name + "' has no case '" + std::string(1, letter) +
                                "' (cases: " + case_letters(name) + ")");
  }
  BenchmarkCase b;
  b.name = name;
  b.letter = letter;
  if (name == "mbb") b.config = mbb();
  else if (name == "lshape") b.config = lshape();
  else if (name == "cantilever") b.config = cantilever();
  else b.config = cantilever_multi();
  b.config.name = name + "_" + std::string(1, letter);
  if (it->second.size() == 1) {
    b.config.mode = Mode::cfao_only;
    b.config.initial_angle_deg = it->second.front();
  } else {
    b.config.mode = Mode::dsco;
    b.config.candidates_deg = it->second;
  }
  config::validate(b.config);
  return b;
}

}  // namespace dsco::benchmarks
