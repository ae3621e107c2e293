#pragma once

// The four benchmark problems and their case letters.

#include "dsco/config.hpp"

#include <string>
#include <vector>

namespace dsco::benchmarks {

struct BenchmarkCase {
  std::string name;
  char letter = 'a';
  config::ProblemConfig config;
};

/// Names accepted by benchmark(): mbb, lshape, cantilever, cantilever_multi.
const std::vector<std::string>& names();

/// Case letters defined for a benchmark, in order.
std::string case_letters(const std::string& name);

/// Fully resolved configuration. Throws std::invalid_argument for an unknown
/// name or case letter.
BenchmarkCase benchmark(const std::string& name, char letter);

}  // namespace dsco::benchmarks
