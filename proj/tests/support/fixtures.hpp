#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "schemeplan/schemeplan.hpp"

namespace fixtures {

inline std::string sample_path(const std::string& name) { return std::string(SCHEMEPLAN_SAMPLE_DIR) + "/" + name; }
inline std::string golden_path(const std::string& name) { return std::string(SCHEMEPLAN_GOLDEN_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline schemeplan::SchemePlan load(const std::string& name) { return schemeplan::parse_plan(slurp(sample_path(name))); }

inline schemeplan::SchemePlan station() { return load("simple_station.plan"); }

// Track-only benchmark plan with generated routes and tables.
inline schemeplan::SchemePlan benchmark(const std::string& name) { return schemeplan::generate_tables(load(name)); }

}  // namespace fixtures
