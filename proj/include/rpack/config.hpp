#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rpack/functional.hpp"
#include "rpack/montecarlo.hpp"

namespace rpack {

/// Everything a CLI run needs, parsed from a JSON tree with unknown keys rejected.
struct RunConfig {
  nlohmann::json tree;  ///< the validated input, used for hashing
  std::string hash;

  ModelSpec model;
  TestFunction v = TestFunction::one();
  RunOptions run;
  std::string output;

  // generating functional
  int order = 12;
  CubatureSpec cubature;

  // checks
  OdeOptions ode;
  double ode_t = 0.5;
  std::vector<double> eps{0.01, 0.02, 0.05};
  PalmCheckOptions palm;
  double length = 1000.0;
  double t_saturation = 50.0;
  bool fill_gaps = true;
  BlockedOptions blocked;

  // moments
  int moment_order = 1;
  FactorialGrid grid;
  bool moment_series = false;

  // simulate
  std::string fixture;  ///< "", "line" or "pentagon"
  int line_n = 3;
  int levels = 2;
};

/// FNV-1a (64 bit) of the canonical dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& tree);

/// Validates and converts. Throws InvalidArgument on unknown keys or bad values.
RunConfig parse_config(const nlohmann::json& tree);

/// Sets a dotted key ("gf.order") to a value parsed as JSON, or as a string if that fails.
void set_config_key(nlohmann::json& tree, const std::string& dotted, const std::string& value);

nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const GfEstimate& e);
nlohmann::json to_json(const CheckReport& r);

}  // namespace rpack
