#pragma once

#include <exception>
#include <string>
#include <vector>

#include "stirflow/config.hpp"

namespace stirflow {

struct RunOutcome {
  nlohmann::json report;
  std::vector<std::string> files;  // written paths, report last
};

// Geometry checks that need no solve (curve overlaps, anchors, slit layout).
// Throws ConfigError.
void check_config(const RunConfig& cfg);

// Runs the configured pipeline and writes grid files and report.json into
// cfg.out_dir. On failure every file written so far is removed and the error
// is rethrown.
RunOutcome run(const RunConfig& cfg);

// 0 success, 2 config error, 3 solver non-convergence, 4 preimage
// non-convergence, 1 anything else.
int exit_code_for(const std::exception& e);

// One matrix per file: a header line with the grid metadata, then ny rows of
// nx comma-separated values (row k at y = y_min + k dy); masked cells are nan.
void write_grid(const std::string& path, const std::string& name, const GridSpec& spec,
                const RealVec& values, const std::string& space = "physical");

}  // namespace stirflow
