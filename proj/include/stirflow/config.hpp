#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stirflow/field.hpp"
#include "stirflow/slitmap.hpp"

namespace stirflow {

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class RunMode { stirrers, slit_stirrers, slit_map_only };

struct FieldConfig {
  GridSpec grid;
  bool psi = true;
  bool velocity = false;
  bool potential = false;
};

struct RunConfig {
  RunMode mode = RunMode::stirrers;
  std::uint64_t seed = 0;

  StirrerProblem problem;  // stirrers mode
  std::vector<SlitSpec> slits;  // slit modes
  CanonicalType canonical = CanonicalType::plane_slits;

  int n = 1024;
  int grading_p = 3;
  SolverOptions solver;
  PreimageOptions slit;  // slit.n mirrors n

  std::optional<FieldConfig> field;
  std::string out_dir = ".";

  // Resolved configuration: defaults filled in, random draws substituted.
  nlohmann::json echo;
};

// Parses the JSON configuration. Errors name the offending key path.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

const char* mode_name(RunMode m);

}  // namespace stirflow
