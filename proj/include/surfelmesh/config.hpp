#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "surfelmesh/association.hpp"
#include "surfelmesh/denoise.hpp"
#include "surfelmesh/fusion.hpp"
#include "surfelmesh/mesher.hpp"
#include "surfelmesh/preprocess.hpp"
#include "surfelmesh/remesher.hpp"

namespace sm {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class MeshingMode { kAsync, kLockstep };

struct PipelineConfig {
  PreprocessConfig preprocess;
  AssocConfig association;
  int blend_iterations = 10;
  FusionConfig fusion;
  DenoiseConfig denoise;
  MeshingConfig meshing;
  RemeshConfig remesh;
  MeshingMode meshing_mode = MeshingMode::kAsync;
  std::uint64_t seed = 0;
  std::string timing_log;
  bool strip_free = false;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;
};

// Sets one flat key such as "preprocess.max_depth". Unknown keys and
// unparsable values throw ConfigError.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();
// Reads key=value lines ('#' comments).
void load_config_file(PipelineConfig& config, const std::string& path);

}  // namespace sm
