#include "surfelmesh/config.hpp"

#include <fstream>
#include <functional>

namespace sm {

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for " + key + ": " + v);
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for " + key + ": " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError("invalid boolean for " + key + ": " + v);
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto dbl = [&](const std::string& k, auto member) {
      t[k] = [member](PipelineConfig& c, const std::string& key, const std::string& v) {
        member(c) = to_double(key, v);
      };
    };
    auto integer = [&](const std::string& k, auto member) {
      t[k] = [member](PipelineConfig& c, const std::string& key, const std::string& v) {
        member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_int(key, v));
      };
    };
    auto boolean = [&](const std::string& k, auto member) {
      t[k] = [member](PipelineConfig& c, const std::string& key, const std::string& v) {
        member(c) = to_bool(key, v);
      };
    };
    dbl("preprocess.max_depth", [](PipelineConfig& c) -> double& { return c.preprocess.max_depth; });
    dbl("preprocess.bilateral_sigma_xy", [](PipelineConfig& c) -> double& { return c.preprocess.bilateral_sigma_xy; });
    dbl("preprocess.bilateral_sigma_z_factor",
        [](PipelineConfig& c) -> double& { return c.preprocess.bilateral_sigma_z_factor; });
    integer("preprocess.temporal_window", [](PipelineConfig& c) -> int& { return c.preprocess.temporal_window; });
    dbl("preprocess.temporal_tolerance", [](PipelineConfig& c) -> double& { return c.preprocess.temporal_tolerance; });
    integer("preprocess.erosion_px", [](PipelineConfig& c) -> int& { return c.preprocess.erosion_px; });
    dbl("preprocess.max_normal_view_angle",
        [](PipelineConfig& c) -> double& { return c.preprocess.max_normal_view_angle; });
    boolean("preprocess.enable_cutoff", [](PipelineConfig& c) -> bool& { return c.preprocess.enable_cutoff; });
    boolean("preprocess.enable_bilateral", [](PipelineConfig& c) -> bool& { return c.preprocess.enable_bilateral; });
    boolean("preprocess.enable_temporal", [](PipelineConfig& c) -> bool& { return c.preprocess.enable_temporal; });
    boolean("preprocess.enable_erosion", [](PipelineConfig& c) -> bool& { return c.preprocess.enable_erosion; });
    dbl("association.gamma", [](PipelineConfig& c) -> double& { return c.association.gamma; });
    dbl("association.occlusion_normal_angle",
        [](PipelineConfig& c) -> double& { return c.association.occlusion_normal_angle; });
    integer("association.active_window",
            [](PipelineConfig& c) -> std::int64_t& { return c.association.active_window; });
    integer("blend.iterations", [](PipelineConfig& c) -> int& { return c.blend_iterations; });
    dbl("fusion.sigma_max", [](PipelineConfig& c) -> double& { return c.fusion.sigma_max; });
    dbl("fusion.merge_dist_factor", [](PipelineConfig& c) -> double& { return c.fusion.merge_dist_factor; });
    dbl("fusion.merge_normal_angle", [](PipelineConfig& c) -> double& { return c.fusion.merge_normal_angle; });
    dbl("denoise.w_reg", [](PipelineConfig& c) -> double& { return c.denoise.w_reg; });
    integer("denoise.active_window", [](PipelineConfig& c) -> std::int64_t& { return c.denoise.active_window; });
    dbl("denoise.step_scale", [](PipelineConfig& c) -> double& { return c.denoise.step_scale; });
    integer("denoise.deform_smooth_iters", [](PipelineConfig& c) -> int& { return c.denoise.deform_smooth_iters; });
    dbl("denoise.neighbor_reject_factor",
        [](PipelineConfig& c) -> double& { return c.denoise.neighbor_reject_factor; });
    dbl("meshing.normal_compat_angle", [](PipelineConfig& c) -> double& { return c.meshing.normal_compat_angle; });
    dbl("meshing.narrow_angle", [](PipelineConfig& c) -> double& { return c.meshing.narrow_angle; });
    dbl("meshing.gap_angle", [](PipelineConfig& c) -> double& { return c.meshing.gap_angle; });
    dbl("meshing.boundary_extend_factor",
        [](PipelineConfig& c) -> double& { return c.meshing.boundary_extend_factor; });
    dbl("remesh.stretch_factor", [](PipelineConfig& c) -> double& { return c.remesh.stretch_factor; });
    t["pipeline.mode"] = [](PipelineConfig& c, const std::string& key, const std::string& v) {
      if (v == "async")
        c.meshing_mode = MeshingMode::kAsync;
      else if (v == "lockstep")
        c.meshing_mode = MeshingMode::kLockstep;
      else
        throw ConfigError("invalid value for " + key + ": " + v);
    };
    t["pipeline.seed"] = [](PipelineConfig& c, const std::string& key, const std::string& v) {
      c.seed = static_cast<std::uint64_t>(to_int(key, v));
    };
    t["pipeline.timing_log"] = [](PipelineConfig& c, const std::string&, const std::string& v) { c.timing_log = v; };
    boolean("pipeline.strip_free", [](PipelineConfig& c) -> bool& { return c.strip_free; });
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void PipelineConfig::validate() const {
  if (!preprocess.valid()) throw ConfigError("invalid preprocess configuration");
  if (!association.valid()) throw ConfigError("invalid association configuration");
  if (blend_iterations < 1) throw ConfigError("blend.iterations must be >= 1");
  if (!fusion.valid()) throw ConfigError("invalid fusion configuration");
  if (!denoise.valid()) throw ConfigError("invalid denoise configuration");
  if (!meshing.valid()) throw ConfigError("invalid meshing configuration");
  if (!remesh.valid()) throw ConfigError("invalid remesh configuration");
}

void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value) {
  auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown configuration key: " + key);
  it->second(config, key, trim(value));
  // Keep the remesher's normal gate in step with the mesher's.
  config.remesh.normal_compat_angle = config.meshing.normal_compat_angle;
  config.remesh.search_extend_factor = config.meshing.boundary_extend_factor;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : setters()) keys.push_back(k);
  return keys;
}

void load_config_file(PipelineConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

}  // namespace sm
