#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fovstream/experiment.hpp"
#include "fovstream/gazesim.hpp"
#include "fovstream/geometry.hpp"
#include "fovstream/harness.hpp"
#include "fovstream/pipeline.hpp"
#include "fovstream/transport.hpp"
#include "fovstream/video.hpp"

namespace fovstream {

// A config value that is missing its required shape. `path` is a JSON
// pointer to the offending value, e.g. "/latency/refresh_hz".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct RunConfig {
  std::uint64_t seed = 1;
  ClockMode mode = ClockMode::virtual_time;
  ViewingGeometry geometry = reference_geometry(960, 540);

  // "lower-bound" or "fvideo"; individual stages may then be overridden.
  std::string latency_profile = "fvideo";
  LatencyModel latency = LatencyModel::fvideo();

  double q = 8.0;
  // Empty selects desk_ladder for the geometry at `q`.
  std::vector<FoveationConfig> ladder;
  int ladder_index = 0;
  double deadband_deg = 0.25;

  ScenePreset scene = ScenePreset::dialogue;
  double duration_s = 6.0;

  // A y4m file, or else a synthetic clip sized to the geometry.
  std::optional<std::filesystem::path> video_path;
  SyntheticSpec synthetic;

  ExperimentConfig experiment;
  MtpOptions measure;

  // The ladder after defaults are applied.
  std::vector<FoveationConfig> resolved_ladder() const;
  // Overrides that must reach every nested block.
  void set_seed(std::uint64_t s);
  void set_mode(ClockMode m);
};

ClockMode clock_mode_from_name(const std::string& name);

// Unknown keys and wrong types throw ConfigError.
RunConfig parse_run_config(const std::string& json_text);
// Throws InputError when the file cannot be read, ConfigError when it is invalid.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace fovstream
