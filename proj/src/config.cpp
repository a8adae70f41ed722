#include "fovstream/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fovstream {
namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were consumed so that the
// rest can be rejected as unknown.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) const { return j_.at(key); }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_number()) throw ConfigError(at(key), "expected a number");
    out = j_.at(key).get<double>();
  }
  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_number_integer()) throw ConfigError(at(key), "expected an integer");
    out = j_.at(key).get<int>();
  }
  void u64(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_number_unsigned()) throw ConfigError(at(key), "expected a non-negative integer");
    out = j_.at(key).get<std::uint64_t>();
  }
  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) throw ConfigError(at(key), "expected a string");
    out = j_.at(key).get<std::string>();
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs `fn`, re-throwing std::invalid_argument from domain validation as a
// ConfigError at `path`.
template <typename Fn>
void checked(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

ScenePreset scene_at(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a scene preset name");
  ScenePreset s{};
  checked(path, [&] { s = scene_preset_from_name(j.get<std::string>()); });
  return s;
}

void parse_geometry(const json& j, RunConfig& cfg) {
  Obj o(j, "/geometry");
  ViewingGeometry& g = cfg.geometry;
  o.integer("width_px", g.width_px);
  o.integer("height_px", g.height_px);
  o.number("width_cm", g.width_cm);
  o.number("height_cm", g.height_cm);
  o.number("distance_cm", g.distance_cm);
  o.finish();
  checked("/geometry", [&] { g.validate(); });
}

void parse_latency(const json& j, RunConfig& cfg) {
  Obj o(j, "/latency");
  o.string("profile", cfg.latency_profile);
  if (cfg.latency_profile == "fvideo") {
    cfg.latency = LatencyModel::fvideo();
  } else if (cfg.latency_profile == "lower-bound") {
    cfg.latency = LatencyModel::lower_bound();
  } else {
    throw ConfigError("/latency/profile", "expected \"lower-bound\" or \"fvideo\"");
  }
  LatencyModel& m = cfg.latency;
  o.number("tracker_mean_us", m.tracker.mean_us);
  o.number("tracker_jitter_us", m.tracker.jitter_us);
  o.number("uplink_us", m.uplink_us);
  o.number("encode_us", m.encode_us);
  o.number("downlink_us", m.downlink_us);
  o.number("decode_us", m.decode_us);
  o.number("display_input_us", m.display_input_us);
  o.number("refresh_hz", m.refresh_hz);
  double artificial_ms = m.artificial_us / 1000.0;
  o.number("artificial_ms", artificial_ms);
  m.artificial_us = artificial_ms * 1000.0;
  o.finish();
  checked("/latency", [&] { m.validate(); });
}

void parse_ladder(const json& j, RunConfig& cfg) {
  Obj o(j, "/ladder");
  o.integer("index", cfg.ladder_index);
  o.number("deadband_deg", cfg.deadband_deg);
  if (o.has("rungs")) {
    const json& rungs = o.raw("rungs");
    if (!rungs.is_array()) throw ConfigError(o.at("rungs"), "expected an array");
    for (std::size_t i = 0; i < rungs.size(); ++i) {
      const std::string path = o.at("rungs") + "/" + std::to_string(i);
      Obj r(rungs[i], path);
      FoveationConfig f;
      double q_bg = cfg.q, q_fg = cfg.q;
      r.integer("bg_width", f.bg_width);
      r.integer("bg_height", f.bg_height);
      r.integer("fg_size", f.fg_size);
      r.number("q_bg", q_bg);
      r.number("q_fg", q_fg);
      r.number("blend_sigma_px", f.blend_sigma_px);
      r.finish();
      checked(path, [&] {
        f.q_bg = Quantizer::from_step(q_bg);
        f.q_fg = Quantizer::from_step(q_fg);
      });
      cfg.ladder.push_back(f);
    }
  }
  o.finish();
  if (!(cfg.deadband_deg >= 0.0)) throw ConfigError("/ladder/deadband_deg", "must be >= 0");
}

void parse_video(const json& j, RunConfig& cfg) {
  Obj o(j, "/video");
  if (o.has("y4m")) {
    if (!o.raw("y4m").is_string()) throw ConfigError("/video/y4m", "expected a path");
    cfg.video_path = o.raw("y4m").get<std::string>();
  }
  if (o.has("synthetic")) {
    Obj s(o.raw("synthetic"), "/video/synthetic");
    SyntheticSpec& v = cfg.synthetic;
    s.string("kind", v.kind);
    s.number("fps", v.fps);
    s.integer("frames", v.frames);
    s.number("grain", v.grain);
    s.integer("patch_amplitude", v.patch_amplitude);
    s.finish();
    if (v.kind != "moving-checker" && v.kind != "scrolling-text" && v.kind != "gradient-noise") {
      throw ConfigError("/video/synthetic/kind", "unknown synthetic kind '" + v.kind + "'");
    }
    if (!(v.fps > 0.0) || v.frames < 1) throw ConfigError("/video/synthetic", "fps and frames must be positive");
  }
  o.finish();
}

void parse_experiment(const json& j, RunConfig& cfg) {
  Obj o(j, "/experiment");
  ExperimentConfig& e = cfg.experiment;
  if (o.has("scenes")) {
    const json& a = o.raw("scenes");
    if (!a.is_array() || a.empty()) throw ConfigError(o.at("scenes"), "expected a non-empty array");
    e.scenes.clear();
    for (std::size_t i = 0; i < a.size(); ++i) e.scenes.push_back(scene_at(a[i], o.at("scenes") + "/" + std::to_string(i)));
  }
  if (o.has("latency_ms")) {
    const json& a = o.raw("latency_ms");
    if (!a.is_array() || a.empty()) throw ConfigError(o.at("latency_ms"), "expected a non-empty array");
    e.latency_ms.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string path = o.at("latency_ms") + "/" + std::to_string(i);
      if (!a[i].is_number() || !(a[i].get<double>() >= 0.0)) throw ConfigError(path, "expected a number >= 0");
      e.latency_ms.push_back(a[i].get<double>());
    }
  }
  o.number("duration_s", e.duration_s);
  o.integer("width", e.width);
  o.integer("height", e.height);
  o.number("fps", e.fps);
  o.integer("clip_frames", e.clip_frames);
  o.number("percentile", e.percentile);
  o.number("threshold_offset_db", e.threshold_offset_db);
  if (o.has("threshold_db")) {
    if (!o.raw("threshold_db").is_number()) throw ConfigError(o.at("threshold_db"), "expected a number");
    e.threshold_db = o.raw("threshold_db").get<double>();
  }
  o.finish();
  if (!(e.duration_s > 0.0)) throw ConfigError("/experiment/duration_s", "must be > 0");
  if (e.width < 8 || e.height < 8) throw ConfigError("/experiment", "width and height must be >= 8");
  if (!(e.fps > 0.0)) throw ConfigError("/experiment/fps", "must be > 0");
  if (e.clip_frames < 0) throw ConfigError("/experiment/clip_frames", "must be >= 0");
  if (!(e.percentile > 0.0 && e.percentile <= 100.0)) {
    throw ConfigError("/experiment/percentile", "must be in (0, 100]");
  }
}

void parse_measure(const json& j, RunConfig& cfg) {
  Obj o(j, "/measure");
  MtpOptions& m = cfg.measure;
  o.integer("n", m.n);
  o.number("step_deg", m.step_deg);
  o.number("hit_tolerance_deg", m.hit_tolerance_deg);
  double timeout_ms = m.timeout_us / 1000.0;
  o.number("timeout_ms", timeout_ms);
  m.timeout_us = static_cast<std::int64_t>(timeout_ms * 1000.0);
  o.finish();
  if (m.n < 1) throw ConfigError("/measure/n", "must be >= 1");
  if (!(m.step_deg > 0.0)) throw ConfigError("/measure/step_deg", "must be > 0");
  if (m.timeout_us < 1) throw ConfigError("/measure/timeout_ms", "must be > 0");
}

}  // namespace

ClockMode clock_mode_from_name(const std::string& name) {
  if (name == "virtual") return ClockMode::virtual_time;
  if (name == "wallclock") return ClockMode::wall_clock;
  throw std::invalid_argument("expected \"virtual\" or \"wallclock\", got '" + name + "'");
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  synthetic.seed = s;
  experiment.seed = s;
  measure.seed = s;
}

void RunConfig::set_mode(ClockMode m) {
  mode = m;
  measure.mode = m;
}

std::vector<FoveationConfig> RunConfig::resolved_ladder() const {
  if (!ladder.empty()) return ladder;
  return desk_ladder(geometry.width_px, geometry.height_px, Quantizer::from_step(q));
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  Obj o(root, "");
  o.u64("seed", cfg.seed);
  std::string mode = "virtual";
  o.string("mode", mode);
  checked("/mode", [&] { cfg.mode = clock_mode_from_name(mode); });
  if (o.has("codec")) {
    Obj c(o.raw("codec"), "/codec");
    c.number("q", cfg.q);
    c.finish();
    checked("/codec/q", [&] { Quantizer::from_step(cfg.q); });
  }
  if (o.has("geometry")) parse_geometry(o.raw("geometry"), cfg);
  if (o.has("latency")) parse_latency(o.raw("latency"), cfg);
  if (o.has("ladder")) parse_ladder(o.raw("ladder"), cfg);
  if (o.has("scene")) {
    Obj s(o.raw("scene"), "/scene");
    if (s.has("preset")) cfg.scene = scene_at(s.raw("preset"), "/scene/preset");
    s.number("duration_s", cfg.duration_s);
    s.finish();
    if (!(cfg.duration_s > 0.0)) throw ConfigError("/scene/duration_s", "must be > 0");
  }
  if (o.has("video")) parse_video(o.raw("video"), cfg);
  if (o.has("experiment")) parse_experiment(o.raw("experiment"), cfg);
  if (o.has("measure")) parse_measure(o.raw("measure"), cfg);
  o.finish();

  const std::vector<FoveationConfig> ladder = cfg.resolved_ladder();
  for (std::size_t i = 0; i < cfg.ladder.size(); ++i) {
    checked("/ladder/rungs/" + std::to_string(i),
            [&] { cfg.ladder[i].validate(cfg.geometry.width_px, cfg.geometry.height_px); });
  }
  if (cfg.ladder_index < 0 || cfg.ladder_index >= static_cast<int>(ladder.size())) {
    throw ConfigError("/ladder/index", "outside the ladder");
  }

  cfg.synthetic.width = cfg.geometry.width_px;
  cfg.synthetic.height = cfg.geometry.height_px;
  cfg.experiment.pipeline = cfg.latency;
  cfg.experiment.q = Quantizer::from_step(cfg.q);
  cfg.experiment.ladder = cfg.ladder;
  cfg.set_seed(cfg.seed);
  cfg.set_mode(cfg.mode);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace fovstream
