// fovstream: command-line entry point.
//
// Exit codes: 0 ok, 1 trend check failed, 2 usage or config error,
// 66 missing input, 69 port unavailable, 70 internal error.

#include <unistd.h>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "fovstream/config.hpp"
#include "fovstream/experiment.hpp"
#include "fovstream/harness.hpp"
#include "fovstream/serve.hpp"
#include "fovstream/session.hpp"
#include "fovstream/stats.hpp"

namespace fs = std::filesystem;
using namespace fovstream;

namespace {

constexpr int kExitTrend = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNoInput = 66;
constexpr int kExitUnavailable = 69;
constexpr int kExitSoftware = 70;

// Writes through a temporary file in the same directory and renames it into
// place, so readers never see a partial file.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& fill) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    fill(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("fovstream");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("FOVSTREAM_LOG")) {
    const auto parsed = spdlog::level::from_str(lvl);
    // from_str maps unknown names to off; only accept real level names.
    if (parsed != spdlog::level::off || std::string(lvl) == "off") spdlog::set_level(parsed);
  }
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration");
  cmd->add_option("--seed", c.seed, "RNG seed (overrides the config)");
  cmd->add_option("--mode", c.mode, "Clock mode")->check(CLI::IsMember({"virtual", "wallclock"}));
}

RunConfig load(const Common& c) {
  RunConfig cfg = c.config.empty() ? parse_run_config("{}") : load_run_config(c.config);
  if (c.seed) cfg.set_seed(*c.seed);
  if (!c.mode.empty()) cfg.set_mode(clock_mode_from_name(c.mode));
  return cfg;
}

FrameCache load_video(const RunConfig& cfg) {
  if (cfg.video_path) {
    if (!fs::exists(*cfg.video_path)) throw InputError("no such video: " + cfg.video_path->string());
    return read_y4m(*cfg.video_path);
  }
  return FrameCache(*make_synthetic(cfg.synthetic));
}

Trace load_trace(const RunConfig& cfg, const std::string& path) {
  if (path.empty()) {
    OculomotorParams p;
    p.rng_seed = cfg.seed;
    return gen_preset_trace(cfg.scene, cfg.duration_s, p);
  }
  std::ifstream in(path);
  if (!in) throw InputError("no such trace: " + path);
  return read_trace_csv(in);
}

std::vector<double> parse_conditions(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !(v >= 0.0)) throw CLI::ValidationError("--conditions", "bad latency '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("--conditions", "empty list");
  return out;
}

// stream -----------------------------------------------------------------

struct StreamArgs {
  Common common;
  std::string video, trace, scene, dump_dir, stats_json;
  std::optional<double> duration_s;
  std::optional<int> rung;
  std::optional<double> artificial_ms;
  int dump_every = 0;
};

int cmd_stream(const StreamArgs& a) {
  RunConfig cfg = load(a.common);
  if (!a.video.empty()) cfg.video_path = a.video;
  if (!a.scene.empty()) cfg.scene = scene_preset_from_name(a.scene);
  if (a.duration_s) cfg.duration_s = *a.duration_s;
  if (!(cfg.duration_s > 0.0)) throw CLI::ValidationError("--duration", "must be > 0");
  const FrameCache video = load_video(cfg);
  const Trace trace = load_trace(cfg, a.trace);

  ViewingGeometry geom = cfg.geometry;
  if (geom.width_px != video.width() || geom.height_px != video.height()) {
    throw ConfigError("/geometry", "width_px x height_px must match the video (" + std::to_string(video.width()) +
                                       "x" + std::to_string(video.height()) + ")");
  }
  const std::vector<FoveationConfig> ladder = cfg.resolved_ladder();
  const int rung = a.rung.value_or(cfg.ladder_index);
  if (rung < 0 || rung >= static_cast<int>(ladder.size())) {
    throw CLI::ValidationError("--rung", "outside the ladder (0.." + std::to_string(ladder.size() - 1) + ")");
  }

  SessionConfig sc;
  sc.fov = ladder[static_cast<std::size_t>(rung)];
  sc.latency = cfg.latency;
  if (a.artificial_ms) sc.latency.artificial_us = *a.artificial_ms * 1000.0;
  sc.server.geom = geom;
  sc.server.deadband_deg = cfg.deadband_deg;
  sc.seed = cfg.seed;
  sc.mode = cfg.mode;

  std::vector<CropTimelineEntry> timeline;
  int shown = 0;
  CachingCodec codec(make_ref_codec());
  const SessionStats stats = run_session(video, trace, sc, codec, [&](const DisplayedFrame& df) {
    CropTimelineEntry e;
    e.t_from_us = df.photon_us;
    if (df.has_fg) {
      e.center = to_degrees(df.crop_center, geom);
      e.radius_deg = crop_radius_deg(df.crop_center, sc.fov.fg_size, geom);
    }
    timeline.push_back(e);
    if (a.dump_every > 0 && shown % a.dump_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "frame_%06d.png", shown);
      fs::create_directories(a.dump_dir);
      write_png(fs::path(a.dump_dir) / name, *df.frame);
    }
    ++shown;
  });
  const double escape = escape_fraction(trace, timeline);

  char line[256];
  std::snprintf(line, sizeof line,
                "bits_total=%llu bits_bg=%llu bits_fg=%llu bitrate_mbps=%.6f escape_frac=%.6f frames=%d",
                static_cast<unsigned long long>(stats.bits_total()), static_cast<unsigned long long>(stats.bits_bg),
                static_cast<unsigned long long>(stats.bits_fg), stats.bitrate_mbps(), escape,
                stats.frames_displayed);
  std::cout << line << "\n";
  if (!a.stats_json.empty()) {
    write_atomic(a.stats_json, [&](std::ostream& out) {
      out << "{\"bits_total\": " << stats.bits_total() << ", \"bits_bg\": " << stats.bits_bg
          << ", \"bits_fg\": " << stats.bits_fg << ", \"duration_s\": " << stats.duration_s
          << ", \"bitrate_mbps\": " << stats.bitrate_mbps() << ", \"escape_frac\": " << escape
          << ", \"frames_displayed\": " << stats.frames_displayed << ", \"rung\": " << rung << "}\n";
    });
  }
  return 0;
}

// measure-latency --------------------------------------------------------

struct MeasureArgs {
  Common common;
  std::string profile, out;
  std::optional<int> n;
};

int cmd_measure(const MeasureArgs& a) {
  RunConfig cfg = load(a.common);
  LatencyModel model = cfg.latency;
  std::string profile = cfg.latency_profile;
  if (!a.profile.empty()) {
    profile = a.profile;
    model = profile == "lower-bound" ? LatencyModel::lower_bound() : LatencyModel::fvideo();
  }
  MtpOptions opts = cfg.measure;
  if (a.n) opts.n = *a.n;
  if (opts.n < 1) throw CLI::ValidationError("-n", "must be >= 1");

  const std::vector<MtpSample> samples = measure_mtp(model, opts);
  std::vector<double> ms;
  int timeouts = 0;
  for (const MtpSample& s : samples) {
    if (s.timed_out) {
      ++timeouts;
      continue;
    }
    ms.push_back(s.latency_us / 1000.0);
  }
  const auto write = [&](std::ostream& out) {
    out << "rep,trigger_us,photon_us,latency_us,timed_out\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const MtpSample& s = samples[i];
      out << i << "," << s.trigger_us << "," << s.photon_us << "," << s.latency_us << "," << (s.timed_out ? 1 : 0)
          << "\n";
    }
  };
  if (a.out.empty()) {
    write(std::cout);
  } else {
    write_atomic(a.out, write);
  }
  if (ms.empty()) {
    spdlog::error("no reaction within the timeout in any of {} repetitions", samples.size());
    return kExitSoftware;
  }
  const Ecdf e = ecdf(ms);
  double mean = 0.0;
  for (double v : ms) mean += v;
  mean /= static_cast<double>(ms.size());
  std::fprintf(stderr, "profile=%s n=%zu min_ms=%.3f p50_ms=%.3f mean_ms=%.3f model_ms=%.3f timeouts=%d\n",
               profile.c_str(), samples.size(), e.x.front(), e.quantile(0.5), mean,
               total_latency_us(model) / 1000.0, timeouts);
  return 0;
}

// experiment -------------------------------------------------------------

struct ExperimentArgs {
  Common common;
  std::string out = "results";
  std::string conditions;
  std::vector<std::string> scenes;
  bool check_trend = false;
};

int cmd_experiment(const ExperimentArgs& a) {
  RunConfig cfg = load(a.common);
  ExperimentConfig ec = cfg.experiment;
  if (!a.conditions.empty()) ec.latency_ms = parse_conditions(a.conditions);
  if (!a.scenes.empty()) {
    ec.scenes.clear();
    for (const std::string& s : a.scenes) ec.scenes.push_back(scene_preset_from_name(s));
  }
  const ExperimentResult r = run_experiment(ec, [](const std::string& msg) { spdlog::info("{}", msg); });

  const fs::path dir(a.out);
  write_atomic(dir / "results.csv", [&](std::ostream& out) { write_results_csv(out, r.rows); });
  write_atomic(dir / "bitrate_curve.csv", [&](std::ostream& out) { write_bitrate_curve_csv(out, r.rows); });
  write_atomic(dir / "baselines.csv", [&](std::ostream& out) {
    out << "video,bits_total,bitrate_mbps,fwpsnr_p5_db,threshold_db\n";
    char buf[256];
    for (const BaselineResult& b : r.baselines) {
      std::snprintf(buf, sizeof buf, "%s,%llu,%.6f,%.6f,%.6f\n", b.video.c_str(),
                    static_cast<unsigned long long>(b.bits_total), b.bitrate_mbps, b.fwpsnr_pct_db, b.threshold_db);
      out << buf;
    }
  });
  write_results_csv(std::cout, r.rows);

  if (a.check_trend) {
    const bool has14 = std::count(ec.latency_ms.begin(), ec.latency_ms.end(), 14.0) > 0;
    const bool has45 = std::count(ec.latency_ms.begin(), ec.latency_ms.end(), 45.0) > 0;
    if (!has14 || !has45) throw CLI::ValidationError("--check-trend", "needs the 14 and 45 ms conditions");
    if (!trend_holds(r.rows, 14.0, 45.0)) {
      spdlog::error("trend check failed: bitrate at 14 ms is not below 45 ms for every video");
      return kExitTrend;
    }
    spdlog::info("trend check passed");
  }
  return 0;
}

// trace-gen --------------------------------------------------------------

struct TraceArgs {
  Common common;
  std::string scene, out;
  std::optional<double> duration_s;
};

int cmd_trace_gen(const TraceArgs& a) {
  RunConfig cfg = load(a.common);
  if (!a.scene.empty()) cfg.scene = scene_preset_from_name(a.scene);
  if (a.duration_s) cfg.duration_s = *a.duration_s;
  if (!(cfg.duration_s > 0.0)) throw CLI::ValidationError("--duration", "must be > 0");
  const Trace t = load_trace(cfg, "");
  if (a.out.empty()) {
    write_trace_csv(std::cout, t);
  } else {
    write_atomic(a.out, [&](std::ostream& out) { write_trace_csv(out, t); });
  }
  spdlog::info("{} samples, {} saccades", t.samples.size(), t.saccades.size());
  return 0;
}

// serve ------------------------------------------------------------------

struct ServeArgs {
  Common common;
  std::string bind = "127.0.0.1";
  int port = 8765;
  int demo_width = 480;
  std::string synthetic;
};

DemoServer* g_server = nullptr;

int cmd_serve(const ServeArgs& a) {
  RunConfig cfg = load(a.common);
  if (!a.synthetic.empty()) cfg.synthetic.kind = a.synthetic;
  auto video = std::make_shared<const FrameCache>(load_video(cfg));
  if (cfg.geometry.width_px != video->width() || cfg.geometry.height_px != video->height()) {
    throw ConfigError("/geometry", "width_px x height_px must match the video");
  }
  const std::vector<FoveationConfig> ladder = cfg.resolved_ladder();
  ServerOptions server;
  server.geom = cfg.geometry;
  server.deadband_deg = cfg.deadband_deg;
  DemoOptions demo;
  demo.demo_width = std::min(a.demo_width, video->width());

  ServeOptions so;
  so.bind = a.bind;
  so.port = static_cast<unsigned short>(a.port);
  DemoServer srv(so, [&] {
    auto s = std::make_unique<DemoSession>(video, ladder, cfg.latency, server, demo);
    s->on_config({static_cast<float>(cfg.latency.artificial_us / 1000.0), static_cast<std::uint8_t>(cfg.ladder_index)});
    return s;
  });
  g_server = &srv;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  spdlog::info("serving on ws://{}:{}", a.bind, srv.port());
  srv.run();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Gaze-contingent foveated video streaming simulator"};
  app.require_subcommand(1);

  StreamArgs sa;
  CLI::App* stream = app.add_subcommand("stream", "Run the two-stream loop over one video and gaze trace");
  add_common(stream, sa.common);
  stream->add_option("--video", sa.video, "YUV4MPEG2 input (default: synthetic from the config)");
  stream->add_option("--trace", sa.trace, "Gaze trace CSV (default: generated scene preset)");
  stream->add_option("--scene", sa.scene, "Scene preset for a generated trace")
      ->check(CLI::IsMember({"fixation", "dialogue", "crowd"}));
  stream->add_option("--duration", sa.duration_s, "Seconds of generated trace");
  stream->add_option("--rung", sa.rung, "Ladder rung index");
  stream->add_option("--artificial-ms", sa.artificial_ms, "Extra gaze-path delay in ms")->check(CLI::NonNegativeNumber);
  stream->add_option("--dump-frames", sa.dump_dir, "Directory for PNG dumps of displayed frames");
  stream->add_option("--dump-every", sa.dump_every, "Dump every Nth displayed frame (0 = none)")->check(CLI::NonNegativeNumber);
  stream->add_option("--stats-json", sa.stats_json, "Also write the stats as JSON");

  MeasureArgs ma;
  CLI::App* measure = app.add_subcommand("measure-latency", "Simulated motion-to-photon latency ECDF");
  add_common(measure, ma.common);
  measure->add_option("--profile", ma.profile, "Latency profile")->check(CLI::IsMember({"lower-bound", "fvideo"}));
  measure->add_option("-n", ma.n, "Repetitions");
  measure->add_option("--out", ma.out, "CSV output (default stdout)");

  ExperimentArgs ea;
  CLI::App* experiment = app.add_subcommand("experiment", "Latency vs. bitrate sweep");
  add_common(experiment, ea.common);
  experiment->add_option("--out", ea.out, "Output directory")->capture_default_str();
  experiment->add_option("--conditions", ea.conditions, "Comma-separated latencies in ms, e.g. 14,45,81");
  experiment->add_option("--scenes", ea.scenes, "Scene presets")->check(CLI::IsMember({"fixation", "dialogue", "crowd"}));
  experiment->add_flag("--check-trend", ea.check_trend, "Exit 1 unless bitrate(14 ms) < bitrate(45 ms) per video");

  TraceArgs ta;
  CLI::App* trace = app.add_subcommand("trace-gen", "Generate a gaze trace CSV");
  add_common(trace, ta.common);
  trace->add_option("--scene", ta.scene, "Scene preset")->check(CLI::IsMember({"fixation", "dialogue", "crowd"}));
  trace->add_option("--duration", ta.duration_s, "Seconds");
  trace->add_option("--out", ta.out, "CSV output (default stdout)");

  ServeArgs va;
  CLI::App* serve = app.add_subcommand("serve", "WebSocket demo server for the browser viewer");
  add_common(serve, va.common);
  serve->add_option("--bind", va.bind, "Listen address")->capture_default_str();
  serve->add_option("--port", va.port, "Listen port")->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--demo-width", va.demo_width, "Width of frames sent to the viewer")->check(CLI::PositiveNumber);
  serve->add_option("--synthetic", va.synthetic, "Synthetic clip kind")
      ->check(CLI::IsMember({"moving-checker", "scrolling-text", "gradient-noise"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*stream) return cmd_stream(sa);
    if (*measure) return cmd_measure(ma);
    if (*experiment) return cmd_experiment(ea);
    if (*trace) return cmd_trace_gen(ta);
    if (*serve) return cmd_serve(va);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoInput;
  } catch (const PortUnavailable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnavailable;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitSoftware;
  }
  return kExitUsage;
}
