#include "fovstream/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "fovstream/fidelity.hpp"
#include "fovstream/harness.hpp"
#include "fovstream/rng.hpp"
#include "fovstream/session.hpp"
#include "fovstream/stats.hpp"

namespace fovstream {

std::vector<FoveationConfig> desk_ladder(int width, int height, Quantizer q) {
  // Designed at 960x540; other sizes scale proportionally.
  struct Rung {
    int bg_w, fg;
  };
  static constexpr Rung kRungs[] = {{192, 128}, {240, 128}, {288, 128}, {320, 128},
                                    {384, 128}, {480, 128}, {640, 128}, {960, 128}};
  const double s = width / 960.0;
  std::vector<FoveationConfig> ladder;
  for (const Rung& r : kRungs) {
    FoveationConfig c;
    c.bg_width = std::clamp(static_cast<int>(std::lround(r.bg_w * s)), 1, width);
    c.bg_height = std::clamp(static_cast<int>(std::lround(r.bg_w * s * height / width)), 1, height);
    c.fg_size = std::min(static_cast<int>(std::lround(r.fg * s / 8.0)) * 8, std::min(width, height) / 8 * 8);
    c.q_bg = q;
    c.q_fg = q;
    ladder.push_back(c);
  }
  return ladder;
}

bool ladder_is_monotone(const std::vector<FoveationConfig>& ladder, int src_w, int src_h) {
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    if (pixel_budget(ladder[i], src_w, src_h) < pixel_budget(ladder[i - 1], src_w, src_h)) return false;
    if (ladder[i].q_bg.raw() > ladder[i - 1].q_bg.raw()) return false;
    if (ladder[i].q_fg.raw() > ladder[i - 1].q_fg.raw()) return false;
  }
  return true;
}

LatencyModel latency_for_condition(const LatencyModel& pipeline, double latency_ms) {
  if (!(latency_ms >= 0.0)) throw std::invalid_argument("latency condition must be >= 0 ms");
  LatencyModel m = pipeline;
  if (latency_ms == 0.0) {
    m.tracker = {0.0, 0.0};
    m.uplink_us = m.encode_us = m.downlink_us = m.decode_us = m.display_input_us = 0.0;
    m.artificial_us = 0.0;
    return m;
  }
  m.artificial_us = 0.0;
  m.artificial_us = std::max(0.0, latency_ms * 1000.0 - total_latency_us(m));
  return m;
}

namespace {

constexpr int kPatchAmplitude = 20;
constexpr double kPatchRadiusDeg = 1.5;

OculomotorParams scene_params(ScenePreset scene, const ExperimentConfig& cfg) {
  OculomotorParams p = cfg.oculomotor;
  p.rng_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(scene) + 1);
  return p;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

FrameCache scene_video(ScenePreset scene, const ExperimentConfig& cfg) {
  const ViewingGeometry geom = reference_geometry(cfg.width, cfg.height);
  const OculomotorParams p = scene_params(scene, cfg);
  SyntheticSpec spec;
  spec.kind = "gradient-noise";
  spec.width = cfg.width;
  spec.height = cfg.height;
  spec.fps = cfg.fps;
  spec.frames = cfg.clip_frames > 0 ? cfg.clip_frames
                                    : std::max(1, static_cast<int>(std::ceil(cfg.duration_s * cfg.fps)));
  spec.seed = p.rng_seed;
  spec.grain = 2.0;
  spec.patch_amplitude = kPatchAmplitude;
  // Patch k is on screen from the start of suppression around the saccade
  // into fixation k until the saccade out of it begins, so a viewer whose
  // foreground keeps up never sees it unfoveated.
  const Trace trace = gen_preset_trace(scene, cfg.duration_s, p);
  const double radius = kPatchRadiusDeg * pixels_per_degree_center(geom);
  const std::vector<ScriptPoint> script = preset_script(scene, cfg.duration_s, p.rng_seed);
  for (std::size_t k = 0; k < script.size(); ++k) {
    const PixelPoint c = to_pixels(script[k].target, geom);
    DetailPatch patch{c.x, c.y, radius};
    if (k > 0 && k - 1 < trace.saccades.size()) patch.t_on_s = trace.saccades[k - 1].supp_start_us / 1e6;
    if (k > 0 && k - 1 >= trace.saccades.size()) break;
    if (k < trace.saccades.size()) patch.t_off_s = trace.saccades[k].start_us / 1e6;
    spec.patches.push_back(patch);
  }
  return FrameCache(*make_synthetic(spec));
}

CellResult run_cell(const FrameCache& video, const Trace& trace, const FoveationConfig& fov,
                    const LatencyModel& latency, const ExperimentConfig& cfg, Codec& codec) {
  SessionConfig sc;
  sc.fov = fov;
  sc.latency = latency;
  sc.server.geom = reference_geometry(video.width(), video.height());
  sc.seed = cfg.seed;
  FidelityEvaluator eval(sc.server.geom, cfg.acuity);

  std::vector<double> scores;
  std::vector<CropTimelineEntry> timeline;
  std::uint64_t err_version = 0;
  int err_ref = -1;
  Eigen::ArrayXd err;
  const SessionStats stats = run_session(video, trace, sc, codec, [&](const DisplayedFrame& df) {
    CropTimelineEntry entry;
    entry.t_from_us = df.photon_us;
    if (df.has_fg) {
      entry.center = to_degrees(df.crop_center, sc.server.geom);
      entry.radius_deg = crop_radius_deg(df.crop_center, fov.fg_size, sc.server.geom);
    }
    timeline.push_back(entry);

    if (trace.suppressed_at(df.photon_us)) return;
    if (df.version != err_version || df.bg_frame_index != err_ref) {
      err = eval.squared_error(video.at(df.bg_frame_index).planes[0], df.frame->planes[0]);
      err_version = df.version;
      err_ref = df.bg_frame_index;
    }
    const PixelPoint gaze = to_pixels(trace.at(df.photon_us).pos, sc.server.geom);
    scores.push_back(std::min(eval.fwpsnr_snapped(err, gaze), kFwpsnrCapDb));
  });

  CellResult r;
  r.bits_total = stats.bits_total();
  r.duration_s = stats.duration_s;
  r.bitrate_mbps = stats.bitrate_mbps();
  r.frames_scored = static_cast<int>(scores.size());
  r.fwpsnr_pct_db = scores.empty() ? kFwpsnrCapDb : ecdf(scores).quantile(cfg.percentile / 100.0);
  r.escape_frac = escape_fraction(trace, timeline);
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  const std::vector<FoveationConfig> ladder =
      cfg.ladder.empty() ? desk_ladder(cfg.width, cfg.height, cfg.q) : cfg.ladder;
  if (ladder.empty()) throw std::invalid_argument("experiment: empty ladder");
  for (const auto& rung : ladder) rung.validate(cfg.width, cfg.height);
  if (!ladder_is_monotone(ladder, cfg.width, cfg.height)) {
    throw std::invalid_argument("experiment: ladder must be ordered by increasing quality");
  }
  if (cfg.latency_ms.empty()) throw std::invalid_argument("experiment: no latency conditions");
  const auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };

  ExperimentResult result;
  for (ScenePreset scene : cfg.scenes) {
    const std::string name = to_string(scene);
    const FrameCache video = scene_video(scene, cfg);
    const Trace trace = gen_preset_trace(scene, cfg.duration_s, scene_params(scene, cfg));

    FoveationConfig base;
    base.bg_width = cfg.width;
    base.bg_height = cfg.height;
    base.fg_size = 0;
    base.q_bg = cfg.q;
    base.q_fg = cfg.q;
    CachingCodec base_codec(make_ref_codec());
    const CellResult b = run_cell(video, trace, base, cfg.pipeline, cfg, base_codec);
    BaselineResult br{name, b.bits_total, b.bitrate_mbps, b.fwpsnr_pct_db,
                      cfg.threshold_db.value_or(b.fwpsnr_pct_db - cfg.threshold_offset_db)};
    result.baselines.push_back(br);
    say(name + " baseline: " + fmt("%.3f", br.bitrate_mbps) + " Mbit/s, P" +
        fmt("%g", cfg.percentile) + " " + fmt("%.3f", br.fwpsnr_pct_db) + " dB, threshold " +
        fmt("%.3f", br.threshold_db) + " dB");

    std::map<double, ExperimentRow> chosen;
    std::map<double, CellResult> last_tried;
    std::set<double> pending(cfg.latency_ms.begin(), cfg.latency_ms.end());
    for (std::size_t r = 0; r < ladder.size() && !pending.empty(); ++r) {
      CachingCodec codec(make_ref_codec());
      for (auto it = pending.begin(); it != pending.end();) {
        const double lat = *it;
        const CellResult c =
            run_cell(video, trace, ladder[r], latency_for_condition(cfg.pipeline, lat), cfg, codec);
        say(name + " " + fmt("%g", lat) + " ms rung " + std::to_string(r) + ": " +
            fmt("%.3f", c.fwpsnr_pct_db) + " dB, " + fmt("%.1f", 100.0 * c.bitrate_mbps / br.bitrate_mbps) +
            "%");
        last_tried[lat] = c;
        if (c.fwpsnr_pct_db >= br.threshold_db) {
          chosen[lat] = {name, lat, static_cast<int>(r), c.bits_total, c.duration_s, c.bitrate_mbps,
                         100.0 * c.bitrate_mbps / br.bitrate_mbps, c.fwpsnr_pct_db, c.escape_frac};
          it = pending.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (double lat : cfg.latency_ms) {
      if (auto it = chosen.find(lat); it != chosen.end()) {
        result.rows.push_back(it->second);
        continue;
      }
      const CellResult& c = last_tried[lat];
      ExperimentRow none{name, lat, -1, 0, c.duration_s, 0.0, std::numeric_limits<double>::infinity(),
                         c.fwpsnr_pct_db, c.escape_frac};
      result.rows.push_back(none);
    }
  }
  return result;
}

void write_results_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << "video,latency_ms,config_idx,bits_total,duration_s,bitrate_mbps,pct_of_baseline,"
         "fwpsnr_p5_db,escape_frac\n";
  char buf[256];
  for (const ExperimentRow& r : rows) {
    if (r.config_idx < 0) {
      std::snprintf(buf, sizeof buf, "%s,%g,none,,%.6f,,,%.6f,%.6f\n", r.video.c_str(), r.latency_ms,
                    r.duration_s, r.fwpsnr_pct_db, r.escape_frac);
    } else {
      std::snprintf(buf, sizeof buf, "%s,%g,%d,%llu,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.video.c_str(),
                    r.latency_ms, r.config_idx, static_cast<unsigned long long>(r.bits_total),
                    r.duration_s, r.bitrate_mbps, r.pct_of_baseline, r.fwpsnr_pct_db, r.escape_frac);
    }
    out << buf;
  }
}

void write_bitrate_curve_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << "video,latency_ms,pct_of_baseline\n";
  char buf[128];
  for (const ExperimentRow& r : rows) {
    if (r.config_idx < 0) {
      std::snprintf(buf, sizeof buf, "%s,%g,\n", r.video.c_str(), r.latency_ms);
    } else {
      std::snprintf(buf, sizeof buf, "%s,%g,%.6f\n", r.video.c_str(), r.latency_ms, r.pct_of_baseline);
    }
    out << buf;
  }
}

bool trend_holds(const std::vector<ExperimentRow>& rows, double low_ms, double high_ms) {
  std::map<std::string, std::pair<double, double>> by_video;
  std::map<std::string, int> seen;
  for (const ExperimentRow& r : rows) {
    const double pct = r.config_idx < 0 ? std::numeric_limits<double>::infinity() : r.pct_of_baseline;
    if (r.latency_ms == low_ms) {
      by_video[r.video].first = pct;
      seen[r.video] |= 1;
    }
    if (r.latency_ms == high_ms) {
      by_video[r.video].second = pct;
      seen[r.video] |= 2;
    }
  }
  if (by_video.empty()) return false;
  for (const auto& [video, pcts] : by_video) {
    if (seen[video] != 3 || !(pcts.first < pcts.second)) return false;
  }
  return true;
}

}  // namespace fovstream
