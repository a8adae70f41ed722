#include "fovstream/harness.hpp"

#include <algorithm>
#include <stdexcept>

#include "fovstream/pipeline.hpp"
#include "fovstream/session.hpp"
#include "fovstream/video.hpp"

namespace fovstream {

std::vector<MtpSample> measure_mtp(const LatencyModel& model, const MtpOptions& opts) {
  if (opts.n < 1) throw std::invalid_argument("measure_mtp: n must be >= 1");
  const DegreePoint a{-opts.step_deg / 2.0, 0.0}, b{opts.step_deg / 2.0, 0.0};
  AsgSequence asg = asg_sequence(a, b, opts.n, opts.first_trigger_us, opts.min_gap_us,
                                 opts.max_gap_us, opts.seed);
  // Hold the final position long enough for the last toggle to time out.
  Trace& trace = asg.trace;
  const std::int64_t period = trace.period_us();
  const std::int64_t until = asg.triggers_us.back() + opts.timeout_us + period;
  for (std::int64_t t = trace.samples.back().t_us + period; t <= until; t += period) {
    trace.samples.push_back({t, asg.targets.back(), GazeEvent::fixation});
  }

  SessionConfig cfg;
  cfg.latency = model;
  cfg.seed = opts.seed;
  cfg.mode = opts.mode;
  cfg.server.geom = reference_geometry(opts.width, opts.height);
  cfg.fov.bg_width = std::max(1, opts.width / 4);
  cfg.fov.bg_height = std::max(1, opts.height / 4);
  cfg.fov.fg_size = std::min(32, std::min(opts.width, opts.height) / 8 * 8);
  const FrameCache black({Frame(opts.width, opts.height, 0, 128, 128)}, 1.0);

  std::vector<MtpSample> out(asg.triggers_us.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].trigger_us = asg.triggers_us[i];
    out[i].photon_us = asg.triggers_us[i] + opts.timeout_us;
    out[i].latency_us = opts.timeout_us;
    out[i].timed_out = true;
  }
  std::size_t next = 0;  // earliest toggle still waiting for its photon
  const auto codec = make_ref_codec();
  run_session(black, trace, cfg, *codec, [&](const DisplayedFrame& df) {
    if (!df.has_fg) return;
    const DegreePoint shown = to_degrees(df.crop_center, cfg.server.geom);
    for (std::size_t i = next; i < out.size() && out[i].trigger_us <= df.photon_us; ++i) {
      if (!out[i].timed_out) continue;
      if (df.photon_us - out[i].trigger_us > opts.timeout_us) continue;
      // A later toggle supersedes this one before it was seen.
      if (i + 1 < out.size() && out[i + 1].trigger_us <= df.photon_us) continue;
      if (angular_distance_deg(shown, asg.targets[i]) <= opts.hit_tolerance_deg) {
        out[i].photon_us = df.photon_us;
        out[i].latency_us = df.photon_us - out[i].trigger_us;
        out[i].timed_out = false;
      }
    }
    while (next < out.size() && !out[next].timed_out) ++next;
  });
  return out;
}

double escape_fraction(const Trace& trace, std::span<const CropTimelineEntry> timeline) {
  if (timeline.empty()) return 0.0;
  std::size_t k = 0, counted = 0, escaped = 0;
  for (const TraceSample& s : trace.samples) {
    if (s.t_us < timeline.front().t_from_us) continue;
    while (k + 1 < timeline.size() && timeline[k + 1].t_from_us <= s.t_us) ++k;
    if (s.event != GazeEvent::fixation) continue;
    ++counted;
    if (angular_distance_deg(s.pos, timeline[k].center) > timeline[k].radius_deg) ++escaped;
  }
  return counted == 0 ? 0.0 : static_cast<double>(escaped) / static_cast<double>(counted);
}

std::vector<CropTimelineEntry> delayed_gaze_timeline(const Trace& trace, std::int64_t latency_us,
                                                     double radius_deg) {
  if (latency_us < 0) throw std::invalid_argument("delayed_gaze_timeline: latency must be >= 0");
  std::vector<CropTimelineEntry> out;
  out.reserve(trace.samples.size());
  for (const TraceSample& s : trace.samples) {
    out.push_back({s.t_us, trace.at(s.t_us - latency_us).pos, radius_deg});
  }
  return out;
}

double crop_radius_deg(const PixelPoint& center_px, int fg_size, const ViewingGeometry& geom) {
  const double half = fg_size / 2.0;
  return std::min(eccentricity_deg({center_px.x - half, center_px.y}, center_px, geom),
                  eccentricity_deg({center_px.x + half, center_px.y}, center_px, geom));
}

}  // namespace fovstream
