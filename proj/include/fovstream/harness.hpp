#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fovstream/gazesim.hpp"
#include "fovstream/geometry.hpp"
#include "fovstream/transport.hpp"

namespace fovstream {

struct MtpSample {
  std::int64_t trigger_us = 0;
  std::int64_t photon_us = 0;
  std::int64_t latency_us = 0;
  // No reaction within the timeout; photon_us = trigger_us + timeout.
  bool timed_out = false;
};

struct MtpOptions {
  int n = 300;
  std::uint64_t seed = 1;
  // Small black test video; only the crop position matters.
  int width = 256;
  int height = 144;
  double step_deg = 10.0;
  std::int64_t first_trigger_us = 100'000;
  std::int64_t min_gap_us = 150'000;
  std::int64_t max_gap_us = 300'000;
  double hit_tolerance_deg = 0.5;
  std::int64_t timeout_us = 1'000'000;
  ClockMode mode = ClockMode::virtual_time;
};

// Toggles an artificial saccade generator between two points `step_deg`
// apart and records, per toggle, the first photon time at which the
// displayed crop centre lies within tolerance of the new gaze position.
std::vector<MtpSample> measure_mtp(const LatencyModel& model, const MtpOptions& opts);

// Region shown from t_from_us until the next entry.
struct CropTimelineEntry {
  std::int64_t t_from_us = 0;
  DegreePoint center;
  double radius_deg = 0.0;
};

// Fraction of fixation-tagged trace samples (at or after the first timeline
// entry) whose gaze lies strictly farther than the current radius from the
// current centre.
double escape_fraction(const Trace& trace, std::span<const CropTimelineEntry> timeline);

// An ideal system with motion-to-photon latency t_L: at time t the region is
// centred on the gaze at t - t_L.
std::vector<CropTimelineEntry> delayed_gaze_timeline(const Trace& trace, std::int64_t latency_us,
                                                     double radius_deg);

// Angular radius of a square crop: centre to the midpoint of its left/right
// edge.
double crop_radius_deg(const PixelPoint& center_px, int fg_size, const ViewingGeometry& geom);

}  // namespace fovstream
