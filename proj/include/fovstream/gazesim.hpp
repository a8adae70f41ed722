#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fovstream/geometry.hpp"

namespace fovstream {

enum class GazeEvent : std::uint8_t { fixation, saccade, suppressed };

const char* to_csv_tag(GazeEvent e);
GazeEvent gaze_event_from_tag(const std::string& tag);

struct TraceSample {
  std::int64_t t_us = 0;
  DegreePoint pos;
  GazeEvent event = GazeEvent::fixation;
};

// A saccade occupies (start_us, end_us]; perception is suppressed over
// [supp_start_us, supp_end_us], which always contains the saccade.
struct SaccadeSpan {
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
  std::int64_t supp_start_us = 0;
  std::int64_t supp_end_us = 0;
};

struct Trace {
  int sample_rate_hz = 1000;
  std::vector<TraceSample> samples;
  std::vector<SaccadeSpan> saccades;

  std::int64_t period_us() const { return 1'000'000 / sample_rate_hz; }
  std::int64_t duration_us() const;
  // Latest sample at or before t (the first sample before the trace starts).
  const TraceSample& at(std::int64_t t_us) const;
  bool suppressed_at(std::int64_t t_us) const;
};

struct OculomotorParams {
  double drift_arcmin_s = 50.0;
  double v_peak_deg_s = 900.0;
  double suppression_pre_ms = 25.0;
  double suppression_post_ms = 50.0;
  int sample_rate_hz = 1000;
  std::uint64_t rng_seed = 1;

  // Throws std::invalid_argument: v_peak in (0, 900], pre + post in [50, 200],
  // sample rate a positive divisor of 1e6.
  void validate() const;
};

// Random-walk drift around `center`; at least one sample, times from 0.
Trace gen_fixation(const DegreePoint& center, double duration_s, const OculomotorParams& p);

// Samples strictly after `from` up to and including `to`, times from one
// period. Triangular velocity profile whose duration is 2A / v_peak rounded up
// to whole samples. Annotated with one SaccadeSpan starting at t = 0.
Trace gen_saccade(const DegreePoint& from, const DegreePoint& to, const OculomotorParams& p);

struct ScriptPoint {
  DegreePoint target;
  double dwell_s = 0.0;
};

// Fixations joined by saccades, continuous in position. Saccade and
// suppression tags are applied to the assembled trace.
Trace gen_scene_trace(const std::vector<ScriptPoint>& script, const OculomotorParams& p);

enum class ScenePreset { fixation, dialogue, crowd };

ScenePreset scene_preset_from_name(const std::string& name);
const char* to_string(ScenePreset preset);

std::vector<ScriptPoint> preset_script(ScenePreset preset, double duration_s, std::uint64_t seed);
// Preset trace truncated to `duration_s`.
Trace gen_preset_trace(ScenePreset preset, double duration_s, const OculomotorParams& p);

// One artificial-saccade-generator toggle: `pos_a` before trigger_t, `pos_b`
// at and after it. No kinematics, all samples tagged fixation.
Trace asg_step(const DegreePoint& pos_a, const DegreePoint& pos_b, std::int64_t trigger_us,
               std::int64_t duration_us, int sample_rate_hz = 1000);

struct AsgSequence {
  Trace trace;
  std::vector<std::int64_t> triggers_us;
  std::vector<DegreePoint> targets;
};

// `n` toggles between the two positions, spaced by gaps drawn uniformly from
// [min_gap_us, max_gap_us] on the sample grid.
AsgSequence asg_sequence(const DegreePoint& pos_a, const DegreePoint& pos_b, int n,
                         std::int64_t first_trigger_us, std::int64_t min_gap_us,
                         std::int64_t max_gap_us, std::uint64_t seed, int sample_rate_hz = 1000);

// CSV with header `t_us,x_deg,y_deg,event`.
void write_trace_csv(std::ostream& out, const Trace& trace);
Trace read_trace_csv(std::istream& in);

}  // namespace fovstream
