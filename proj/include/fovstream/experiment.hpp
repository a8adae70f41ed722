#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fovstream/acuity.hpp"
#include "fovstream/gazesim.hpp"
#include "fovstream/pipeline.hpp"
#include "fovstream/transport.hpp"
#include "fovstream/video.hpp"

namespace fovstream {

// Ladder of increasing quality for a w x h source: the background resolution
// grows from a fifth of the source to full size while the crop stays at 128 px
// (scaled with the width), both streams at quantizer `q`. Holding the crop
// fixed means only the background can absorb a gaze that escaped it.
std::vector<FoveationConfig> desk_ladder(int width, int height, Quantizer q);

// Non-decreasing pixel budget and non-increasing quantizer steps.
bool ladder_is_monotone(const std::vector<FoveationConfig>& ladder, int src_w, int src_h);

struct ExperimentConfig {
  std::vector<ScenePreset> scenes = {ScenePreset::dialogue, ScenePreset::crowd};
  std::vector<double> latency_ms = {14.0, 45.0, 81.0};
  std::uint64_t seed = 1;
  double duration_s = 6.0;
  int width = 960;
  int height = 540;
  double fps = 30.0;
  // Frames in the looped clip; 0 covers the whole duration.
  int clip_frames = 0;
  Quantizer q = Quantizer::from_step(8.0);
  // Empty selects desk_ladder(width, height, q).
  std::vector<FoveationConfig> ladder;
  double percentile = 5.0;
  double threshold_offset_db = 1.0;
  // Overrides the baseline-derived threshold.
  std::optional<double> threshold_db;
  LatencyModel pipeline = LatencyModel::fvideo();
  OculomotorParams oculomotor;
  AcuityParams acuity;
};

struct BaselineResult {
  std::string video;
  std::uint64_t bits_total = 0;
  double bitrate_mbps = 0.0;
  double fwpsnr_pct_db = 0.0;
  double threshold_db = 0.0;
};

struct ExperimentRow {
  std::string video;
  double latency_ms = 0.0;
  // -1 when no rung met the threshold.
  int config_idx = -1;
  std::uint64_t bits_total = 0;
  double duration_s = 0.0;
  double bitrate_mbps = 0.0;
  double pct_of_baseline = 0.0;
  double fwpsnr_pct_db = 0.0;
  double escape_frac = 0.0;
};

struct ExperimentResult {
  std::vector<BaselineResult> baselines;
  std::vector<ExperimentRow> rows;
};

// Measured fidelity and rate of one (video, latency, rung) cell.
struct CellResult {
  std::uint64_t bits_total = 0;
  double duration_s = 0.0;
  double bitrate_mbps = 0.0;
  double fwpsnr_pct_db = 0.0;
  double escape_frac = 0.0;
  int frames_scored = 0;
};

// The latency model for a motion-to-photon target: the pipeline plus
// artificial uplink delay. 0 ms selects an ideal pipeline with zero stage
// delays; targets below the pipeline's own latency get no extra delay.
LatencyModel latency_for_condition(const LatencyModel& pipeline, double latency_ms);

// Synthetic scene whose fine detail sits where the scripted viewer looks.
FrameCache scene_video(ScenePreset scene, const ExperimentConfig& cfg);

CellResult run_cell(const FrameCache& video, const Trace& trace, const FoveationConfig& fov,
                    const LatencyModel& latency, const ExperimentConfig& cfg, Codec& codec);

using ProgressFn = std::function<void(const std::string&)>;

// Per scene: encode the full-resolution baseline, derive the threshold, then
// for every latency condition pick the lowest rung meeting it.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

// `video,latency_ms,config_idx,bits_total,duration_s,bitrate_mbps,pct_of_baseline,fwpsnr_p5_db,escape_frac`
void write_results_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);
// `video,latency_ms,pct_of_baseline` curve data.
void write_bitrate_curve_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);

// bitrate_pct(lowest condition) < bitrate_pct(next) for every scene; a
// "none" outcome counts as infinitely expensive.
bool trend_holds(const std::vector<ExperimentRow>& rows, double low_ms, double high_ms);

}  // namespace fovstream
