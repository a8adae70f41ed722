#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "fovstream/experiment.hpp"
#include "fovstream/fidelity.hpp"
#include "fovstream/harness.hpp"
#include "fovstream/rng.hpp"
#include "fovstream/session.hpp"

namespace fovstream {
namespace {

Plane noise_plane(int w, int h, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Plane p(h, w);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return p;
}

TEST(Fidelity, MatchesDirectWeightedSum) {
  const ViewingGeometry g = reference_geometry(48, 27);
  const FidelityEvaluator ev(g);
  const Plane a = noise_plane(48, 27, 1), b = noise_plane(48, 27, 2);
  const PixelPoint gaze{12.5, 20.5};
  double num = 0, den = 0;
  for (int y = 0; y < 27; ++y) {
    for (int x = 0; x < 48; ++x) {
      const double w = relative_acuity(eccentricity_deg({x + 0.5, y + 0.5}, gaze, g));
      const double d = double(a(y, x)) - double(b(y, x));
      num += w * d * d;
      den += w;
    }
  }
  EXPECT_NEAR(ev.fwmse(a, b, gaze), num / den, 1e-6 * num / den);
  EXPECT_NEAR(ev.fwpsnr(a, b, gaze), 10 * std::log10(255.0 * 255.0 * den / num), 1e-5);
  EXPECT_TRUE(std::isinf(ev.fwpsnr(a, a, gaze)));
  EXPECT_THROW(ev.fwmse(a, noise_plane(10, 10, 3), gaze), std::invalid_argument);
}

TEST(Fidelity, ErrorNearGazeCostsMore) {
  const ViewingGeometry g = reference_geometry(96, 54);
  const FidelityEvaluator ev(g);
  const Plane ref = Plane::Constant(54, 96, 100);
  Plane near = ref, far = ref;
  near(27, 48) = 140;
  far(2, 2) = 140;
  const PixelPoint gaze{48.5, 27.5};
  EXPECT_LT(ev.fwpsnr(ref, near, gaze), ev.fwpsnr(ref, far, gaze));
}

TEST(Fidelity, UniformErrorIsPlainPsnr) {
  const ViewingGeometry g = reference_geometry(48, 27);
  const FidelityEvaluator ev(g);
  const Plane a = Plane::Constant(27, 48, 100), b = Plane::Constant(27, 48, 104);
  EXPECT_NEAR(ev.fwpsnr(a, b, {3.5, 27.5}), 10 * std::log10(255.0 * 255.0 / 16.0), 1e-9);
}

// Moving one error from 20 degrees to the gaze point costs
// 10 log10(w(0) / w(20)) = 10 log10(22.3 / 2.3) dB.
TEST(Fidelity, FovealErrorPenalty) {
  const ViewingGeometry g = reference_geometry(3840, 2160);
  const FidelityEvaluator ev(g);
  const Plane ref = Plane::Constant(2160, 3840, 100);
  const PixelPoint gaze{1920.5, 1080.5};
  // Pixel centre 20 degrees right of the gaze along the horizontal axis.
  const PixelPoint at20 = to_pixels({20.0, to_degrees(gaze, g).y}, g);
  Plane fovea = ref, periphery = ref;
  fovea(1080, 1920) = 140;
  periphery(1080, static_cast<int>(at20.x)) = 140;
  const double e = eccentricity_deg({std::floor(at20.x) + 0.5, 1080.5}, gaze, g);
  ASSERT_NEAR(e, 20.0, 0.02);
  const double gap = ev.fwpsnr(ref, periphery, gaze) - ev.fwpsnr(ref, fovea, gaze);
  EXPECT_NEAR(gap, 10 * std::log10((e + 2.3) / 2.3), 1e-6);
  EXPECT_NEAR(gap, 9.9, 0.05);
}

TEST(Fidelity, SnappedEqualsExactAtPixelCentres) {
  const ViewingGeometry g = reference_geometry(64, 36);
  FidelityEvaluator ev(g);
  const Plane a = noise_plane(64, 36, 4), b = noise_plane(64, 36, 5);
  const Eigen::ArrayXd err = ev.squared_error(a, b);
  SplitMix64 rng(6);
  for (int i = 0; i < 40; ++i) {
    const PixelPoint gaze{rng.uniform_int(0, 63) + 0.5, rng.uniform_int(0, 35) + 0.5};
    ASSERT_NEAR(ev.fwpsnr_snapped(err, gaze), ev.fwpsnr(a, b, gaze), 1e-9);
    // Anywhere in the same pixel snaps to its centre.
    ASSERT_EQ(ev.fwpsnr_snapped(err, {gaze.x + 0.3, gaze.y - 0.4}), ev.fwpsnr_snapped(err, gaze));
  }
}

TEST(Fidelity, SuppressedFramesExcluded) {
  const ViewingGeometry g = reference_geometry(16, 9);
  const Frame a(16, 9, 10), b(16, 9, 50);
  EXPECT_TRUE(std::isinf(fwpsnr(a, b, {8, 4}, g, {}, true)));
  EXPECT_FALSE(std::isinf(fwpsnr(a, b, {8, 4}, g, {}, false)));
}

struct SessionRig {
  FrameCache video{*make_synthetic({"gradient-noise", 192, 108, 30.0, 6, 1})};
  Trace trace;
  SessionConfig cfg;

  SessionRig() {
    OculomotorParams p;
    p.rng_seed = 3;
    trace = gen_preset_trace(ScenePreset::dialogue, 0.6, p);
    cfg.fov = {96, 54, 64, Quantizer::from_step(8.0), Quantizer::from_step(8.0)};
    cfg.server.geom = reference_geometry(192, 108);
  }
};

TEST(Session, BitsEqualPayloadSum) {
  SessionRig r;
  CachingCodec codec(make_ref_codec());
  int frames = 0;
  std::int64_t last_vsync = -1;
  const SessionStats s = run_session(r.video, r.trace, r.cfg, codec, [&](const DisplayedFrame& df) {
    ++frames;
    ASSERT_GT(df.vsync_us, last_vsync);
    ASSERT_GT(df.photon_us, df.vsync_us);
    last_vsync = df.vsync_us;
  });
  EXPECT_EQ(frames, s.frames_displayed);
  EXPECT_GT(s.packets_bg, 0);
  EXPECT_GT(s.packets_fg, 0);
  EXPECT_EQ(s.bits_total(), s.bits_bg + s.bits_fg);
  EXPECT_EQ(s.bits_bg % 8, 0u);
  EXPECT_NEAR(s.bitrate_mbps(), s.bits_total() / s.duration_s / 1e6, 1e-12);
}

TEST(Session, DeterministicAcrossClockModesAndRuns) {
  SessionRig r;
  const auto run = [&](ClockMode m) {
    r.cfg.mode = m;
    CachingCodec codec(make_ref_codec());
    std::ostringstream log;
    const SessionStats s = run_session(r.video, r.trace, r.cfg, codec, [&](const DisplayedFrame& df) {
      log << df.vsync_us << ":" << df.version << ":" << df.bg_frame_index << ";";
    });
    return std::make_pair(s.bits_total(), log.str());
  };
  const auto a = run(ClockMode::virtual_time);
  EXPECT_EQ(a, run(ClockMode::virtual_time));
  EXPECT_EQ(a, run(ClockMode::wall_clock));
}

TEST(Session, ArtificialDelayLagsTheCrop) {
  SessionRig r;
  const auto escape = [&](double artificial_ms) {
    r.cfg.latency.artificial_us = artificial_ms * 1000;
    CachingCodec codec(make_ref_codec());
    std::vector<CropTimelineEntry> tl;
    run_session(r.video, r.trace, r.cfg, codec, [&](const DisplayedFrame& df) {
      CropTimelineEntry e{df.photon_us};
      if (df.has_fg) {
        e.center = to_degrees(df.crop_center, r.cfg.server.geom);
        e.radius_deg = crop_radius_deg(df.crop_center, r.cfg.fov.fg_size, r.cfg.server.geom);
      }
      tl.push_back(e);
    });
    return escape_fraction(r.trace, tl);
  };
  EXPECT_LE(escape(0), escape(100));
  EXPECT_GT(escape(100), 0.0);
}

TEST(Experiment, LatencyForCondition) {
  const LatencyModel fv = LatencyModel::fvideo();
  const LatencyModel at14 = latency_for_condition(fv, 14.0);
  EXPECT_NEAR(total_latency_us(at14), 14'000.0, 1.0);
  EXPECT_NEAR(at14.artificial_us, 14'000.0 - total_latency_us(fv), 1e-6);
  EXPECT_NEAR(total_latency_us(latency_for_condition(fv, 81.0)), 81'000.0, 1.0);
  // Below the pipeline's own latency nothing is added.
  EXPECT_EQ(latency_for_condition(fv, 5.0).artificial_us, 0.0);
  const LatencyModel ideal = latency_for_condition(fv, 0.0);
  EXPECT_EQ(ideal.tracker.mean_us, 0.0);
  EXPECT_EQ(ideal.encode_us + ideal.decode_us + ideal.display_input_us + ideal.uplink_us, 0.0);
}

TEST(Experiment, DeskLadderIsMonotoneAndValid) {
  for (auto [w, h] : {std::pair{960, 540}, std::pair{480, 270}}) {
    const auto l = desk_ladder(w, h, Quantizer::from_step(8.0));
    ASSERT_GE(l.size(), 3u);
    EXPECT_TRUE(ladder_is_monotone(l, w, h));
    for (const auto& c : l) EXPECT_NO_THROW(c.validate(w, h));
  }
  std::vector<FoveationConfig> bad = {{480, 270, 64}, {240, 135, 64}};
  EXPECT_FALSE(ladder_is_monotone(bad, 960, 540));
}

TEST(Experiment, TrendRule) {
  const auto row = [](const char* v, double ms, int idx, double pct) {
    ExperimentRow r;
    r.video = v;
    r.latency_ms = ms;
    r.config_idx = idx;
    r.pct_of_baseline = pct;
    return r;
  };
  EXPECT_TRUE(trend_holds({row("a", 14, 1, 20), row("a", 45, 5, 90), row("b", 14, 0, 30), row("b", 45, -1, 0)}, 14, 45));
  EXPECT_FALSE(trend_holds({row("a", 14, 1, 20), row("a", 45, 1, 20)}, 14, 45));
  EXPECT_FALSE(trend_holds({row("a", 14, -1, 0), row("a", 45, -1, 0)}, 14, 45));
}

TEST(Experiment, CsvColumns) {
  ExperimentRow r;
  r.video = "crowd";
  r.latency_ms = 45;
  r.config_idx = -1;
  std::ostringstream out;
  write_results_csv(out, {r});
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')),
            "video,latency_ms,config_idx,bits_total,duration_s,bitrate_mbps,pct_of_baseline,fwpsnr_p5_db,escape_frac");
  EXPECT_NE(s.find("crowd,45,none"), std::string::npos);
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig cfg;
  cfg.scenes = {ScenePreset::dialogue};
  cfg.latency_ms = {14.0};
  cfg.width = 192;
  cfg.height = 108;
  cfg.duration_s = 1.0;
  return cfg;
}

TEST(Experiment, ThresholdAboveLosslessGivesNone) {
  ExperimentConfig cfg = tiny_experiment();
  cfg.threshold_db = 1000.0;
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].config_idx, -1);
}

TEST(Experiment, BitsNonDecreasingAlongLadder) {
  const ExperimentConfig cfg = tiny_experiment();
  const FrameCache video = scene_video(ScenePreset::dialogue, cfg);
  OculomotorParams p;
  const Trace trace = gen_preset_trace(ScenePreset::dialogue, cfg.duration_s, p);
  const LatencyModel lat = latency_for_condition(cfg.pipeline, 14.0);
  CachingCodec codec(make_ref_codec());
  std::uint64_t prev = 0;
  for (const FoveationConfig& rung : desk_ladder(cfg.width, cfg.height, cfg.q)) {
    const CellResult c = run_cell(video, trace, rung, lat, cfg, codec);
    EXPECT_GE(c.bits_total, prev) << "rung " << rung.bg_width;
    prev = c.bits_total;
  }
}

TEST(Experiment, SceneVideoDeterministicAndSized) {
  ExperimentConfig cfg;
  cfg.width = 192;
  cfg.height = 108;
  cfg.duration_s = 1.0;
  const FrameCache v = scene_video(ScenePreset::dialogue, cfg);
  EXPECT_EQ(v.width(), 192);
  EXPECT_EQ(v.frame_count(), 30);
  const FrameCache again = scene_video(ScenePreset::dialogue, cfg);
  for (int i = 0; i < v.frame_count(); i += 7) EXPECT_EQ(v.at(i), again.at(i));
}

}  // namespace
}  // namespace fovstream
