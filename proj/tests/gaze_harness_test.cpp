#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

#include "fovstream/acuity.hpp"
#include "fovstream/gazesim.hpp"
#include "fovstream/harness.hpp"
#include "fovstream/rng.hpp"
#include "fovstream/stats.hpp"

namespace fovstream {
namespace {

double peak_speed_deg_s(const Trace& t) {
  double v = 0.0;
  for (std::size_t i = 1; i < t.samples.size(); ++i) {
    const double dt = static_cast<double>(t.samples[i].t_us - t.samples[i - 1].t_us) / 1e6;
    v = std::max(v, angular_distance_deg(t.samples[i].pos, t.samples[i - 1].pos) / dt);
  }
  return v;
}

Trace random_scene(std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<ScriptPoint> script;
  const int n = static_cast<int>(rng.uniform_int(3, 8));
  for (int i = 0; i < n; ++i) {
    script.push_back({{rng.uniform(-20.0, 20.0), rng.uniform(-12.0, 12.0)}, rng.uniform(0.1, 0.5)});
  }
  OculomotorParams p;
  p.rng_seed = seed;
  return gen_scene_trace(script, p);
}

TEST(Oculomotor, Validate) {
  OculomotorParams p;
  EXPECT_NO_THROW(p.validate());
  p.v_peak_deg_s = 901.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.suppression_pre_ms = 10.0;
  p.suppression_post_ms = 30.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.sample_rate_hz = 7;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Fixation, DriftStaysSmall) {
  OculomotorParams p;
  const Trace t = gen_fixation({3.0, -2.0}, 1.0, p);
  ASSERT_EQ(t.samples.size(), 1000u);
  EXPECT_EQ(t.samples.front().t_us, 0);
  for (const auto& s : t.samples) {
    ASSERT_EQ(s.event, GazeEvent::fixation);
    // 50 arcmin/s for one second is well under half a degree of travel.
    ASSERT_LT(angular_distance_deg(s.pos, {3.0, -2.0}), 0.5);
  }
}

TEST(Saccade, DurationAndEndpoints) {
  OculomotorParams p;
  const Trace t = gen_saccade({0, 0}, {9.0, 0}, p);
  // 2 * 9 / 900 s = 20 ms.
  ASSERT_EQ(t.samples.size(), 20u);
  EXPECT_EQ(t.samples.front().t_us, 1000);
  EXPECT_NEAR(t.samples.back().pos.x, 9.0, 1e-9);
  EXPECT_LE(peak_speed_deg_s(t), 900.0 + 1e-6);
  ASSERT_EQ(t.saccades.size(), 1u);
  EXPECT_EQ(t.saccades[0].start_us, 0);
  EXPECT_EQ(t.saccades[0].end_us, 20'000);
  EXPECT_EQ(t.saccades[0].supp_start_us, -25'000);
  // Suppression runs 50 ms past onset, which outlasts this saccade.
  EXPECT_EQ(t.saccades[0].supp_end_us, 50'000);
}

TEST(SceneTrace, Invariants) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Trace t = random_scene(seed);
    ASSERT_FALSE(t.samples.empty());
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
      ASSERT_EQ(t.samples[i].t_us - t.samples[i - 1].t_us, 1000);
    }
    ASSERT_LE(peak_speed_deg_s(t), 900.0 + 1.0);
    for (const SaccadeSpan& s : t.saccades) {
      ASSERT_LE(s.supp_start_us, s.start_us);
      ASSERT_GE(s.supp_end_us, s.end_us);
      ASSERT_TRUE(t.suppressed_at(s.start_us + 1000));
    }
  }
}

TEST(SceneTrace, SeedDeterminism) {
  std::ostringstream a, b, c;
  write_trace_csv(a, random_scene(4));
  write_trace_csv(b, random_scene(4));
  write_trace_csv(c, random_scene(5));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(TraceCsv, RoundTrip) {
  const Trace t = random_scene(6);
  std::stringstream s;
  write_trace_csv(s, t);
  EXPECT_EQ(s.str().substr(0, 22), "t_us,x_deg,y_deg,event");
  const Trace back = read_trace_csv(s);
  ASSERT_EQ(back.samples.size(), t.samples.size());
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    ASSERT_EQ(back.samples[i].t_us, t.samples[i].t_us);
    ASSERT_EQ(back.samples[i].event, t.samples[i].event);
    ASSERT_NEAR(back.samples[i].pos.x, t.samples[i].pos.x, 1e-6);
  }
  std::istringstream bad("t_us,x_deg,y_deg,event\n0,1,2,blink\n");
  EXPECT_THROW(read_trace_csv(bad), std::invalid_argument);
}

TEST(Presets, NamesAndDuration) {
  EXPECT_EQ(scene_preset_from_name("crowd"), ScenePreset::crowd);
  EXPECT_STREQ(to_string(ScenePreset::dialogue), "dialogue");
  EXPECT_THROW(scene_preset_from_name("party"), std::invalid_argument);
  OculomotorParams p;
  for (ScenePreset s : {ScenePreset::fixation, ScenePreset::dialogue, ScenePreset::crowd}) {
    const Trace t = gen_preset_trace(s, 2.0, p);
    EXPECT_LE(t.duration_us(), 2'000'000);
    EXPECT_GE(t.duration_us(), 1'990'000);
  }
  EXPECT_TRUE(gen_preset_trace(ScenePreset::fixation, 2.0, p).saccades.empty());
  EXPECT_FALSE(gen_preset_trace(ScenePreset::crowd, 2.0, p).saccades.empty());
}

TEST(Asg, Toggles) {
  const Trace t = asg_step({0, 0}, {10, 0}, 5000, 10'000);
  EXPECT_EQ(t.at(4999).pos.x, 0.0);
  EXPECT_EQ(t.at(5000).pos.x, 10.0);
  const AsgSequence seq = asg_sequence({-5, 0}, {5, 0}, 6, 100'000, 150'000, 300'000, 3);
  ASSERT_EQ(seq.triggers_us.size(), 6u);
  for (std::size_t i = 1; i < 6; ++i) {
    const auto gap = seq.triggers_us[i] - seq.triggers_us[i - 1];
    ASSERT_GE(gap, 150'000);
    ASSERT_LE(gap, 300'000);
    ASSERT_NE(seq.targets[i].x, seq.targets[i - 1].x);
  }
}

// An ideal system whose region is at least the distance the eye can travel
// within the latency never lets the gaze out.
TEST(Escape, ProofRegionNeverEscaped) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Trace t = random_scene(seed);
    for (double ms : {0.0, 14.0, 45.0, 81.0}) {
      const auto tl = delayed_gaze_timeline(t, static_cast<std::int64_t>(ms * 1000), min_region_radius(ms / 1000));
      ASSERT_EQ(escape_fraction(t, tl), 0.0) << "seed " << seed << " latency " << ms;
    }
  }
}

TEST(Escape, FovealRegionEscapesAtHighLatency) {
  std::vector<ScriptPoint> script = {{{-10, 0}, 0.3}, {{10, 0}, 0.3}};
  const Trace t = gen_scene_trace(script, {});
  EXPECT_GT(escape_fraction(t, delayed_gaze_timeline(t, 81'000, 1.5)), 0.0);
  EXPECT_EQ(escape_fraction(t, delayed_gaze_timeline(t, 0, 1.5)), 0.0);
}

TEST(Escape, HandBuiltTimeline) {
  Trace t;
  for (int i = 0; i < 10; ++i) t.samples.push_back({i * 1000, {i < 5 ? 0.0 : 5.0, 0.0}, GazeEvent::fixation});
  const std::vector<CropTimelineEntry> tl = {{0, {0, 0}, 2.0}, {7000, {5, 0}, 2.0}};
  // Samples 5 and 6 sit outside the old region.
  EXPECT_DOUBLE_EQ(escape_fraction(t, tl), 0.2);
}

TEST(CropRadius, CentreOfReferenceDisplay) {
  const ViewingGeometry g = reference_geometry();
  // Half of 480 px at the centre is atan(240 * pitch / d).
  const double expect = std::atan(240 * g.pitch_x_cm() / g.distance_cm) * 180.0 / M_PI;
  EXPECT_NEAR(crop_radius_deg({1920, 1080}, 480, g), expect, 1e-9);
}

TEST(Mtp, LowerBoundShape) {
  MtpOptions o;
  const auto s = measure_mtp(LatencyModel::lower_bound(), o);
  ASSERT_EQ(s.size(), 300u);
  std::vector<double> ms;
  for (const auto& m : s) {
    ASSERT_FALSE(m.timed_out);
    ASSERT_EQ(m.latency_us, m.photon_us - m.trigger_us);
    ms.push_back(m.latency_us / 1000.0);
  }
  const Ecdf e = ecdf(ms);
  EXPECT_LT(e.x.front(), 6.0);
  EXPECT_LT(e.quantile(0.5), 9.0);
}

TEST(Mtp, Deterministic) {
  MtpOptions o;
  o.n = 30;
  const auto a = measure_mtp(LatencyModel::fvideo(), o);
  const auto b = measure_mtp(LatencyModel::fvideo(), o);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i].photon_us, b[i].photon_us);
}

TEST(Mtp, TimeoutReported) {
  MtpOptions o;
  o.n = 5;
  o.timeout_us = 5'000;
  const auto s = measure_mtp(LatencyModel::fvideo(), o);
  for (const auto& m : s) {
    EXPECT_TRUE(m.timed_out);
    EXPECT_EQ(m.photon_us, m.trigger_us + 5'000);
  }
}

// Two-sided p from an independent Simpson integration of the t density.
double simpson_p(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  const auto f = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const int n = 20000;
  const double b = std::abs(t), h = b / n;
  double s = f(0) + f(b);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4 : 2);
  return 1.0 - 2.0 * s * h / 3.0;
}

TEST(Welch, TextbookExample) {
  const double a[] = {1, 2, 3, 4, 5}, b[] = {2, 3, 4, 5, 6};
  const WelchResult r = welch_t(a, b);
  EXPECT_NEAR(r.t, -1.0, 1e-12);
  EXPECT_NEAR(r.df, 8.0, 1e-12);
  EXPECT_NEAR(r.p, 0.347, 1e-3);
  EXPECT_NEAR(r.p, simpson_p(r.t, r.df), 1e-8);
}

TEST(Welch, IdenticalAndDegenerate) {
  const double a[] = {1, 2, 3, 4};
  const WelchResult r = welch_t(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_NEAR(r.p, 1.0, 1e-12);
  const double c[] = {2, 2, 2}, d[] = {3, 3, 3};
  const WelchResult g = welch_t(c, d);
  EXPECT_TRUE(g.degenerate);
  EXPECT_EQ(g.p, 0.0);
  const double one[] = {1};
  EXPECT_THROW(welch_t(one, a), std::invalid_argument);
}

TEST(Welch, ScaleInvariant) {
  const double a[] = {1.5, 2.0, 4.5, 3.0}, b[] = {2.0, 6.5, 5.0, 7.0, 4.0};
  double a3[4], b3[5];
  std::transform(std::begin(a), std::end(a), a3, [](double v) { return 3.0 * v; });
  std::transform(std::begin(b), std::end(b), b3, [](double v) { return 3.0 * v; });
  EXPECT_NEAR(welch_t(a, b).t, welch_t(a3, b3).t, 1e-12);
  EXPECT_NEAR(welch_t(a, b).p, welch_t(a3, b3).p, 1e-12);
}

TEST(Welch, AgreesWithIntegrationOnRandomSamples) {
  SplitMix64 rng(12);
  for (int k = 0; k < 25; ++k) {
    std::vector<double> a(static_cast<std::size_t>(rng.uniform_int(2, 30)));
    std::vector<double> b(static_cast<std::size_t>(rng.uniform_int(2, 30)));
    for (auto& v : a) v = rng.normal() * rng.uniform(0.5, 3);
    for (auto& v : b) v = rng.normal() + rng.uniform(-1, 1);
    const WelchResult r = welch_t(a, b);
    ASSERT_NEAR(r.p, simpson_p(r.t, r.df), 1e-6);
  }
}

TEST(Ecdf, StepsAndQuantiles) {
  const double v[] = {3, 1, 2, 2};
  const Ecdf e = ecdf(v);
  ASSERT_EQ(e.x, (std::vector<double>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(e.cdf(0.5), 0.0);
  EXPECT_DOUBLE_EQ(e.cdf(2.0), 0.75);
  EXPECT_DOUBLE_EQ(e.cdf(9.0), 1.0);
  EXPECT_DOUBLE_EQ(e.quantile(0.25), 1.0);
  EXPECT_DOUBLE_EQ(e.quantile(0.5), 2.0);
  EXPECT_DOUBLE_EQ(e.quantile(1.0), 3.0);
  const double three[] = {6, 7, 8};
  EXPECT_DOUBLE_EQ(ecdf(three).quantile(0.5), 7.0);
  const double single[] = {4.0};
  EXPECT_DOUBLE_EQ(ecdf(single).cdf(4.0), 1.0);
  EXPECT_DOUBLE_EQ(ecdf(single).cdf(std::nextafter(4.0, 0.0)), 0.0);
  EXPECT_THROW(ecdf(std::span<const double>{}), std::invalid_argument);
  const double nan[] = {1, std::nan("")};
  EXPECT_THROW(ecdf(nan), std::invalid_argument);
}

double sup_distance_to_uniform(const Ecdf& e) {
  double sup = 0.0;
  for (std::size_t i = 0; i < e.x.size(); ++i) {
    const double below = i == 0 ? 0.0 : e.f[i - 1];
    sup = std::max({sup, std::abs(e.f[i] - e.x[i]), std::abs(below - e.x[i])});
  }
  return sup;
}

// Dvoretzky-Kiefer-Wolfowitz at 95%: sqrt(ln(2 / 0.05) / 600) = 0.0784.
TEST(Ecdf, DkwExample) {
  SplitMix64 rng(1);
  std::vector<double> s(300);
  for (auto& v : s) v = rng.uniform();
  EXPECT_LT(sup_distance_to_uniform(ecdf(s)), 0.08);
}

// sup |F_n - F| <= sqrt(ln(2 / a) / 2n) with probability 1 - a; a = 1e-3
// leaves every seeded draw inside.
TEST(Ecdf, DkwBoundOnUniformSamples) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SplitMix64 rng(seed);
    std::vector<double> s(300);
    for (auto& v : s) v = rng.uniform();
    EXPECT_LE(sup_distance_to_uniform(ecdf(s)), std::sqrt(std::log(2.0 / 1e-3) / 600.0)) << "seed " << seed;
  }
}

}  // namespace
}  // namespace fovstream
