#include "fovstream/gazesim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fovstream/rng.hpp"

namespace fovstream {

const char* to_csv_tag(GazeEvent e) {
  switch (e) {
    case GazeEvent::fixation:
      return "fix";
    case GazeEvent::saccade:
      return "sacc";
    case GazeEvent::suppressed:
      return "supp";
  }
  return "fix";
}

GazeEvent gaze_event_from_tag(const std::string& tag) {
  if (tag == "fix") return GazeEvent::fixation;
  if (tag == "sacc") return GazeEvent::saccade;
  if (tag == "supp") return GazeEvent::suppressed;
  throw std::invalid_argument("trace: unknown event tag '" + tag + "'");
}

std::int64_t Trace::duration_us() const {
  if (samples.empty()) return 0;
  return samples.back().t_us - samples.front().t_us + period_us();
}

const TraceSample& Trace::at(std::int64_t t_us) const {
  if (samples.empty()) throw std::out_of_range("trace: empty");
  const std::int64_t offset = t_us - samples.front().t_us;
  if (offset <= 0) return samples.front();
  const auto idx = static_cast<std::size_t>(offset / period_us());
  return samples[std::min(idx, samples.size() - 1)];
}

bool Trace::suppressed_at(std::int64_t t_us) const {
  return at(t_us).event != GazeEvent::fixation;
}

void OculomotorParams::validate() const {
  if (!(v_peak_deg_s > 0.0 && v_peak_deg_s <= 900.0)) {
    throw std::invalid_argument("oculomotor: v_peak must be in (0, 900] deg/s");
  }
  const double total = suppression_pre_ms + suppression_post_ms;
  if (suppression_pre_ms < 0.0 || suppression_post_ms < 0.0 || total < 50.0 || total > 200.0) {
    throw std::invalid_argument("oculomotor: suppression pre + post must be in [50, 200] ms");
  }
  if (sample_rate_hz <= 0 || 1'000'000 % sample_rate_hz != 0) {
    throw std::invalid_argument("oculomotor: sample rate must divide 1e6");
  }
  if (!(drift_arcmin_s >= 0.0)) throw std::invalid_argument("oculomotor: drift must be >= 0");
}

Trace gen_fixation(const DegreePoint& center, double duration_s, const OculomotorParams& p) {
  p.validate();
  if (!(duration_s >= 0.0)) throw std::invalid_argument("gen_fixation: duration must be >= 0");
  Trace trace;
  trace.sample_rate_hz = p.sample_rate_hz;
  const auto n = std::max<std::int64_t>(1, std::llround(duration_s * p.sample_rate_hz));
  trace.samples.reserve(static_cast<std::size_t>(n));

  // Isotropic Gaussian steps: E|step| = sigma * sqrt(pi / 2).
  const double mean_step_deg = p.drift_arcmin_s / 60.0 / p.sample_rate_hz;
  const double sigma = mean_step_deg / std::sqrt(std::numbers::pi / 2.0);
  SplitMix64 rng(p.rng_seed);
  DegreePoint pos = center;
  for (std::int64_t k = 0; k < n; ++k) {
    if (k > 0) {
      pos.x += sigma * rng.normal();
      pos.y += sigma * rng.normal();
    }
    trace.samples.push_back({k * trace.period_us(), pos, GazeEvent::fixation});
  }
  return trace;
}

Trace gen_saccade(const DegreePoint& from, const DegreePoint& to, const OculomotorParams& p) {
  p.validate();
  Trace trace;
  trace.sample_rate_hz = p.sample_rate_hz;
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  const double amplitude = std::hypot(dx, dy);
  if (amplitude == 0.0) return trace;

  const double min_duration_s = 2.0 * amplitude / p.v_peak_deg_s;
  const auto n = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(min_duration_s * p.sample_rate_hz - 1e-9)));
  const double steps = static_cast<double>(n);
  for (std::int64_t k = 1; k <= n; ++k) {
    const double u = k / steps;
    const double s = u <= 0.5 ? 2.0 * u * u : 1.0 - 2.0 * (1.0 - u) * (1.0 - u);
    DegreePoint pos = k == n ? to : DegreePoint{from.x + dx * s, from.y + dy * s};
    trace.samples.push_back({k * trace.period_us(), pos, GazeEvent::saccade});
  }
  SaccadeSpan span;
  span.start_us = 0;
  span.end_us = n * trace.period_us();
  span.supp_start_us = -std::llround(p.suppression_pre_ms * 1000.0);
  span.supp_end_us = std::max<std::int64_t>(span.end_us, std::llround(p.suppression_post_ms * 1000.0));
  trace.saccades.push_back(span);
  return trace;
}

namespace {

void apply_event_tags(Trace& trace) {
  for (auto& s : trace.samples) s.event = GazeEvent::fixation;
  // Both lists are time-ordered; walk them together.
  std::size_t first = 0;
  for (const auto& span : trace.saccades) {
    while (first < trace.samples.size() && trace.samples[first].t_us < span.supp_start_us) ++first;
    for (std::size_t i = first;
         i < trace.samples.size() && trace.samples[i].t_us <= span.supp_end_us; ++i) {
      auto& s = trace.samples[i];
      if (s.t_us > span.start_us && s.t_us <= span.end_us) {
        s.event = GazeEvent::saccade;
      } else if (s.event == GazeEvent::fixation) {
        s.event = GazeEvent::suppressed;
      }
    }
  }
}

}  // namespace

Trace gen_scene_trace(const std::vector<ScriptPoint>& script, const OculomotorParams& p) {
  p.validate();
  if (script.empty()) throw std::invalid_argument("gen_scene_trace: script must be non-empty");
  Trace trace;
  trace.sample_rate_hz = p.sample_rate_hz;
  const std::int64_t period = trace.period_us();

  for (std::size_t i = 0; i < script.size(); ++i) {
    OculomotorParams fp = p;
    fp.rng_seed = mix_seed(p.rng_seed, i);
    std::int64_t t0 = 0;
    if (!trace.samples.empty()) {
      const TraceSample last = trace.samples.back();
      Trace sacc = gen_saccade(last.pos, script[i].target, p);
      for (auto s : sacc.samples) {
        s.t_us += last.t_us;
        trace.samples.push_back(s);
      }
      for (auto span : sacc.saccades) {
        span.start_us += last.t_us;
        span.end_us += last.t_us;
        span.supp_start_us += last.t_us;
        span.supp_end_us += last.t_us;
        trace.saccades.push_back(span);
      }
      t0 = trace.samples.back().t_us + period;
    }
    Trace fix = gen_fixation(script[i].target, script[i].dwell_s, fp);
    for (auto s : fix.samples) {
      s.t_us += t0;
      trace.samples.push_back(s);
    }
  }
  apply_event_tags(trace);
  return trace;
}

ScenePreset scene_preset_from_name(const std::string& name) {
  if (name == "fixation") return ScenePreset::fixation;
  if (name == "dialogue") return ScenePreset::dialogue;
  if (name == "crowd") return ScenePreset::crowd;
  throw std::invalid_argument("unknown scene preset '" + name + "'");
}

const char* to_string(ScenePreset preset) {
  switch (preset) {
    case ScenePreset::fixation:
      return "fixation";
    case ScenePreset::dialogue:
      return "dialogue";
    case ScenePreset::crowd:
      return "crowd";
  }
  return "fixation";
}

std::vector<ScriptPoint> preset_script(ScenePreset preset, double duration_s, std::uint64_t seed) {
  SplitMix64 rng(mix_seed(seed, 0x5ce7e));
  std::vector<ScriptPoint> script;
  double elapsed = 0.0;
  switch (preset) {
    case ScenePreset::fixation:
      script.push_back({{0.0, 0.0}, duration_s});
      break;
    case ScenePreset::dialogue: {
      // Two speakers; the gaze follows the conversation back and forth.
      const DegreePoint speakers[2] = {{-8.0, 1.5}, {8.0, 1.5}};
      int who = static_cast<int>(rng.uniform_int(0, 1));
      while (elapsed < duration_s) {
        const DegreePoint c = speakers[who];
        const double dwell = rng.uniform(0.20, 0.40);
        script.push_back({{c.x + rng.uniform(-0.5, 0.5), c.y + rng.uniform(-0.5, 0.5)}, dwell});
        elapsed += dwell;
        who ^= 1;
      }
      break;
    }
    case ScenePreset::crowd: {
      // Short dwells jumping across a busy region.
      DegreePoint cur{rng.uniform(-8.0, 8.0), rng.uniform(-4.0, 4.0)};
      while (elapsed < duration_s) {
        const double dwell = rng.uniform(0.12, 0.25);
        script.push_back({cur, dwell});
        elapsed += dwell;
        for (int attempt = 0; attempt < 64; ++attempt) {
          const double amp = rng.uniform(11.0, 15.0);
          const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
          const DegreePoint next{cur.x + amp * std::cos(dir), cur.y + amp * std::sin(dir)};
          if (std::abs(next.x) <= 18.0 && std::abs(next.y) <= 9.0) {
            cur = next;
            break;
          }
        }
      }
      break;
    }
  }
  return script;
}

Trace gen_preset_trace(ScenePreset preset, double duration_s, const OculomotorParams& p) {
  Trace trace = gen_scene_trace(preset_script(preset, duration_s, p.rng_seed), p);
  const auto n = static_cast<std::size_t>(std::max<std::int64_t>(
      1, std::llround(duration_s * p.sample_rate_hz)));
  if (trace.samples.size() > n) trace.samples.resize(n);
  const std::int64_t last_t = trace.samples.back().t_us;
  std::erase_if(trace.saccades, [&](const SaccadeSpan& s) { return s.start_us >= last_t; });
  return trace;
}

Trace asg_step(const DegreePoint& pos_a, const DegreePoint& pos_b, std::int64_t trigger_us,
               std::int64_t duration_us, int sample_rate_hz) {
  if (sample_rate_hz <= 0 || 1'000'000 % sample_rate_hz != 0) {
    throw std::invalid_argument("asg_step: sample rate must divide 1e6");
  }
  Trace trace;
  trace.sample_rate_hz = sample_rate_hz;
  const std::int64_t period = trace.period_us();
  for (std::int64_t t = 0; t < std::max(duration_us, period); t += period) {
    trace.samples.push_back({t, t < trigger_us ? pos_a : pos_b, GazeEvent::fixation});
  }
  return trace;
}

AsgSequence asg_sequence(const DegreePoint& pos_a, const DegreePoint& pos_b, int n,
                         std::int64_t first_trigger_us, std::int64_t min_gap_us,
                         std::int64_t max_gap_us, std::uint64_t seed, int sample_rate_hz) {
  if (n < 0 || min_gap_us <= 0 || max_gap_us < min_gap_us) {
    throw std::invalid_argument("asg_sequence: bad toggle schedule");
  }
  AsgSequence seq;
  const std::int64_t period = 1'000'000 / sample_rate_hz;
  SplitMix64 rng(seed);
  std::int64_t t = first_trigger_us / period * period;
  for (int i = 0; i < n; ++i) {
    seq.triggers_us.push_back(t);
    seq.targets.push_back(i % 2 == 0 ? pos_b : pos_a);
    const std::int64_t gap = rng.uniform_int(min_gap_us / period, max_gap_us / period) * period;
    t += gap;
  }
  // The trace runs one maximum gap past the last toggle.
  seq.trace = asg_step(pos_a, pos_a, 0, t + max_gap_us, sample_rate_hz);
  std::size_t k = 0;
  DegreePoint cur = pos_a;
  for (auto& s : seq.trace.samples) {
    while (k < seq.triggers_us.size() && seq.triggers_us[k] <= s.t_us) cur = seq.targets[k++];
    s.pos = cur;
  }
  return seq;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "t_us,x_deg,y_deg,event\n";
  char buf[96];
  for (const auto& s : trace.samples) {
    std::snprintf(buf, sizeof buf, "%lld,%.6f,%.6f,%s\n", static_cast<long long>(s.t_us), s.pos.x,
                  s.pos.y, to_csv_tag(s.event));
    out << buf;
  }
}

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "t_us,x_deg,y_deg,event") {
    throw std::invalid_argument("trace csv: missing header t_us,x_deg,y_deg,event");
  }
  Trace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string t, x, y, ev;
    if (!std::getline(ss, t, ',') || !std::getline(ss, x, ',') || !std::getline(ss, y, ',') ||
        !std::getline(ss, ev)) {
      throw std::invalid_argument("trace csv: malformed line " + std::to_string(lineno));
    }
    trace.samples.push_back({std::stoll(t), {std::stod(x), std::stod(y)}, gaze_event_from_tag(ev)});
  }
  if (trace.samples.size() >= 2) {
    const std::int64_t dt = trace.samples[1].t_us - trace.samples[0].t_us;
    if (dt <= 0 || 1'000'000 % dt != 0) throw std::invalid_argument("trace csv: bad sample spacing");
    trace.sample_rate_hz = static_cast<int>(1'000'000 / dt);
    for (std::size_t i = 1; i < trace.samples.size(); ++i) {
      if (trace.samples[i].t_us - trace.samples[i - 1].t_us != dt) {
        throw std::invalid_argument("trace csv: non-uniform sample spacing at line " +
                                    std::to_string(i + 2));
      }
    }
  }
  // Recover annotations: each run of saccade samples inside a run of
  // non-fixation samples.
  const std::int64_t period = trace.period_us();
  std::size_t i = 0;
  while (i < trace.samples.size()) {
    if (trace.samples[i].event == GazeEvent::fixation) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < trace.samples.size() && trace.samples[j].event != GazeEvent::fixation) ++j;
    std::size_t k = i;
    while (k < j) {
      if (trace.samples[k].event != GazeEvent::saccade) {
        ++k;
        continue;
      }
      std::size_t m = k;
      while (m < j && trace.samples[m].event == GazeEvent::saccade) ++m;
      trace.saccades.push_back({trace.samples[k].t_us - period, trace.samples[m - 1].t_us,
                                trace.samples[i].t_us, trace.samples[j - 1].t_us});
      k = m;
    }
    i = j;
  }
  return trace;
}

}  // namespace fovstream
