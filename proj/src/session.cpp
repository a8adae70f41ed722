#include "fovstream/session.hpp"

#include <cmath>
#include <stdexcept>

#include "fovstream/rng.hpp"

namespace fovstream {

SessionStats run_session(const VideoSource& video, const Trace& trace, const SessionConfig& cfg,
                         Codec& codec, const FrameObserver& observer) {
  const int w = video.width(), h = video.height();
  const ViewingGeometry& geom = cfg.server.geom;
  geom.validate();
  if (geom.width_px != w || geom.height_px != h) {
    throw std::invalid_argument("session: display geometry must match the video dimensions");
  }
  cfg.fov.validate(w, h);
  cfg.latency.validate();
  if (trace.samples.empty()) throw std::invalid_argument("session: empty trace");

  const LatencyModel& lat = cfg.latency;
  const std::int64_t uplink = std::llround(lat.uplink_us + lat.artificial_us);
  const std::int64_t downlink = std::llround(lat.encode_us + lat.downlink_us + lat.decode_us);
  const std::int64_t display_delay = std::llround(lat.display_input_us);
  const std::int64_t period = lat.frame_period_us();
  const std::int64_t end_us = trace.samples.back().t_us;

  VirtualClock clock(cfg.mode);
  DelayedChannel<GazeSample> up;
  DelayedChannel<FramePacket> down;
  ServerState server;
  ClientState client;
  SessionStats stats;
  stats.duration_s = static_cast<double>(end_us - trace.samples.front().t_us + trace.period_us()) / 1e6;

  const auto frame_at = [&](std::int64_t t_us) {
    const auto idx = static_cast<std::int64_t>(std::floor(static_cast<double>(t_us) * video.fps() / 1e6));
    return static_cast<int>(((idx % video.frame_count()) + video.frame_count()) % video.frame_count());
  };

  int current_idx = -1;
  Frame current;
  const auto server_poll = [&] {
    while (auto g = up.poll(clock.now())) {
      if (server.any_gaze && g->seq <= server.last_seq) continue;
      const int idx = frame_at(clock.now());
      if (idx != current_idx) {
        current = video.frame(idx);
        current_idx = idx;
      }
      auto packets = server_step(current, idx, idx != server.last_frame_index, *g, cfg.fov, cfg.server,
                                 server, codec);
      for (FramePacket& p : packets) {
        if (p.stream == StreamKind::background) {
          stats.bits_bg += p.payload.bit_count();
          ++stats.packets_bg;
        } else {
          stats.bits_fg += p.payload.bit_count();
          ++stats.packets_fg;
        }
        down.send(std::move(p), clock.now(), downlink);
      }
    }
  };

  SplitMix64 tracker_rng(mix_seed(cfg.seed, 0x7261636b));
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const TraceSample& s = trace.samples[i];
    const PixelPoint px = to_pixels(s.pos, geom);
    GazeSample g{s.t_us, px.x, px.y, s.event, i + 1};
    const std::int64_t avail = s.t_us + lat.tracker.sample(tracker_rng);
    clock.schedule(avail, [&, g, avail] {
      up.send(g, avail, uplink);
      clock.schedule(avail + uplink, server_poll);
    });
  }

  for (std::int64_t v = next_vsync(trace.samples.front().t_us, lat.refresh_hz); v <= end_us; v += period) {
    clock.schedule(v, [&, v] {
      std::vector<FramePacket> ready;
      while (auto p = down.poll(v - 1)) ready.push_back(std::move(*p));
      const bool had = client.composed.has_value();
      if (!ready.empty() || !had) client_step(ready, client, cfg.fov, w, h, w, h, codec);
      if (!client.composed) return;
      ++stats.frames_displayed;
      if (!observer) return;
      DisplayedFrame df;
      df.vsync_us = v;
      df.photon_us = v + display_delay;
      df.frame = &*client.composed;
      df.version = client.version;
      df.bg_frame_index = client.bg_frame_index;
      df.has_fg = client.foreground.has_value();
      if (df.has_fg) {
        df.crop_center = {client.fg_origin.x + client.fg_size_display / 2.0,
                          client.fg_origin.y + client.fg_size_display / 2.0};
      }
      observer(df);
    });
  }

  while (clock.step()) {
  }
  return stats;
}

}  // namespace fovstream
