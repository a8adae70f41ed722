#pragma once

#include <cstdint>
#include <functional>

#include "fovstream/gazesim.hpp"
#include "fovstream/pipeline.hpp"
#include "fovstream/transport.hpp"
#include "fovstream/video.hpp"

namespace fovstream {

struct SessionConfig {
  FoveationConfig fov;
  LatencyModel latency;
  // Display geometry; its pixel dimensions must equal the video's.
  ServerOptions server;
  std::uint64_t seed = 1;
  ClockMode mode = ClockMode::virtual_time;
};

struct DisplayedFrame {
  std::int64_t vsync_us = 0;
  std::int64_t photon_us = 0;
  const Frame* frame = nullptr;
  // Changes whenever the displayed pixels change.
  std::uint64_t version = 0;
  int bg_frame_index = -1;
  bool has_fg = false;
  // Crop centre in display pixels, valid when has_fg.
  PixelPoint crop_center;
};

struct SessionStats {
  std::uint64_t bits_bg = 0;
  std::uint64_t bits_fg = 0;
  int packets_bg = 0;
  int packets_fg = 0;
  int frames_displayed = 0;
  double duration_s = 0.0;

  std::uint64_t bits_total() const { return bits_bg + bits_fg; }
  double bitrate_mbps() const { return duration_s > 0.0 ? bits_total() / duration_s / 1e6 : 0.0; }
};

using FrameObserver = std::function<void(const DisplayedFrame&)>;

// Replays `trace` through the tracker, the delayed uplink, the server, the
// delayed downlink and the vsync-paced client. The video index shown at
// server time T is floor(T * fps), looping. At each vsync the client applies
// every packet whose decode finished strictly before it.
SessionStats run_session(const VideoSource& video, const Trace& trace, const SessionConfig& cfg,
                         Codec& codec, const FrameObserver& observer = {});

}  // namespace fovstream
