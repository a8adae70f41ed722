#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fovstream/pipeline.hpp"
#include "fovstream/transport.hpp"
#include "fovstream/video.hpp"

namespace fovstream {

struct DemoOptions {
  // Width of the FRAME payload; height keeps the source aspect.
  int demo_width = 480;
  double frame_rate_hz = 30.0;
  std::int64_t stats_interval_us = 500'000;
  // Upper end of the CONFIG latency slider.
  double max_artificial_ms = 100.0;
};

// One viewer's live session, independent of the socket. Time is passed in
// explicitly so the same logic runs under a test clock or the wall clock.
// Not thread-safe; the server drives it from one strand.
class DemoSession {
 public:
  DemoSession(std::shared_ptr<const FrameCache> video, std::vector<FoveationConfig> ladder,
              const LatencyModel& latency, const ServerOptions& server, DemoOptions opts = {});

  // Parses and applies one client message. Throws ProtocolError on malformed
  // bytes or a server-to-client message type.
  void on_message(std::span<const std::uint8_t> bytes, std::int64_t now_us);
  void on_gaze(const GazeMsg& msg, std::int64_t now_us);
  // Out-of-range values are clamped.
  void on_config(const ConfigMsg& msg);

  // Runs the pipeline up to `now_us` and returns what is due for the viewer:
  // at most one FRAME per output period and a STATS at its interval.
  std::vector<WireMessage> poll(std::int64_t now_us);

  int ladder_index() const { return ladder_index_; }
  double artificial_ms() const { return latency_.artificial_us / 1000.0; }
  double mtp_ms_est() const { return total_latency_us(latency_) / 1000.0; }
  double bitrate_mbps(std::int64_t now_us) const;
  // Centre of the foreground crop on screen (source pixels), once one arrived.
  std::optional<PixelPoint> crop_center() const;

 private:
  void server_process(const GazeSample& g, std::int64_t now_us, bool force_frame);
  int video_index(std::int64_t now_us) const;

  std::shared_ptr<const FrameCache> video_;
  std::vector<FoveationConfig> ladder_;
  LatencyModel latency_;
  ServerOptions server_opts_;
  DemoOptions opts_;
  int ladder_index_ = 0;

  CachingCodec codec_;
  ServerState server_;
  ClientState client_;
  DelayedChannel<GazeSample> uplink_;
  DelayedChannel<FramePacket> downlink_;
  std::optional<GazeSample> last_gaze_;
  std::uint64_t gaze_seq_ = 0;
  bool reconfigured_ = false;

  std::optional<std::int64_t> start_us_;
  std::int64_t next_frame_us_ = 0;
  std::int64_t next_stats_us_ = 0;
  std::uint64_t pending_bits_bg_ = 0, pending_bits_fg_ = 0;
  // (arrival time, bits) for the rolling one-second bitrate.
  std::deque<std::pair<std::int64_t, std::uint64_t>> window_;
};

}  // namespace fovstream
