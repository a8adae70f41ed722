#include "fovstream/demo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>

namespace fovstream {

DemoSession::DemoSession(std::shared_ptr<const FrameCache> video, std::vector<FoveationConfig> ladder,
                         const LatencyModel& latency, const ServerOptions& server, DemoOptions opts)
    : video_(std::move(video)),
      ladder_(std::move(ladder)),
      latency_(latency),
      server_opts_(server),
      opts_(opts),
      codec_(make_ref_codec(), std::size_t{256} << 20) {
  if (!video_) throw std::invalid_argument("demo: no video");
  if (ladder_.empty()) throw std::invalid_argument("demo: empty ladder");
  for (const auto& rung : ladder_) rung.validate(video_->width(), video_->height());
  if (server_opts_.geom.width_px != video_->width() || server_opts_.geom.height_px != video_->height()) {
    throw std::invalid_argument("demo: display geometry must match the video dimensions");
  }
  if (opts_.demo_width < 1 || opts_.demo_width > video_->width()) {
    throw std::invalid_argument("demo: demo width must be within [1, video width]");
  }
  if (!(opts_.frame_rate_hz > 0.0) || opts_.stats_interval_us < 1) {
    throw std::invalid_argument("demo: frame rate and stats interval must be positive");
  }
  latency_.validate();
}

void DemoSession::on_message(std::span<const std::uint8_t> bytes, std::int64_t now_us) {
  const WireMessage msg = deserialize_msg(bytes);
  if (const auto* g = std::get_if<GazeMsg>(&msg)) {
    on_gaze(*g, now_us);
  } else if (const auto* c = std::get_if<ConfigMsg>(&msg)) {
    on_config(*c);
  } else {
    throw ProtocolError("demo: clients may only send GAZE and CONFIG");
  }
}

void DemoSession::on_gaze(const GazeMsg& msg, std::int64_t now_us) {
  const double w = video_->width(), h = video_->height();
  const double x = std::isfinite(msg.x_px) ? std::clamp(static_cast<double>(msg.x_px), 0.0, w) : w / 2.0;
  const double y = std::isfinite(msg.y_px) ? std::clamp(static_cast<double>(msg.y_px), 0.0, h) : h / 2.0;
  GazeSample g{now_us, x, y, GazeEvent::fixation, ++gaze_seq_};
  uplink_.send(g, now_us, std::llround(latency_.uplink_us + latency_.artificial_us));
}

void DemoSession::on_config(const ConfigMsg& msg) {
  const double ms = std::isfinite(msg.artificial_delay_ms)
                        ? std::clamp(static_cast<double>(msg.artificial_delay_ms), 0.0, opts_.max_artificial_ms)
                        : 0.0;
  latency_.artificial_us = ms * 1000.0;
  const int idx = std::min<int>(msg.ladder_index, static_cast<int>(ladder_.size()) - 1);
  if (idx != ladder_index_) {
    ladder_index_ = idx;
    reconfigured_ = true;
  }
}

int DemoSession::video_index(std::int64_t now_us) const {
  const std::int64_t since = now_us - start_us_.value_or(now_us);
  const auto idx = static_cast<std::int64_t>(std::floor(static_cast<double>(since) * video_->fps() / 1e6));
  return static_cast<int>(idx % video_->frame_count());
}

void DemoSession::server_process(const GazeSample& g, std::int64_t now_us, bool force_frame) {
  const int idx = video_index(now_us);
  const bool changed = force_frame || idx != server_.last_frame_index;
  auto packets = server_step(video_->at(idx), idx, changed, g, ladder_[ladder_index_], server_opts_, server_,
                             codec_);
  const std::int64_t delay = std::llround(latency_.encode_us + latency_.downlink_us + latency_.decode_us);
  for (FramePacket& p : packets) {
    const std::uint64_t bits = p.payload.bit_count();
    (p.stream == StreamKind::background ? pending_bits_bg_ : pending_bits_fg_) += bits;
    window_.emplace_back(now_us, bits);
    downlink_.send(std::move(p), now_us, delay);
  }
}

std::vector<WireMessage> DemoSession::poll(std::int64_t now_us) {
  if (!start_us_) {
    start_us_ = now_us;
    next_frame_us_ = now_us;
    next_stats_us_ = now_us;
    // Until the viewer reports a gaze, foveate the centre.
    last_gaze_ = GazeSample{now_us, video_->width() / 2.0, video_->height() / 2.0, GazeEvent::fixation, 0};
  }

  bool served = false;
  while (auto g = uplink_.poll(now_us)) {
    server_process(*g, now_us, reconfigured_);
    reconfigured_ = false;
    last_gaze_ = *g;
    served = true;
  }
  // The background follows the video even while the gaze is still.
  if (!served && (reconfigured_ || video_index(now_us) != server_.last_frame_index)) {
    server_process(*last_gaze_, now_us, reconfigured_);
    reconfigured_ = false;
  }

  while (!window_.empty() && window_.front().first <= now_us - 1'000'000) window_.pop_front();

  std::vector<FramePacket> ready;
  while (auto p = downlink_.poll(now_us)) ready.push_back(std::move(*p));
  const Frame* shown = client_step(ready, client_, ladder_[ladder_index_], video_->width(), video_->height(),
                                   video_->width(), video_->height(), codec_);

  std::vector<WireMessage> out;
  if (shown && now_us >= next_frame_us_) {
    const int dw = opts_.demo_width;
    const int dh = std::max(1, static_cast<int>(std::lround(static_cast<double>(dw) * video_->height() / video_->width())));
    const Frame rgb = ycbcr_to_rgb(scale_frame(*shown, dw, dh));
    FrameMsg f;
    f.t_us = static_cast<std::uint64_t>(now_us);
    f.frame_idx = static_cast<std::uint32_t>(std::max(0, client_.bg_frame_index));
    f.width = static_cast<std::uint16_t>(dw);
    f.height = static_cast<std::uint16_t>(dh);
    f.bits_bg = static_cast<std::uint32_t>(std::min<std::uint64_t>(pending_bits_bg_, std::numeric_limits<std::uint32_t>::max()));
    f.bits_fg = static_cast<std::uint32_t>(std::min<std::uint64_t>(pending_bits_fg_, std::numeric_limits<std::uint32_t>::max()));
    pending_bits_bg_ = pending_bits_fg_ = 0;
    f.rgb.resize(static_cast<std::size_t>(dw) * dh * 3);
    for (int y = 0; y < dh; ++y) {
      for (int x = 0; x < dw; ++x) {
        const std::size_t i = (static_cast<std::size_t>(y) * dw + x) * 3;
        for (int c = 0; c < 3; ++c) f.rgb[i + c] = rgb.planes[c](y, x);
      }
    }
    out.emplace_back(std::move(f));
    const auto period = static_cast<std::int64_t>(std::llround(1e6 / opts_.frame_rate_hz));
    while (next_frame_us_ <= now_us) next_frame_us_ += period;
  }
  if (now_us >= next_stats_us_) {
    out.emplace_back(StatsMsg{static_cast<float>(bitrate_mbps(now_us)), static_cast<float>(mtp_ms_est()),
                              static_cast<std::uint8_t>(ladder_index_)});
    while (next_stats_us_ <= now_us) next_stats_us_ += opts_.stats_interval_us;
  }
  return out;
}

double DemoSession::bitrate_mbps(std::int64_t now_us) const {
  std::uint64_t bits = 0;
  for (const auto& [t, b] : window_) {
    if (t > now_us - 1'000'000) bits += b;
  }
  return static_cast<double>(bits) / 1e6;
}

std::optional<PixelPoint> DemoSession::crop_center() const {
  if (!client_.foreground) return std::nullopt;
  return PixelPoint{client_.fg_origin.x + client_.fg_size_display / 2.0,
                    client_.fg_origin.y + client_.fg_size_display / 2.0};
}

}  // namespace fovstream
