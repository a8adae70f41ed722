#include "fovstream/transport.hpp"

#include <cmath>
#include <cstring>
#include <thread>

namespace fovstream {

std::int64_t DelayDistribution::sample(SplitMix64& rng) const {
  if (jitter_us <= 0.0) return std::llround(mean_us);
  return std::llround(rng.uniform(mean_us - jitter_us, mean_us + jitter_us));
}

void LatencyModel::validate() const {
  const double stages[] = {tracker.mean_us - tracker.jitter_us, uplink_us, encode_us,
                           downlink_us, decode_us, display_input_us, artificial_us};
  for (double s : stages) {
    if (!(s >= 0.0)) throw std::invalid_argument("latency model: stage delays must be >= 0");
  }
  if (!(tracker.jitter_us >= 0.0)) throw std::invalid_argument("latency model: jitter must be >= 0");
  if (!(refresh_hz > 0.0)) throw std::invalid_argument("latency model: refresh rate must be > 0");
}

std::int64_t LatencyModel::frame_period_us() const {
  return static_cast<std::int64_t>(std::floor(1e6 / refresh_hz));
}

LatencyModel LatencyModel::lower_bound() {
  LatencyModel m;
  m.tracker = {1650.0, 500.0};
  m.display_input_us = 4200.0;
  m.refresh_hz = 240.0;
  return m;
}

LatencyModel LatencyModel::fvideo() {
  LatencyModel m;
  m.tracker = {1650.0, 500.0};
  m.encode_us = 1200.0;
  m.decode_us = 1000.0;
  m.refresh_hz = 144.0;
  // The slower display costs 2.8 ms over the lower-bound setup in total:
  // input latency plus the longer vsync wait at 144 Hz.
  const double vsync_delta =
      0.5 * (m.frame_period_us() - LatencyModel::lower_bound().frame_period_us());
  m.display_input_us = LatencyModel::lower_bound().display_input_us + 2800.0 - vsync_delta;
  return m;
}

std::int64_t next_vsync(std::int64_t now_us, double refresh_hz) {
  if (!(refresh_hz > 0.0)) throw std::invalid_argument("next_vsync: refresh rate must be > 0");
  const auto period = static_cast<std::int64_t>(std::floor(1e6 / refresh_hz));
  const std::int64_t k = now_us >= 0 ? now_us / period : -((-now_us + period - 1) / period);
  return (k + 1) * period;
}

double total_latency_us(const LatencyModel& m) {
  m.validate();
  return m.tracker.mean_us + m.uplink_us + m.encode_us + m.downlink_us + m.decode_us +
         m.display_input_us + static_cast<double>(m.frame_period_us() / 2) + m.artificial_us;
}

VirtualClock::VirtualClock(ClockMode mode)
    : mode_(mode), origin_(std::chrono::steady_clock::now()) {}

void VirtualClock::schedule(std::int64_t at_us, std::function<void()> fn) {
  if (at_us < now_us_) throw std::logic_error("clock: cannot schedule in the past");
  events_.push(Event{at_us, next_seq_++, std::move(fn)});
}

void VirtualClock::pace(std::int64_t t_us) const {
  if (mode_ == ClockMode::wall_clock) std::this_thread::sleep_until(origin_ + std::chrono::microseconds(t_us));
}

bool VirtualClock::step() {
  if (events_.empty()) return false;
  Event ev = std::move(const_cast<Event&>(events_.top()));
  events_.pop();
  pace(ev.at);
  now_us_ = ev.at;
  ev.fn();
  return true;
}

void VirtualClock::run_until(std::int64_t t_us) {
  while (!events_.empty() && events_.top().at <= t_us) step();
  if (t_us > now_us_) {
    pace(t_us);
    now_us_ = t_us;
  }
}

namespace {

constexpr std::uint8_t kGaze = 0x01;
constexpr std::uint8_t kFrame = 0x02;
constexpr std::uint8_t kStats = 0x03;
constexpr std::uint8_t kConfig = 0x04;

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u32(bits);
  }
  std::vector<std::uint8_t> out;

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::size_t remaining() const { return in_.size() - pos_; }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void finish() const {
    if (pos_ != in_.size()) throw ProtocolError("wire: trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw ProtocolError("wire: truncated message");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

struct Serializer {
  Writer& w;
  void operator()(const GazeMsg& m) const {
    w.u8(kGaze);
    w.u64(m.t_us);
    w.f32(m.x_px);
    w.f32(m.y_px);
  }
  void operator()(const FrameMsg& m) const {
    if (m.rgb.size() != static_cast<std::size_t>(m.width) * m.height * 3) {
      throw ProtocolError("wire: FRAME payload does not match dimensions");
    }
    w.u8(kFrame);
    w.u64(m.t_us);
    w.u32(m.frame_idx);
    w.u16(m.width);
    w.u16(m.height);
    w.u32(m.bits_bg);
    w.u32(m.bits_fg);
    w.out.insert(w.out.end(), m.rgb.begin(), m.rgb.end());
  }
  void operator()(const StatsMsg& m) const {
    w.u8(kStats);
    w.f32(m.bitrate_mbps);
    w.f32(m.mtp_ms_est);
    w.u8(m.ladder_index);
  }
  void operator()(const ConfigMsg& m) const {
    w.u8(kConfig);
    w.f32(m.artificial_delay_ms);
    w.u8(m.ladder_index);
  }
};

}  // namespace

std::vector<std::uint8_t> serialize_msg(const WireMessage& msg) {
  Writer w;
  std::visit(Serializer{w}, msg);
  return std::move(w.out);
}

WireMessage deserialize_msg(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw ProtocolError("wire: empty message");
  Reader r(bytes);
  switch (r.u8()) {
    case kGaze: {
      GazeMsg m;
      m.t_us = r.u64();
      m.x_px = r.f32();
      m.y_px = r.f32();
      r.finish();
      return m;
    }
    case kFrame: {
      FrameMsg m;
      m.t_us = r.u64();
      m.frame_idx = r.u32();
      m.width = r.u16();
      m.height = r.u16();
      m.bits_bg = r.u32();
      m.bits_fg = r.u32();
      const std::size_t n = static_cast<std::size_t>(m.width) * m.height * 3;
      if (r.remaining() != n) throw ProtocolError("wire: FRAME payload does not match dimensions");
      auto px = r.take(n);
      m.rgb.assign(px.begin(), px.end());
      return m;
    }
    case kStats: {
      StatsMsg m;
      m.bitrate_mbps = r.f32();
      m.mtp_ms_est = r.f32();
      m.ladder_index = r.u8();
      r.finish();
      return m;
    }
    case kConfig: {
      ConfigMsg m;
      m.artificial_delay_ms = r.f32();
      m.ladder_index = r.u8();
      r.finish();
      return m;
    }
    default:
      throw ProtocolError("wire: unknown message type " + std::to_string(bytes[0]));
  }
}

}  // namespace fovstream
