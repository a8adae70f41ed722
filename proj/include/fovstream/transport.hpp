#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fovstream/gazesim.hpp"
#include "fovstream/rng.hpp"

namespace fovstream {

// A tracker report in display pixels.
struct GazeSample {
  std::int64_t timestamp_us = 0;
  double x_px = 0.0;
  double y_px = 0.0;
  GazeEvent event = GazeEvent::fixation;
  std::uint64_t seq = 0;
};

// Uniform on [mean - jitter, mean + jitter], in microseconds.
struct DelayDistribution {
  double mean_us = 0.0;
  double jitter_us = 0.0;

  std::int64_t sample(SplitMix64& rng) const;
};

// Motion-to-photon stage budgets. Everything is in microseconds except the
// refresh rate.
struct LatencyModel {
  // Eye movement to gaze sample available in software.
  DelayDistribution tracker{1650.0, 500.0};
  double uplink_us = 0.0;
  double encode_us = 0.0;
  double downlink_us = 0.0;
  double decode_us = 0.0;
  // Frame submitted at vsync to pixels changing.
  double display_input_us = 7600.0;
  double refresh_hz = 144.0;
  // Extra delay applied to gaze on its way to the server.
  double artificial_us = 0.0;

  void validate() const;
  std::int64_t frame_period_us() const;

  // Eye tracker plus a 240 Hz display, no video processing.
  static LatencyModel lower_bound();
  // The full two-stream pipeline on a 144 Hz 4K display.
  static LatencyModel fvideo();
};

// Smallest multiple of the (integer microsecond) frame period strictly
// greater than `now_us`.
std::int64_t next_vsync(std::int64_t now_us, double refresh_hz);

// Expected motion-to-photon latency: stage means, half a frame period of
// vsync alignment, and the artificial delay.
double total_latency_us(const LatencyModel& model);

// Messages become visible at send time + delay; equal delivery times keep
// send order. Safe to share between a producer and a consumer thread.
template <typename T>
class DelayedChannel {
 public:
  void send(T msg, std::int64_t now_us, std::int64_t delay_us) {
    if (delay_us < 0) throw std::invalid_argument("channel: delay must be >= 0");
    std::lock_guard lock(mu_);
    queue_.push(Entry{now_us + delay_us, next_seq_++, std::move(msg)});
  }

  std::optional<T> poll(std::int64_t now_us) {
    std::lock_guard lock(mu_);
    if (queue_.empty() || queue_.top().deliver_at > now_us) return std::nullopt;
    T msg = std::move(const_cast<Entry&>(queue_.top()).msg);
    queue_.pop();
    return msg;
  }

  std::optional<std::int64_t> next_delivery() const {
    std::lock_guard lock(mu_);
    if (queue_.empty()) return std::nullopt;
    return queue_.top().deliver_at;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return queue_.size();
  }

 private:
  struct Entry {
    std::int64_t deliver_at;
    std::uint64_t seq;
    T msg;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.deliver_at != b.deliver_at ? a.deliver_at > b.deliver_at : a.seq > b.seq;
    }
  };

  mutable std::mutex mu_;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  std::uint64_t next_seq_ = 0;
};

enum class ClockMode { virtual_time, wall_clock };

// Discrete-event scheduler. In virtual mode time jumps from event to event;
// in wall-clock mode dispatch waits until the event's time has elapsed since
// construction. Event order is identical in both.
class VirtualClock {
 public:
  explicit VirtualClock(ClockMode mode = ClockMode::virtual_time);

  std::int64_t now() const { return now_us_; }
  ClockMode mode() const { return mode_; }

  // Throws std::logic_error when `at_us` is in the past.
  void schedule(std::int64_t at_us, std::function<void()> fn);

  // Dispatches the next event. False when the queue is empty.
  bool step();
  // Dispatches every event at or before `t_us`, then advances to `t_us`.
  void run_until(std::int64_t t_us);
  bool idle() const { return events_.empty(); }

 private:
  struct Event {
    std::int64_t at;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };
  void pace(std::int64_t t_us) const;

  ClockMode mode_;
  std::int64_t now_us_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::chrono::steady_clock::time_point origin_;
};

// Demo wire protocol: little-endian, one message per socket frame.
struct GazeMsg {
  std::uint64_t t_us = 0;
  float x_px = 0.0f;
  float y_px = 0.0f;
  friend bool operator==(const GazeMsg&, const GazeMsg&) = default;
};

struct FrameMsg {
  std::uint64_t t_us = 0;
  std::uint32_t frame_idx = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint32_t bits_bg = 0;
  std::uint32_t bits_fg = 0;
  // Packed 8-bit RGB, width * height * 3 bytes.
  std::vector<std::uint8_t> rgb;
  friend bool operator==(const FrameMsg&, const FrameMsg&) = default;
};

struct StatsMsg {
  float bitrate_mbps = 0.0f;
  float mtp_ms_est = 0.0f;
  std::uint8_t ladder_index = 0;
  friend bool operator==(const StatsMsg&, const StatsMsg&) = default;
};

struct ConfigMsg {
  float artificial_delay_ms = 0.0f;
  std::uint8_t ladder_index = 0;
  friend bool operator==(const ConfigMsg&, const ConfigMsg&) = default;
};

using WireMessage = std::variant<GazeMsg, FrameMsg, StatsMsg, ConfigMsg>;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> serialize_msg(const WireMessage& msg);
// Throws ProtocolError on empty input, unknown type bytes, or a length that
// does not match the message layout.
WireMessage deserialize_msg(std::span<const std::uint8_t> bytes);

}  // namespace fovstream
