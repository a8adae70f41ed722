#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "fovstream/frame.hpp"
#include "fovstream/geometry.hpp"
#include "fovstream/refcodec.hpp"
#include "fovstream/transport.hpp"

namespace fovstream {

// One rung of the quality ladder.
struct FoveationConfig {
  int bg_width = 768;
  int bg_height = 432;
  // Square crop edge at source resolution; 0 disables the foreground stream.
  int fg_size = 480;
  Quantizer q_bg;
  Quantizer q_fg;
  // 0 selects fg_size / 4.
  double blend_sigma_px = 0.0;

  double sigma() const { return blend_sigma_px > 0.0 ? blend_sigma_px : fg_size / 4.0; }
  // Throws std::invalid_argument: fg_size a multiple of 8 within the source,
  // background within [1, source], sigma >= 0.
  void validate(int src_w, int src_h) const;
};

// (bg_w * bg_h + fg^2) / (src_w * src_h).
double pixel_budget(const FoveationConfig& cfg, int src_w, int src_h);

enum class StreamKind : std::uint8_t { background, foreground };

struct FramePacket {
  StreamKind stream = StreamKind::background;
  int frame_index = 0;
  // Top-left of the crop in source pixels (integral); foreground only.
  PixelPoint crop_origin;
  Bitstream payload;
  std::int64_t capture_time_us = 0;
};

// Top-left corner of the fg_size crop centred on the gaze, clamped on-frame.
// Throws std::invalid_argument when the crop does not fit the frame.
PixelPoint crop_region(const PixelPoint& gaze, int fg_size, int src_w, int src_h);

struct ServerOptions {
  ViewingGeometry geom;
  double deadband_deg = 0.25;
};

struct ServerState {
  int last_frame_index = -1;
  std::optional<PixelPoint> last_gaze;
  std::uint64_t last_seq = 0;
  bool any_gaze = false;
};

// Encodes up to two packets for one gaze sample: background iff the frame
// changed, foreground iff the frame changed or the gaze moved beyond the
// dead-band since the last foreground encode. Gaze is in source pixels and
// is clamped on-frame.
std::vector<FramePacket> server_step(const Frame& frame, int frame_index, bool frame_changed,
                                     const GazeSample& gaze, const FoveationConfig& cfg,
                                     const ServerOptions& opts, ServerState& state, Codec& codec);

// 1 within fg_size / 4 of the crop centre, exp(-d^2 / (2 sigma^2)) beyond.
double blend_alpha(double d_px, int fg_size, double sigma_px);

// Alpha for every crop pixel, sampled at pixel centres.
Eigen::ArrayXXd blend_mask(int fg_size, double sigma_px);

// Blends `fg` over `bg` at `origin` (display pixels) with the Gaussian mask.
Frame compose(const Frame& bg, const Frame& fg, const PixelPoint& origin, double sigma_px);

struct ClientState {
  std::optional<Frame> background;  // upscaled to display size
  int bg_frame_index = -1;
  std::optional<Frame> foreground;   // at display scale
  PixelPoint fg_origin;              // display pixels
  int fg_size_display = 0;
  std::optional<Frame> composed;
  // Bumped whenever `composed` changes.
  std::uint64_t version = 0;
  Eigen::ArrayXXd mask;
  int mask_size = -1;
  double mask_sigma = -1.0;
};

// Applies packets in order and returns the frame to display (owned by
// `state`), or nullptr while no background has arrived. Without new packets
// the previous frame is returned unchanged.
const Frame* client_step(const std::vector<FramePacket>& packets, ClientState& state,
                         const FoveationConfig& cfg, int src_w, int src_h, int display_w,
                         int display_h, Codec& codec);

// Memoizes encode and decode by a 64-bit content hash. A hash collision would
// return a wrong result; at 64 bits this is accepted for simulation use.
class CachingCodec final : public Codec {
 public:
  explicit CachingCodec(std::shared_ptr<Codec> inner, std::size_t max_bytes = std::size_t{1} << 30);

  Bitstream encode(const Frame& frame, Quantizer q) override;
  Frame decode(const Bitstream& bits) override;
  Bitstream encode_scaled(const Frame& frame, int w, int h, Quantizer q) override;
  Frame decode_scaled(const Bitstream& bits, int w, int h) override;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  void account(std::size_t bytes);

  std::shared_ptr<Codec> inner_;
  std::size_t max_bytes_;
  std::size_t bytes_ = 0;
  std::size_t hits_ = 0, misses_ = 0;
  std::unordered_map<std::uint64_t, Bitstream> encoded_;
  std::unordered_map<std::uint64_t, Frame> decoded_;
};

}  // namespace fovstream
