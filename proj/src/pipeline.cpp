#include "fovstream/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string_view>

namespace fovstream {

void FoveationConfig::validate(int src_w, int src_h) const {
  if (fg_size < 0 || fg_size % 8 != 0) {
    throw std::invalid_argument("foveation: fg_size must be a non-negative multiple of 8");
  }
  if (fg_size > std::min(src_w, src_h)) throw std::invalid_argument("foveation: fg_size exceeds the source");
  if (bg_width < 1 || bg_height < 1 || bg_width > src_w || bg_height > src_h) {
    throw std::invalid_argument("foveation: background must be within [1, source] on both axes");
  }
  if (blend_sigma_px < 0.0) throw std::invalid_argument("foveation: blend sigma must be > 0");
}

double pixel_budget(const FoveationConfig& cfg, int src_w, int src_h) {
  const double fg = cfg.fg_size;
  return (static_cast<double>(cfg.bg_width) * cfg.bg_height + fg * fg) /
         (static_cast<double>(src_w) * src_h);
}

PixelPoint crop_region(const PixelPoint& gaze, int fg_size, int src_w, int src_h) {
  if (fg_size > src_w || fg_size > src_h || fg_size < 0) {
    throw std::invalid_argument("crop_region: crop larger than frame");
  }
  const double half = fg_size / 2.0;
  const double x = std::clamp(static_cast<double>(std::lround(gaze.x - half)), 0.0,
                              static_cast<double>(src_w - fg_size));
  const double y = std::clamp(static_cast<double>(std::lround(gaze.y - half)), 0.0,
                              static_cast<double>(src_h - fg_size));
  return {x, y};
}

std::vector<FramePacket> server_step(const Frame& frame, int frame_index, bool frame_changed,
                                     const GazeSample& gaze, const FoveationConfig& cfg,
                                     const ServerOptions& opts, ServerState& state, Codec& codec) {
  std::vector<FramePacket> out;
  const int w = frame.width(), h = frame.height();
  const PixelPoint g{std::clamp(gaze.x_px, 0.0, static_cast<double>(w)),
                     std::clamp(gaze.y_px, 0.0, static_cast<double>(h))};
  frame_changed = frame_changed || state.last_frame_index != frame_index;

  if (frame_changed) {
    FramePacket p;
    p.stream = StreamKind::background;
    p.frame_index = frame_index;
    p.capture_time_us = gaze.timestamp_us;
    p.payload = codec.encode_scaled(frame, cfg.bg_width, cfg.bg_height, cfg.q_bg);
    out.push_back(std::move(p));
  }

  bool gaze_moved = !state.last_gaze.has_value();
  if (!gaze_moved) {
    gaze_moved = eccentricity_deg(g, *state.last_gaze, opts.geom) > opts.deadband_deg;
  }
  if (cfg.fg_size > 0 && (frame_changed || gaze_moved)) {
    FramePacket p;
    p.stream = StreamKind::foreground;
    p.frame_index = frame_index;
    p.capture_time_us = gaze.timestamp_us;
    p.crop_origin = crop_region(g, cfg.fg_size, w, h);
    p.payload = codec.encode(crop_frame(frame, static_cast<int>(p.crop_origin.x),
                                        static_cast<int>(p.crop_origin.y), cfg.fg_size, cfg.fg_size),
                             cfg.q_fg);
    out.push_back(std::move(p));
    state.last_gaze = g;
  }
  state.last_frame_index = frame_index;
  state.last_seq = gaze.seq;
  state.any_gaze = true;
  return out;
}

double blend_alpha(double d_px, int fg_size, double sigma_px) {
  if (d_px <= fg_size / 4.0) return 1.0;
  return std::exp(-d_px * d_px / (2.0 * sigma_px * sigma_px));
}

Eigen::ArrayXXd blend_mask(int fg_size, double sigma_px) {
  Eigen::ArrayXXd m(fg_size, fg_size);
  const double c = fg_size / 2.0;
  for (int y = 0; y < fg_size; ++y) {
    for (int x = 0; x < fg_size; ++x) {
      m(y, x) = blend_alpha(std::hypot(x + 0.5 - c, y + 0.5 - c), fg_size, sigma_px);
    }
  }
  return m;
}

namespace {

void blend_into(Frame& out, const Frame& fg, int ox, int oy, const Eigen::ArrayXXd& mask) {
  const int n = fg.width();
  const int x0 = std::max(0, -ox), y0 = std::max(0, -oy);
  const int x1 = std::min(n, out.width() - ox), y1 = std::min(n, out.height() - oy);
  for (int c = 0; c < 3; ++c) {
    Plane& dst = out.planes[c];
    const Plane& src = fg.planes[c];
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const double a = mask(y, x);
        const double v = a * src(y, x) + (1.0 - a) * dst(oy + y, ox + x);
        dst(oy + y, ox + x) = static_cast<std::uint8_t>(round_half_away(v));
      }
    }
  }
}

}  // namespace

Frame compose(const Frame& bg, const Frame& fg, const PixelPoint& origin, double sigma_px) {
  if (fg.width() != fg.height()) throw std::invalid_argument("compose: foreground must be square");
  Frame out = bg;
  blend_into(out, fg, static_cast<int>(std::lround(origin.x)), static_cast<int>(std::lround(origin.y)),
             blend_mask(fg.width(), sigma_px));
  return out;
}

const Frame* client_step(const std::vector<FramePacket>& packets, ClientState& state,
                         const FoveationConfig& cfg, int src_w, int src_h, int display_w,
                         int display_h, Codec& codec) {
  const double sx = static_cast<double>(display_w) / src_w;
  const double sy = static_cast<double>(display_h) / src_h;
  bool dirty = false;
  for (const FramePacket& p : packets) {
    if (p.stream == StreamKind::background) {
      state.background = codec.decode_scaled(p.payload, display_w, display_h);
      state.bg_frame_index = p.frame_index;
    } else {
      Frame decoded = codec.decode(p.payload);
      const int n = static_cast<int>(std::lround(decoded.width() * sx));
      state.foreground = n == decoded.width() ? std::move(decoded) : scale_frame(decoded, n, n);
      state.fg_origin = {std::round(p.crop_origin.x * sx), std::round(p.crop_origin.y * sy)};
      state.fg_size_display = n;
    }
    dirty = true;
  }
  if (!state.background) return nullptr;
  if (!dirty && state.composed) return &*state.composed;

  Frame out = *state.background;
  if (state.foreground) {
    const double sigma = cfg.sigma() * sx;
    if (state.mask_size != state.fg_size_display || state.mask_sigma != sigma) {
      state.mask = blend_mask(state.fg_size_display, sigma);
      state.mask_size = state.fg_size_display;
      state.mask_sigma = sigma;
    }
    blend_into(out, *state.foreground, static_cast<int>(state.fg_origin.x),
               static_cast<int>(state.fg_origin.y), state.mask);
  }
  state.composed = std::move(out);
  ++state.version;
  return &*state.composed;
}

namespace {

std::uint64_t hash_bytes(const std::uint8_t* data, std::size_t n, std::uint64_t seed) {
  const std::size_t h = std::hash<std::string_view>{}(
      std::string_view(reinterpret_cast<const char*>(data), n));
  return (static_cast<std::uint64_t>(h) ^ seed) * 0x9e3779b97f4a7c15ULL + (seed >> 7);
}

std::uint64_t hash_frame(const Frame& f, Quantizer q) {
  std::uint64_t h = (static_cast<std::uint64_t>(f.width()) << 40) ^
                    (static_cast<std::uint64_t>(f.height()) << 20) ^ q.raw();
  for (const Plane& p : f.planes) h = hash_bytes(p.data(), static_cast<std::size_t>(p.size()), h);
  return h;
}

}  // namespace

CachingCodec::CachingCodec(std::shared_ptr<Codec> inner, std::size_t max_bytes)
    : inner_(std::move(inner)), max_bytes_(max_bytes) {}

void CachingCodec::account(std::size_t bytes) {
  bytes_ += bytes;
  if (bytes_ > max_bytes_) {
    encoded_.clear();
    decoded_.clear();
    bytes_ = bytes;
  }
}

Bitstream CachingCodec::encode(const Frame& frame, Quantizer q) {
  const std::uint64_t key = hash_frame(frame, q);
  if (auto it = encoded_.find(key); it != encoded_.end()) {
    ++hits_;
    return it->second;
  }
  ++misses_;
  Bitstream bits = inner_->encode(frame, q);
  account(bits.bytes.size());
  encoded_.emplace(key, bits);
  return bits;
}

Bitstream CachingCodec::encode_scaled(const Frame& frame, int w, int h, Quantizer q) {
  if (frame.width() == w && frame.height() == h) return encode(frame, q);
  const std::uint64_t key = hash_frame(frame, q) ^ (static_cast<std::uint64_t>(w) << 32 | h) * 0xff51afd7ed558ccdULL;
  if (auto it = encoded_.find(key); it != encoded_.end()) {
    ++hits_;
    return it->second;
  }
  Bitstream bits = encode(scale_frame(frame, w, h), q);
  account(bits.bytes.size());
  encoded_.emplace(key, bits);
  return bits;
}

Frame CachingCodec::decode_scaled(const Bitstream& bits, int w, int h) {
  const std::uint64_t key = hash_bytes(bits.bytes.data(), bits.bytes.size(), 0x5bd1e995) ^
                            (static_cast<std::uint64_t>(w) << 32 | h) * 0xff51afd7ed558ccdULL;
  if (auto it = decoded_.find(key); it != decoded_.end()) {
    ++hits_;
    return it->second;
  }
  Frame f = decode(bits);
  if (f.width() != w || f.height() != h) f = scale_frame(f, w, h);
  account(static_cast<std::size_t>(w) * h * 3);
  decoded_.emplace(key, f);
  return f;
}

Frame CachingCodec::decode(const Bitstream& bits) {
  const std::uint64_t key = hash_bytes(bits.bytes.data(), bits.bytes.size(), 0x5bd1e995);
  if (auto it = decoded_.find(key); it != decoded_.end()) {
    ++hits_;
    return it->second;
  }
  ++misses_;
  Frame f = inner_->decode(bits);
  account(static_cast<std::size_t>(f.width()) * f.height() * 3);
  decoded_.emplace(key, f);
  return f;
}

}  // namespace fovstream
