#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fovstream/frame.hpp"

namespace fovstream {

// Random-access YCbCr (full range, 4:4:4) frame source.
class VideoSource {
 public:
  virtual ~VideoSource() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual double fps() const = 0;
  virtual int frame_count() const = 0;
  // Indices past the end clamp to the last frame.
  virtual Frame frame(int index) const = 0;
};

// A circular patch of fine texture, where a scripted viewer will look.
// Present in frames whose timestamp index / fps lies in [t_on_s, t_off_s).
struct DetailPatch {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  double t_on_s = -std::numeric_limits<double>::infinity();
  double t_off_s = std::numeric_limits<double>::infinity();
};

struct SyntheticSpec {
  std::string kind = "gradient-noise";  // moving-checker | scrolling-text | gradient-noise
  int width = 960;
  int height = 540;
  double fps = 30.0;
  int frames = 180;
  std::uint64_t seed = 1;
  // gradient-noise only: per-frame grain amplitude (uniform, code values)
  // and textured patches.
  double grain = 1.0;
  std::vector<DetailPatch> patches;
  // Patch texture is uniform integers in [-amplitude, amplitude] on 2x2 cells.
  int patch_amplitude = 48;
};

// Throws std::invalid_argument on an unknown kind or bad dimensions.
std::unique_ptr<VideoSource> make_synthetic(const SyntheticSpec& spec);

// Holds every frame in memory.
class FrameCache final : public VideoSource {
 public:
  FrameCache(const VideoSource& src);
  FrameCache(std::vector<Frame> frames, double fps);

  int width() const override { return frames_.front().width(); }
  int height() const override { return frames_.front().height(); }
  double fps() const override { return fps_; }
  int frame_count() const override { return static_cast<int>(frames_.size()); }
  Frame frame(int index) const override { return at(index); }
  const Frame& at(int index) const;

 private:
  std::vector<Frame> frames_;
  double fps_;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// YUV4MPEG2, 8-bit 4:2:0 or 4:4:4. Chroma is upsampled by replication.
// Throws InputError on unreadable or malformed files.
FrameCache read_y4m(const std::filesystem::path& path);

// Writes an 8-bit RGB PNG of a YCbCr frame.
void write_png(const std::filesystem::path& path, const Frame& ycbcr);

}  // namespace fovstream
