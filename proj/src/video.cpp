#include "fovstream/video.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fovstream/rng.hpp"

namespace fovstream {
namespace {

std::uint8_t clamp8(double v) {
  return static_cast<std::uint8_t>(std::clamp(round_half_away(v), 0.0, 255.0));
}

std::uint64_t hash3(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  SplitMix64 g(seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL));
  return g.next();
}

class SyntheticBase : public VideoSource {
 public:
  explicit SyntheticBase(const SyntheticSpec& s) : spec_(s) {}
  int width() const override { return spec_.width; }
  int height() const override { return spec_.height; }
  double fps() const override { return spec_.fps; }
  int frame_count() const override { return spec_.frames; }
  Frame frame(int index) const override {
    return render(std::clamp(index, 0, spec_.frames - 1));
  }

 protected:
  virtual Frame render(int index) const = 0;
  SyntheticSpec spec_;
};

// 32 px checkerboard drifting right by 4 px per frame.
class MovingChecker final : public SyntheticBase {
 public:
  using SyntheticBase::SyntheticBase;

 protected:
  Frame render(int index) const override {
    SplitMix64 g(spec_.seed);
    const int phase = static_cast<int>(g.uniform_int(0, 63));
    const auto cb = static_cast<std::uint8_t>(g.uniform_int(96, 160));
    const auto cr = static_cast<std::uint8_t>(g.uniform_int(96, 160));
    Frame f(spec_.width, spec_.height, 0, cb, cr);
    const int shift = phase + 4 * index;
    for (int y = 0; y < spec_.height; ++y) {
      for (int x = 0; x < spec_.width; ++x) {
        const bool on = (((x + shift) / 32) + (y / 32)) % 2 == 0;
        f.planes[0](y, x) = on ? 235 : 16;
      }
    }
    return f;
  }
};

// Rows of random 5x7 glyphs (2x scaled) scrolling up by 2 px per frame.
class ScrollingText final : public SyntheticBase {
 public:
  using SyntheticBase::SyntheticBase;

 protected:
  Frame render(int index) const override {
    constexpr int kCellW = 12, kCellH = 20, kScale = 2;
    Frame f(spec_.width, spec_.height, 235, 128, 128);
    const int scroll = 2 * index;
    for (int y = 0; y < spec_.height; ++y) {
      const int vy = y + scroll;
      const int row = vy / kCellH;
      const int gy = (vy % kCellH) / kScale - 2;
      if (gy < 0 || gy >= 7) continue;
      for (int x = 0; x < spec_.width; ++x) {
        const int col = x / kCellW;
        const int gx = (x % kCellW) / kScale - 0;
        if (gx >= 5) continue;
        const std::uint64_t glyph = hash3(spec_.seed, static_cast<std::uint64_t>(row),
                                          static_cast<std::uint64_t>(col));
        if ((glyph & 7) == 0) continue;  // word gap
        if ((glyph >> (3 + gy * 5 + gx)) & 1) f.planes[0](y, x) = 24;
      }
    }
    return f;
  }
};

// Smooth gradient with per-frame grain; detail patches carry static 2x2-pixel
// random texture that survives only at full resolution.
class GradientNoise final : public SyntheticBase {
 public:
  explicit GradientNoise(const SyntheticSpec& s) : SyntheticBase(s) {
    if (s.patch_amplitude < 0) throw std::invalid_argument("synthetic video: patch amplitude must be >= 0");
    const int w = s.width, h = s.height;
    base_y_.resize(static_cast<std::size_t>(w) * h);
    base_cb_.resize(base_y_.size());
    base_cr_.resize(base_y_.size());
    SplitMix64 g(s.seed);
    const double fx = g.uniform(0.5, 1.5), fy = g.uniform(0.5, 1.5), ph = g.uniform(0.0, 6.28);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double u = (x + 0.5) / w, v = (y + 0.5) / h;
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        base_y_[i] = 60.0 + 90.0 * u + 50.0 * v +
                     20.0 * std::sin(2.0 * std::numbers::pi * (fx * u + fy * v) + ph);
        base_cb_[i] = clamp8(128.0 + 24.0 * (u - 0.5));
        base_cr_[i] = clamp8(128.0 + 24.0 * (v - 0.5));
      }
    }
    const std::uint64_t span = 2 * static_cast<std::uint64_t>(s.patch_amplitude) + 1;
    for (std::size_t k = 0; k < s.patches.size(); ++k) {
      const DetailPatch& p = s.patches[k];
      Texture t;
      t.on_s = p.t_on_s;
      t.off_s = p.t_off_s;
      const int x0 = std::max(0, static_cast<int>(std::floor(p.cx - p.radius)));
      const int x1 = std::min(w, static_cast<int>(std::ceil(p.cx + p.radius)) + 1);
      const int y0 = std::max(0, static_cast<int>(std::floor(p.cy - p.radius)));
      const int y1 = std::min(h, static_cast<int>(std::ceil(p.cy + p.radius)) + 1);
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const double d = std::hypot(x + 0.5 - p.cx, y + 0.5 - p.cy);
          if (d >= p.radius) continue;
          const double fade = std::clamp((p.radius - d) / 4.0, 0.0, 1.0);
          const std::uint64_t r = hash3(s.seed + 1 + k, static_cast<std::uint64_t>(x / 2),
                                        static_cast<std::uint64_t>(y / 2));
          const double delta = fade * (static_cast<double>(r % span) - s.patch_amplitude);
          t.texels.push_back({static_cast<std::size_t>(y) * w + x, delta});
        }
      }
      textures_.push_back(std::move(t));
    }
  }

 protected:
  Frame render(int index) const override {
    const double t = index / spec_.fps;
    std::vector<double> luma = base_y_;
    for (const Texture& tex : textures_) {
      if (t < tex.on_s || t >= tex.off_s) continue;
      for (const auto& [i, delta] : tex.texels) luma[i] += delta;
    }
    Frame f(spec_.width, spec_.height);
    SplitMix64 g(mix_seed(spec_.seed, static_cast<std::uint64_t>(index)));
    for (int y = 0; y < spec_.height; ++y) {
      for (int x = 0; x < spec_.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * spec_.width + x;
        const double grain = spec_.grain > 0.0 ? g.uniform(-spec_.grain, spec_.grain) : 0.0;
        f.planes[0](y, x) = clamp8(luma[i] + grain);
        f.planes[1](y, x) = base_cb_[i];
        f.planes[2](y, x) = base_cr_[i];
      }
    }
    return f;
  }

 private:
  struct Texture {
    double on_s, off_s;
    std::vector<std::pair<std::size_t, double>> texels;
  };
  std::vector<double> base_y_;
  std::vector<std::uint8_t> base_cb_, base_cr_;
  std::vector<Texture> textures_;
};

}  // namespace

std::unique_ptr<VideoSource> make_synthetic(const SyntheticSpec& spec) {
  if (spec.width < 1 || spec.height < 1 || spec.frames < 1 || !(spec.fps > 0.0)) {
    throw std::invalid_argument("synthetic video: dimensions, frame count and fps must be positive");
  }
  if (spec.kind == "moving-checker") return std::make_unique<MovingChecker>(spec);
  if (spec.kind == "scrolling-text") return std::make_unique<ScrollingText>(spec);
  if (spec.kind == "gradient-noise") return std::make_unique<GradientNoise>(spec);
  throw std::invalid_argument("synthetic video: unknown kind '" + spec.kind + "'");
}

FrameCache::FrameCache(const VideoSource& src) : fps_(src.fps()) {
  frames_.reserve(static_cast<std::size_t>(src.frame_count()));
  for (int i = 0; i < src.frame_count(); ++i) frames_.push_back(src.frame(i));
  if (frames_.empty()) throw std::invalid_argument("frame cache: empty source");
}

FrameCache::FrameCache(std::vector<Frame> frames, double fps) : frames_(std::move(frames)), fps_(fps) {
  if (frames_.empty()) throw std::invalid_argument("frame cache: empty source");
}

const Frame& FrameCache::at(int index) const {
  return frames_[static_cast<std::size_t>(std::clamp(index, 0, frame_count() - 1))];
}

namespace {

double parse_rate(const std::string& tok) {
  const auto colon = tok.find(':');
  if (colon == std::string::npos) throw InputError("y4m: bad frame rate '" + tok + "'");
  const double num = std::stod(tok.substr(0, colon));
  const double den = std::stod(tok.substr(colon + 1));
  if (!(num > 0.0) || !(den > 0.0)) throw InputError("y4m: bad frame rate '" + tok + "'");
  return num / den;
}

}  // namespace

FrameCache read_y4m(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header) || header.rfind("YUV4MPEG2", 0) != 0) {
    throw InputError("y4m: missing YUV4MPEG2 signature in " + path.string());
  }
  int w = 0, h = 0;
  double fps = 30.0;
  std::string chroma = "420jpeg";
  std::istringstream hs(header.substr(9));
  for (std::string tok; hs >> tok;) {
    switch (tok[0]) {
      case 'W': w = std::stoi(tok.substr(1)); break;
      case 'H': h = std::stoi(tok.substr(1)); break;
      case 'F': fps = parse_rate(tok.substr(1)); break;
      case 'C': chroma = tok.substr(1); break;
      default: break;
    }
  }
  if (w < 1 || h < 1) throw InputError("y4m: missing dimensions");
  const bool is444 = chroma.rfind("444", 0) == 0;
  if (!is444 && chroma.rfind("420", 0) != 0) throw InputError("y4m: unsupported chroma " + chroma);
  const int cw = is444 ? w : (w + 1) / 2;
  const int ch = is444 ? h : (h + 1) / 2;

  std::vector<Frame> frames;
  std::vector<std::uint8_t> buf;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("FRAME", 0) != 0) throw InputError("y4m: expected FRAME marker");
    Frame f(w, h);
    buf.resize(static_cast<std::size_t>(w) * h);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw InputError("y4m: truncated frame");
    }
    std::copy(buf.begin(), buf.end(), f.planes[0].data());
    buf.resize(static_cast<std::size_t>(cw) * ch);
    for (int c = 1; c <= 2; ++c) {
      if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
        throw InputError("y4m: truncated frame");
      }
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const int sx = is444 ? x : x / 2, sy = is444 ? y : y / 2;
          f.planes[c](y, x) = buf[static_cast<std::size_t>(sy) * cw + sx];
        }
      }
    }
    frames.push_back(std::move(f));
  }
  if (frames.empty()) throw InputError("y4m: no frames in " + path.string());
  return FrameCache(std::move(frames), fps);
}

void write_png(const std::filesystem::path& path, const Frame& ycbcr) {
  const Frame rgb = ycbcr_to_rgb(ycbcr);
  const int w = rgb.width(), h = rgb.height();
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("png encoding failed for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(x) * 3 + c] = rgb.planes[c](y, x);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace fovstream
