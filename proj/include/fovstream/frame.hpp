#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace fovstream {

// std::round without the library call; only the sign of a zero result may
// differ.
inline double round_half_away(double v) {
  if (!(std::abs(v) < 4503599627370496.0)) return v;
  const double t = static_cast<double>(static_cast<std::int64_t>(v));
  const double f = v - t;
  return f >= 0.5 ? t + 1.0 : (f <= -0.5 ? t - 1.0 : t);
}

using Plane = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Three full-resolution 8-bit planes. Usually Y, Cb, Cr (full range); the
// colour conversion functions also use it to carry R, G, B.
struct Frame {
  std::array<Plane, 3> planes;

  Frame() = default;
  Frame(int width, int height, std::uint8_t c0 = 0, std::uint8_t c1 = 128,
        std::uint8_t c2 = 128);

  int width() const { return static_cast<int>(planes[0].cols()); }
  int height() const { return static_cast<int>(planes[0].rows()); }
  bool empty() const { return planes[0].size() == 0; }

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.planes[0] == b.planes[0] && a.planes[1] == b.planes[1] &&
           a.planes[2] == b.planes[2];
  }
};

// BT.601 full-range conversion, rounding half away from zero and clamping.
Frame rgb_to_ycbcr(const Frame& rgb);
Frame ycbcr_to_rgb(const Frame& ycbcr);

// Area-average when shrinking an axis, bilinear (pixel-center aligned) when
// growing it, identity when unchanged. Results round half up.
Frame scale_frame(const Frame& frame, int target_w, int target_h);
Plane scale_plane(const Plane& plane, int target_w, int target_h);

// Throws std::out_of_range unless the region lies within the frame.
Frame crop_frame(const Frame& frame, int x, int y, int w, int h);

// Mean squared error over one plane / all three planes.
double plane_mse(const Plane& a, const Plane& b);
double frame_mse(const Frame& a, const Frame& b);
// 10 log10(255^2 / mse); +inf for identical frames.
double psnr(const Frame& a, const Frame& b);

}  // namespace fovstream
