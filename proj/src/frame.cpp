#include "fovstream/frame.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

namespace fovstream {

namespace {

std::uint8_t clamp_round(double v) {
  return static_cast<std::uint8_t>(std::clamp(round_half_away(v), 0.0, 255.0));
}

std::uint8_t clamp_round_half_up(double v) {
  // Truncation is floor once the value is known to be positive.
  const double u = v + 0.5;
  if (!(u > 0.0)) return 0;
  return u >= 255.0 ? 255 : static_cast<std::uint8_t>(static_cast<int>(u));
}

// Source taps feeding each destination sample along one axis, flattened:
// sample i reads index/weight entries [start[i], start[i + 1]).
struct AxisTaps {
  std::vector<int> start;
  std::vector<int> index;
  std::vector<double> weight;
};

AxisTaps axis_taps(int src, int dst) {
  AxisTaps taps;
  taps.start.reserve(static_cast<std::size_t>(dst) + 1);
  const auto add = [&](int s, double w) {
    taps.index.push_back(s);
    taps.weight.push_back(w);
  };
  const double ratio = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    taps.start.push_back(static_cast<int>(taps.index.size()));
    if (dst == src) {
      add(i, 1.0);
    } else if (dst < src) {
      const double lo = i * ratio;
      const double hi = (i + 1) * ratio;
      for (int s = static_cast<int>(std::floor(lo)); s < std::min(src, static_cast<int>(std::ceil(hi)));
           ++s) {
        const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
        if (overlap > 0.0) add(s, overlap / ratio);
      }
    } else {
      const double pos = std::clamp((i + 0.5) * ratio - 0.5, 0.0, src - 1.0);
      const int i0 = static_cast<int>(std::floor(pos));
      const int i1 = std::min(i0 + 1, src - 1);
      const double frac = pos - i0;
      add(i0, 1.0 - frac);
      if (frac > 0.0) add(i1, frac);
    }
  }
  taps.start.push_back(static_cast<int>(taps.index.size()));
  return taps;
}

}  // namespace

Frame::Frame(int width, int height, std::uint8_t c0, std::uint8_t c1, std::uint8_t c2) {
  planes[0] = Plane::Constant(height, width, c0);
  planes[1] = Plane::Constant(height, width, c1);
  planes[2] = Plane::Constant(height, width, c2);
}

Frame rgb_to_ycbcr(const Frame& rgb) {
  Frame out(rgb.width(), rgb.height());
  for (Eigen::Index i = 0; i < rgb.planes[0].size(); ++i) {
    const double r = rgb.planes[0].data()[i];
    const double g = rgb.planes[1].data()[i];
    const double b = rgb.planes[2].data()[i];
    out.planes[0].data()[i] = clamp_round(0.299 * r + 0.587 * g + 0.114 * b);
    out.planes[1].data()[i] = clamp_round(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b);
    out.planes[2].data()[i] = clamp_round(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
  }
  return out;
}

Frame ycbcr_to_rgb(const Frame& ycbcr) {
  Frame out(ycbcr.width(), ycbcr.height());
  for (Eigen::Index i = 0; i < ycbcr.planes[0].size(); ++i) {
    const double y = ycbcr.planes[0].data()[i];
    const double cb = ycbcr.planes[1].data()[i] - 128.0;
    const double cr = ycbcr.planes[2].data()[i] - 128.0;
    out.planes[0].data()[i] = clamp_round(y + 1.402 * cr);
    out.planes[1].data()[i] = clamp_round(y - 0.344136 * cb - 0.714136 * cr);
    out.planes[2].data()[i] = clamp_round(y + 1.772 * cb);
  }
  return out;
}

Plane scale_plane(const Plane& plane, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) throw std::invalid_argument("scale: target must be >= 1");
  const int sw = static_cast<int>(plane.cols());
  const int sh = static_cast<int>(plane.rows());
  if (sw == target_w && sh == target_h) return plane;

  const AxisTaps h = axis_taps(sw, target_w);
  const AxisTaps v = axis_taps(sh, target_h);

  const auto tmp = std::make_unique_for_overwrite<double[]>(static_cast<std::size_t>(sh) * target_w);
  for (int y = 0; y < sh; ++y) {
    const std::uint8_t* src = plane.data() + static_cast<std::ptrdiff_t>(y) * sw;
    double* row = tmp.get() + static_cast<std::ptrdiff_t>(y) * target_w;
    for (int x = 0; x < target_w; ++x) {
      double acc = 0.0;
      for (int k = h.start[x]; k < h.start[x + 1]; ++k) acc += h.weight[k] * src[h.index[k]];
      row[x] = acc;
    }
  }
  Plane out(target_h, target_w);
  std::vector<double> acc(static_cast<std::size_t>(target_w));
  for (int y = 0; y < target_h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int k = v.start[y]; k < v.start[y + 1]; ++k) {
      const double w = v.weight[k];
      const double* row = tmp.get() + static_cast<std::ptrdiff_t>(v.index[k]) * target_w;
      for (int x = 0; x < target_w; ++x) acc[x] += w * row[x];
    }
    std::uint8_t* dst = out.data() + static_cast<std::ptrdiff_t>(y) * target_w;
    for (int x = 0; x < target_w; ++x) dst[x] = clamp_round_half_up(acc[x]);
  }
  return out;
}

Frame scale_frame(const Frame& frame, int target_w, int target_h) {
  Frame out;
  for (int c = 0; c < 3; ++c) out.planes[c] = scale_plane(frame.planes[c], target_w, target_h);
  return out;
}

Frame crop_frame(const Frame& frame, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > frame.width() || y + h > frame.height()) {
    throw std::out_of_range("crop: region outside frame");
  }
  Frame out;
  for (int c = 0; c < 3; ++c) out.planes[c] = frame.planes[c].block(y, x, h, w);
  return out;
}

double plane_mse(const Plane& a, const Plane& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("mse: dimension mismatch");
  }
  if (a.size() == 0) return 0.0;
  const Eigen::ArrayXXd d = a.cast<double>().array() - b.cast<double>().array();
  return d.square().mean();
}

double frame_mse(const Frame& a, const Frame& b) {
  return (plane_mse(a.planes[0], b.planes[0]) + plane_mse(a.planes[1], b.planes[1]) +
          plane_mse(a.planes[2], b.planes[2])) /
         3.0;
}

double psnr(const Frame& a, const Frame& b) {
  const double mse = frame_mse(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace fovstream
