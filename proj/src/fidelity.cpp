#include "fovstream/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fovstream {
namespace {

constexpr int kTableSize = 1 << 17;

}  // namespace

FidelityEvaluator::FidelityEvaluator(const ViewingGeometry& geom, const AcuityParams& params)
    : field_(geom), params_(params) {
  params_.validate();
  table_.resize(kTableSize + 2);
  table_scale_ = kTableSize / 2.0;
  for (int i = 0; i < kTableSize + 2; ++i) {
    const double chord = std::min(2.0, i / table_scale_);
    const double e = 2.0 * std::asin(chord / 2.0) * 180.0 / std::numbers::pi;
    table_[static_cast<std::size_t>(i)] = relative_acuity(e, params_);
  }
}

double FidelityEvaluator::weight_at(const Eigen::Ref<const Eigen::Vector3d>& ray,
                                    const Eigen::Vector3d& gaze_ray) const {
  const double dx = ray.x() - gaze_ray.x(), dy = ray.y() - gaze_ray.y(), dz = ray.z() - gaze_ray.z();
  const double pos = std::sqrt(dx * dx + dy * dy + dz * dz) * table_scale_;
  const auto k = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(k);
  return table_[k] + frac * (table_[k + 1] - table_[k]);
}

Eigen::ArrayXd FidelityEvaluator::weights(const PixelPoint& gaze) const {
  const Eigen::Vector3d g = view_ray(gaze, field_.geometry()).normalized();
  const auto& rays = field_.rays();
  Eigen::ArrayXd w(rays.cols());
  for (Eigen::Index i = 0; i < rays.cols(); ++i) w(i) = weight_at(rays.col(i), g);
  return w;
}

double FidelityEvaluator::fwmse(const Plane& reference, const Plane& displayed,
                                const PixelPoint& gaze) const {
  const ViewingGeometry& geom = field_.geometry();
  if (reference.rows() != displayed.rows() || reference.cols() != displayed.cols() ||
      reference.cols() != geom.width_px || reference.rows() != geom.height_px) {
    throw std::invalid_argument("fwpsnr: frame dimensions differ from each other or the display");
  }
  const Eigen::Vector3d g = view_ray(gaze, geom).normalized();
  const auto& rays = field_.rays();
  const std::uint8_t* a = reference.data();
  const std::uint8_t* b = displayed.data();
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < rays.cols(); ++i) {
    const double w = weight_at(rays.col(i), g);
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    num += w * d * d;
    den += w;
  }
  return num / den;
}

double FidelityEvaluator::fwpsnr(const Plane& reference, const Plane& displayed,
                                 const PixelPoint& gaze) const {
  const double m = fwmse(reference, displayed, gaze);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

Eigen::ArrayXd FidelityEvaluator::squared_error(const Plane& reference, const Plane& displayed) const {
  const ViewingGeometry& geom = field_.geometry();
  if (reference.rows() != displayed.rows() || reference.cols() != displayed.cols() ||
      reference.cols() != geom.width_px || reference.rows() != geom.height_px) {
    throw std::invalid_argument("fwpsnr: frame dimensions differ from each other or the display");
  }
  const Eigen::Index n = reference.size();
  const Eigen::Map<const Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>> a(reference.data(), n);
  const Eigen::Map<const Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>> b(displayed.data(), n);
  return (a.cast<double>() - b.cast<double>()).square();
}

double FidelityEvaluator::fwpsnr_snapped(const Eigen::ArrayXd& squared_error, const PixelPoint& gaze) {
  constexpr std::size_t kCapacity = 16;
  const ViewingGeometry& geom = field_.geometry();
  if (squared_error.size() != static_cast<Eigen::Index>(geom.width_px) * geom.height_px) {
    throw std::invalid_argument("fwpsnr: error map does not match the display");
  }
  const std::int64_t ix = std::llround(std::floor(gaze.x)), iy = std::llround(std::floor(gaze.y));
  const std::int64_t key = iy * (1 << 20) + ix;
  auto it = std::find_if(cache_.begin(), cache_.end(), [&](const CachedWeights& c) { return c.key == key; });
  if (it == cache_.end()) {
    Eigen::ArrayXd w = weights({ix + 0.5, iy + 0.5});
    const double sum = w.sum();
    cache_.push_front({key, std::move(w), sum});
    if (cache_.size() > kCapacity) cache_.pop_back();
  } else if (it != cache_.begin()) {
    cache_.splice(cache_.begin(), cache_, it);
  }
  const CachedWeights& c = cache_.front();
  const double m = (c.w * squared_error).sum() / c.sum;
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

double fwpsnr(const Frame& reference, const Frame& displayed, const PixelPoint& true_gaze,
              const ViewingGeometry& geom, const AcuityParams& params, bool suppressed) {
  if (reference.width() != displayed.width() || reference.height() != displayed.height()) {
    throw std::invalid_argument("fwpsnr: frame dimensions differ");
  }
  if (suppressed) return std::numeric_limits<double>::infinity();
  return FidelityEvaluator(geom, params).fwpsnr(reference.planes[0], displayed.planes[0], true_gaze);
}

}  // namespace fovstream
