#pragma once

#include <cstdint>
#include <list>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fovstream/acuity.hpp"
#include "fovstream/frame.hpp"
#include "fovstream/geometry.hpp"

namespace fovstream {

// Reported in place of +inf (identical frames, suppressed frames).
inline constexpr double kFwpsnrCapDb = 99.0;

// Acuity-weighted PSNR over the luma plane: weights are
// relative_acuity(eccentricity(p, gaze)). Reuses the per-pixel view rays of
// one display, so repeated calls cost one pass over the frame.
class FidelityEvaluator {
 public:
  explicit FidelityEvaluator(const ViewingGeometry& geom, const AcuityParams& params = {});

  const ViewingGeometry& geometry() const { return field_.geometry(); }

  // Weighted mean squared luma error. Throws on dimension mismatch.
  double fwmse(const Plane& reference, const Plane& displayed, const PixelPoint& gaze) const;
  // 10 log10(255^2 / fwmse); +inf for zero error.
  double fwpsnr(const Plane& reference, const Plane& displayed, const PixelPoint& gaze) const;

  // Per-pixel weights for one gaze, row-major.
  Eigen::ArrayXd weights(const PixelPoint& gaze) const;

  // Fast path for scoring many frames: squared luma error computed once per
  // displayed frame, weights for the gaze snapped to the nearest pixel centre
  // and kept for the most recent gaze pixels.
  Eigen::ArrayXd squared_error(const Plane& reference, const Plane& displayed) const;
  double fwpsnr_snapped(const Eigen::ArrayXd& squared_error, const PixelPoint& gaze);

 private:
  double weight_at(const Eigen::Ref<const Eigen::Vector3d>& ray, const Eigen::Vector3d& gaze_ray) const;

  EccentricityField field_;
  AcuityParams params_;
  // Weight as a function of chord length between unit rays, sampled on
  // [0, 2] and linearly interpolated.
  std::vector<double> table_;
  double table_scale_;

  struct CachedWeights {
    std::int64_t key;
    Eigen::ArrayXd w;
    double sum;
  };
  std::list<CachedWeights> cache_;  // most recent first
};

// One-shot form. Suppressed frames return +inf (excluded from aggregates).
double fwpsnr(const Frame& reference, const Frame& displayed, const PixelPoint& true_gaze,
              const ViewingGeometry& geom, const AcuityParams& params = {}, bool suppressed = false);

}  // namespace fovstream
