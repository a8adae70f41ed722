#include "fovstream/acuity.hpp"

#include <cmath>

namespace fovstream {

namespace {

struct Validator {
  void operator()(const AcuityProfile& p) const { p.params.validate(); }
  void operator()(const GaussianProfile& p) const {
    if (!(p.sigma_deg > 0.0)) throw std::invalid_argument("gaussian profile: sigma must be > 0");
  }
  void operator()(const StepProfile& p) const {
    if (!(p.radius_deg >= 0.0)) throw std::invalid_argument("step profile: radius must be >= 0");
    if (!(p.floor >= 0.0 && p.floor <= 1.0)) {
      throw std::invalid_argument("step profile: floor must be in [0, 1]");
    }
  }
  void operator()(const MultiStepProfile& p) const {
    double last_radius = -1.0;
    double last_quality = 1.0;
    for (const auto& s : p.steps) {
      if (!(s.radius_deg > last_radius) || s.radius_deg < 0.0) {
        throw std::invalid_argument("multistep profile: radii must be strictly increasing");
      }
      if (!(s.quality >= 0.0 && s.quality <= last_quality)) {
        throw std::invalid_argument(
            "multistep profile: qualities must be in [0, 1] and non-increasing");
      }
      last_radius = s.radius_deg;
      last_quality = s.quality;
    }
  }
};

struct Evaluator {
  double e;
  double operator()(const AcuityProfile& p) const { return relative_acuity(e, p.params); }
  double operator()(const GaussianProfile& p) const {
    return std::exp(-0.5 * (e * e) / (p.sigma_deg * p.sigma_deg));
  }
  double operator()(const StepProfile& p) const { return e <= p.radius_deg ? 1.0 : p.floor; }
  double operator()(const MultiStepProfile& p) const {
    double q = 1.0;
    for (const auto& s : p.steps) {
      if (e > s.radius_deg) q = s.quality;
    }
    return q;
  }
};

}  // namespace

void validate_profile(const QualityProfile& profile) { std::visit(Validator{}, profile); }

double profile_quality(const QualityProfile& profile, double e) {
  detail::require_non_negative(e);
  validate_profile(profile);
  return std::visit(Evaluator{e}, profile);
}

double min_region_radius(double latency_s, const SaccadeParams& s) {
  if (!(latency_s >= 0.0)) throw std::invalid_argument("min_region_radius: latency must be >= 0");
  return s.fovea_radius_deg + s.v_max_deg_s * latency_s;
}

double profile_bit_share(const QualityProfile& profile, const ViewingGeometry& geom,
                         const PixelPoint& gaze) {
  validate_profile(profile);
  geom.validate();
  const Eigen::Vector3d g = view_ray(gaze, geom);
  double sum = 0.0;
  for (int y = 0; y < geom.height_px; ++y) {
    for (int x = 0; x < geom.width_px; ++x) {
      const double e = ray_angle_deg(view_ray(PixelPoint{x + 0.5, y + 0.5}, geom), g);
      sum += std::visit(Evaluator{e}, profile);
    }
  }
  return sum / (static_cast<double>(geom.width_px) * geom.height_px);
}

}  // namespace fovstream
