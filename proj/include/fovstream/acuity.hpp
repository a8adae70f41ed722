#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "fovstream/geometry.hpp"

namespace fovstream {

// Acuity falloff A(e) = ct0_term * e2 / (alpha * (e + e2)), e in degrees.
struct AcuityParams {
  double e2 = 2.3;
  double alpha = 0.106;
  double ct0_term = 4.1588830833596715;  // ln(64)

  void validate() const {
    if (!(e2 > 0.0) || !(alpha > 0.0)) {
      throw std::invalid_argument("acuity: e2 and alpha must be positive");
    }
  }
};

struct SaccadeParams {
  double v_max_deg_s = 900.0;
  double fovea_radius_deg = 1.5;
};

namespace detail {

inline void require_non_negative(double e) {
  if (!(e >= 0.0)) throw std::invalid_argument("acuity: eccentricity must be >= 0");
}

template <typename Derived>
void require_non_negative(const Eigen::ArrayBase<Derived>& e) {
  if (!(e >= 0.0).all()) throw std::invalid_argument("acuity: eccentricity must be >= 0");
}

}  // namespace detail

// Cycles per degree. Works on scalars and Eigen arrays.
template <typename T>
auto acuity_cpd(const T& e, const AcuityParams& p = {}) {
  detail::require_non_negative(e);
  return p.ct0_term * p.e2 / (p.alpha * (e + p.e2));
}

// A(e) / A(0) = e2 / (e + e2), in (0, 1].
template <typename T>
auto relative_acuity(const T& e, const AcuityParams& p = {}) {
  detail::require_non_negative(e);
  return p.e2 / (e + p.e2);
}

struct AcuityProfile {
  AcuityParams params;
};

struct GaussianProfile {
  double sigma_deg = 1.0;
};

// 1 inside radius_deg (inclusive), `floor` beyond.
struct StepProfile {
  double radius_deg = 5.0;
  double floor = 0.2;
};

// Quality 1 up to the first radius; beyond steps[i].radius_deg the quality is
// steps[i].quality. An empty list is the constant profile 1.
struct MultiStepProfile {
  struct Step {
    double radius_deg;
    double quality;
  };
  std::vector<Step> steps;
};

using QualityProfile = std::variant<AcuityProfile, GaussianProfile, StepProfile, MultiStepProfile>;

// Throws std::invalid_argument for malformed parameters.
void validate_profile(const QualityProfile& profile);

double profile_quality(const QualityProfile& profile, double e);

// Region the gaze cannot escape within `latency_s`: fovea + v_max * t.
double min_region_radius(double latency_s, const SaccadeParams& s = {});

// Mean profile quality over every display pixel for a given gaze.
double profile_bit_share(const QualityProfile& profile, const ViewingGeometry& geom,
                         const PixelPoint& gaze);

}  // namespace fovstream
