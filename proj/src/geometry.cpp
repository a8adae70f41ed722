#include "fovstream/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

namespace fovstream {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

void ViewingGeometry::validate() const {
  if (width_px <= 0 || height_px <= 0) {
    throw std::invalid_argument("geometry: pixel dimensions must be positive");
  }
  if (!(width_cm > 0.0) || !(height_cm > 0.0) || !(distance_cm > 0.0)) {
    throw std::invalid_argument("geometry: physical dimensions must be positive");
  }
  const double aspect_px = static_cast<double>(width_px) / height_px;
  const double aspect_cm = width_cm / height_cm;
  if (std::abs(aspect_px - aspect_cm) > 0.01 * aspect_cm) {
    throw std::invalid_argument("geometry: pixel aspect " + std::to_string(aspect_px) +
                                " does not match physical aspect " +
                                std::to_string(aspect_cm));
  }
}

double ViewingGeometry::hfov_deg() const {
  return 2.0 * std::atan(0.5 * width_cm / distance_cm) * kRadToDeg;
}

ViewingGeometry reference_geometry(int width_px, int height_px) {
  ViewingGeometry g;
  g.width_px = width_px;
  g.height_px = height_px;
  g.width_cm = 59.67;
  g.height_cm = 33.56;
  g.distance_cm = distance_for_hfov(g.width_cm, 55.0);
  return g;
}

Eigen::Vector3d view_ray(const PixelPoint& p, const ViewingGeometry& geom) {
  return {(p.x - 0.5 * geom.width_px) * geom.pitch_x_cm(),
          (0.5 * geom.height_px - p.y) * geom.pitch_y_cm(), geom.distance_cm};
}

Eigen::Vector3d view_ray(const DegreePoint& p) {
  return {std::tan(p.x * kDegToRad), std::tan(p.y * kDegToRad), 1.0};
}

double ray_angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  // atan2 of |a x b| and a . b stays accurate for nearly parallel rays.
  return std::atan2(a.cross(b).norm(), a.dot(b)) * kRadToDeg;
}

double eccentricity_deg(const PixelPoint& point, const PixelPoint& gaze,
                        const ViewingGeometry& geom) {
  return ray_angle_deg(view_ray(point, geom), view_ray(gaze, geom));
}

double angular_distance_deg(const DegreePoint& a, const DegreePoint& b) {
  return ray_angle_deg(view_ray(a), view_ray(b));
}

DegreePoint to_degrees(const PixelPoint& p, const ViewingGeometry& geom) {
  const Eigen::Vector3d r = view_ray(p, geom);
  return {std::atan(r.x() / r.z()) * kRadToDeg, std::atan(r.y() / r.z()) * kRadToDeg};
}

PixelPoint to_pixels(const DegreePoint& p, const ViewingGeometry& geom) {
  const double x_cm = geom.distance_cm * std::tan(p.x * kDegToRad);
  const double y_cm = geom.distance_cm * std::tan(p.y * kDegToRad);
  return {0.5 * geom.width_px + x_cm / geom.pitch_x_cm(),
          0.5 * geom.height_px - y_cm / geom.pitch_y_cm()};
}

double distance_for_hfov(double width_cm, double hfov_deg) {
  if (!(width_cm > 0.0)) {
    throw std::invalid_argument("distance_for_hfov: width must be positive");
  }
  if (!(hfov_deg > 0.0) || !(hfov_deg < 180.0)) {
    throw std::invalid_argument("distance_for_hfov: hfov must be in (0, 180)");
  }
  return 0.5 * width_cm / std::tan(0.5 * hfov_deg * kDegToRad);
}

double pixels_per_degree_center(const ViewingGeometry& geom) {
  return 1.0 / (std::atan(geom.pitch_x_cm() / geom.distance_cm) * kRadToDeg);
}

double pixels_per_degree_mean(const ViewingGeometry& geom) {
  return geom.width_px / geom.hfov_deg();
}

EccentricityField::EccentricityField(const ViewingGeometry& geom)
    : geom_(geom), rays_(3, static_cast<Eigen::Index>(geom.width_px) * geom.height_px) {
  geom_.validate();
  Eigen::Index i = 0;
  for (int y = 0; y < geom.height_px; ++y) {
    for (int x = 0; x < geom.width_px; ++x, ++i) {
      rays_.col(i) = view_ray(PixelPoint{x + 0.5, y + 0.5}, geom_).normalized();
    }
  }
}

Eigen::ArrayXd EccentricityField::eccentricities(const PixelPoint& gaze) const {
  const Eigen::Vector3d g = view_ray(gaze, geom_).normalized();
  Eigen::ArrayXd cosines = (g.transpose() * rays_).transpose().array();
  return cosines.min(1.0).acos() * kRadToDeg;
}

}  // namespace fovstream
