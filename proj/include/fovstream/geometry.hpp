#pragma once

#include <Eigen/Core>

namespace fovstream {

// Display pixel coordinates: top-left origin, y down.
struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

// Visual angle relative to the display center, y up. Each axis is the angle of
// the ray's projection onto that axis' plane (x = atan(dx / d), y = atan(dy / d)).
struct DegreePoint {
  double x = 0.0;
  double y = 0.0;
};

// Flat display viewed head-on from `distance_cm` in front of its center.
struct ViewingGeometry {
  int width_px = 0;
  int height_px = 0;
  double width_cm = 0.0;
  double height_cm = 0.0;
  double distance_cm = 0.0;

  // Throws std::invalid_argument if any field is non-positive or the pixel and
  // physical aspect ratios disagree by more than 1%.
  void validate() const;

  double pitch_x_cm() const { return width_cm / width_px; }
  double pitch_y_cm() const { return height_cm / height_px; }
  double hfov_deg() const;
};

// The 59.67 x 33.56 cm desktop monitor at the distance giving a 55 degree
// horizontal field of view, rendered at the given pixel resolution.
ViewingGeometry reference_geometry(int width_px = 3840, int height_px = 2160);

// Physical ray from the eye through a display point, in cm.
Eigen::Vector3d view_ray(const PixelPoint& p, const ViewingGeometry& geom);
Eigen::Vector3d view_ray(const DegreePoint& p);

// Angle between two unit-free rays, in degrees.
double ray_angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

// Angle between the rays through `point` and `gaze`. Off-screen points are fine.
double eccentricity_deg(const PixelPoint& point, const PixelPoint& gaze,
                        const ViewingGeometry& geom);

double angular_distance_deg(const DegreePoint& a, const DegreePoint& b);

DegreePoint to_degrees(const PixelPoint& p, const ViewingGeometry& geom);
PixelPoint to_pixels(const DegreePoint& p, const ViewingGeometry& geom);

// Viewing distance at which a display `width_cm` wide spans `hfov_deg`.
double distance_for_hfov(double width_cm, double hfov_deg);

// Local sampling density at the display center (one pixel pitch subtends
// 1 / ppd degrees there).
double pixels_per_degree_center(const ViewingGeometry& geom);
// width_px / hFOV.
double pixels_per_degree_mean(const ViewingGeometry& geom);

// Per-pixel unit rays for a whole display, used to evaluate eccentricity
// maps quickly. Pixel (x, y) is sampled at its center (x + 0.5, y + 0.5).
class EccentricityField {
 public:
  explicit EccentricityField(const ViewingGeometry& geom);

  const ViewingGeometry& geometry() const { return geom_; }
  // Unit view ray of every pixel center, row-major columns.
  const Eigen::Matrix<double, 3, Eigen::Dynamic>& rays() const { return rays_; }

  // Eccentricity in degrees of every pixel center, row-major.
  Eigen::ArrayXd eccentricities(const PixelPoint& gaze) const;

 private:
  ViewingGeometry geom_;
  Eigen::Matrix<double, 3, Eigen::Dynamic> rays_;
};

}  // namespace fovstream
