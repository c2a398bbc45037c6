#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <numbers>

namespace ctflow {

inline constexpr std::size_t kTaxelCount = 24;
inline constexpr double kPi = std::numbers::pi;

using Vec3 = Eigen::Vector3d;

/// Chart coordinates on the half-ellipsoid sensor core.
/// theta runs pole-to-pole in [0, pi]; phi spans the mapped half in [pi, 2*pi].
struct SurfaceParam {
  double theta = 0.0;
  double phi = kPi;

  bool in_domain(double slack = 1e-9) const;
};

/// The 24 electrode positions in the sensor frame, millimeters.
/// The array index is the zero-based taxel index (file format is 1-based).
struct TaxelLayout {
  std::array<Vec3, kTaxelCount> positions{};

  /// Throws ValidationError if any coordinate is non-finite or any point
  /// lies below z = -z_slack.
  void validate(double z_slack = 1.0) const;
};

/// Axis-aligned ellipsoid: centroid + (a,b,c) semi-axes, millimeters.
struct EllipsoidModel {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
  Vec3 centroid = Vec3::Zero();

  void validate() const;
};

/// Fits an axis-aligned ellipsoid (centroid fitted jointly) by minimizing
/// the sum of squared algebraic residuals
///   sum_i (((x_i-cx)/a)^2 + ((y_i-cy)/b)^2 + ((z_i-cz)/c)^2 - 1)^2.
/// A linear quadric fit seeds a Levenberg-Marquardt polish of that objective.
/// Throws NumericalError on degenerate layouts, naming the deficient
/// direction(s).
EllipsoidModel fit_ellipsoid(const TaxelLayout& layout);

/// Mean absolute algebraic residual of the layout under the model. Zero for
/// points exactly on the surface.
double mean_algebraic_residual(const EllipsoidModel& model, const TaxelLayout& layout);

/// centroid + (a sin(theta) cos(phi), b sin(theta) sin(phi), c cos(theta))
Vec3 param_to_point(const EllipsoidModel& model, const SurfaceParam& p);

/// Inverse chart: radial projection of x onto the surface, returned as
/// (theta, phi) with phi normalized into [pi, 2*pi]. At the poles phi is
/// undefined and pi is returned. Throws NumericalError when x coincides
/// with the centroid or lies on the unmapped half (y > centroid.y).
SurfaceParam point_to_param(const EllipsoidModel& model, const Vec3& x);

/// Polyline approximation of the surface distance between p and q:
/// n_segments chords along the path that interpolates (theta, phi)
/// linearly. Result is in millimeters and never below the straight-line
/// distance between the endpoints.
double geodesic_distance(const EllipsoidModel& model, const SurfaceParam& p,
                         const SurfaceParam& q, int n_segments = 50);

/// Outward unit normal at a chart point (normalized gradient of the
/// implicit ellipsoid function).
Vec3 surface_normal(const EllipsoidModel& model, const SurfaceParam& p);

}  // namespace ctflow
