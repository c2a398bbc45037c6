#pragma once

#include "ctflow/geometry.hpp"
#include "ctflow/interpolation.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ctflow {

using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class Plane { TopXY, LeftYZ, RightYZ };

std::string plane_name(Plane plane);          // "top-xy" | "left-yz" | "right-yz"
Plane plane_from_name(const std::string& s);  // throws ValidationError

/// Orthographic camera. Pixel columns run along u, rows along v, both in
/// world millimeters: u,v = x,y for the top view and y,z for the side
/// views. The side views split the surface at the centroid x plane.
struct ProjectionSpec {
  Plane plane = Plane::TopXY;
  int rows = 128;
  int cols = 128;
  double u_min = -1.0, u_max = 1.0;
  double v_min = -1.0, v_max = 1.0;

  void validate() const;
};

/// Window centered on the model with isotropic pixels (equal mm/px on both
/// axes), margin relative to the covered semi-axes.
ProjectionSpec default_projection(const EllipsoidModel& model, Plane plane, int rows = 128,
                                  int cols = 128, double margin = 1.15);

/// The interpolated field lifted to 3D: every grid site displaced along
/// the outward normal by value * scale.
struct TactileSurface {
  GridSpec grid;
  std::vector<Vec3> base;       // row-major site order
  std::vector<Vec3> displaced;
  std::vector<Vec3> normal;
  Eigen::MatrixXd values;
};

TactileSurface build_tactile_surface(const SurfaceField& field, const EllipsoidModel& model,
                                     double scale);

/// Depth normalization range, fixed once per sequence so intensities stay
/// comparable across frames.
struct NormBounds {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  bool valid() const { return hi > lo; }
};

/// Extends bounds by the depth range of one surface under the projection.
void accumulate_norm_bounds(const TactileSurface& surface, const ProjectionSpec& spec,
                            NormBounds& bounds);
NormBounds compute_norm_bounds(const std::vector<TactileSurface>& surfaces,
                               const ProjectionSpec& spec);

/// One grayscale orthographic projection of the tactile surface.
struct TactileFrame {
  Eigen::MatrixXd intensity;  // rows x cols, values in [0, 1]
  Mask mask;                  // 1 where at least one surface point landed
  Plane plane = Plane::TopXY;
  NormBounds bounds;
  double timestamp = 0.0;
};

/// Splats the camera-facing surface points into pixels; intensity is the
/// normalized depth of the point nearest the camera, empty pixels are 0.
/// Throws ValidationError when bounds are degenerate.
TactileFrame render_frame(const TactileSurface& surface, const ProjectionSpec& spec,
                          NormBounds bounds, double timestamp = 0.0);

/// Rounds intensities to the 8-bit levels used by the PGM export (0 is
/// reserved for pixels outside the mask).
TactileFrame quantize_frame(const TactileFrame& frame);

}  // namespace ctflow
