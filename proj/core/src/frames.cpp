#include "ctflow/frames.hpp"

#include "ctflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ctflow {

namespace {

// Signed depth toward the camera: larger means nearer.
double depth_of(const Vec3& p, Plane plane) {
  switch (plane) {
    case Plane::TopXY: return p.z();
    case Plane::LeftYZ: return -p.x();
    case Plane::RightYZ: return p.x();
  }
  return 0.0;
}

// (u, v) window coordinates of a point under the projection.
void project(const Vec3& p, Plane plane, double& u, double& v) {
  if (plane == Plane::TopXY) {
    u = p.x();
    v = p.y();
  } else {
    u = p.y();
    v = p.z();
  }
}

// A site is imaged when it faces the camera; the side views additionally
// take only their half of the surface. For an axis-aligned ellipsoid the
// half split and the facing test coincide on the base surface.
bool site_visible(const Vec3& normal, Plane plane) {
  switch (plane) {
    case Plane::TopXY: return normal.z() >= 0.0;
    case Plane::LeftYZ: return normal.x() < 0.0;
    case Plane::RightYZ: return normal.x() >= 0.0;
  }
  return false;
}

}  // namespace

std::string plane_name(Plane plane) {
  switch (plane) {
    case Plane::TopXY: return "top-xy";
    case Plane::LeftYZ: return "left-yz";
    case Plane::RightYZ: return "right-yz";
  }
  return "top-xy";
}

Plane plane_from_name(const std::string& s) {
  if (s == "top-xy" || s == "top") return Plane::TopXY;
  if (s == "left-yz" || s == "left") return Plane::LeftYZ;
  if (s == "right-yz" || s == "right") return Plane::RightYZ;
  throw ValidationError("unknown projection plane '" + s + "' (expected top, left or right)");
}

void ProjectionSpec::validate() const {
  if (rows <= 1 || cols <= 1) throw ValidationError("projection resolution must be > 1");
  if (!(u_max > u_min) || !(v_max > v_min)) {
    throw ValidationError("projection window is degenerate");
  }
}

ProjectionSpec default_projection(const EllipsoidModel& model, Plane plane, int rows, int cols,
                                  double margin) {
  model.validate();
  ProjectionSpec spec;
  spec.plane = plane;
  spec.rows = rows;
  spec.cols = cols;
  double cu, cv, half;
  if (plane == Plane::TopXY) {
    cu = model.centroid.x();
    cv = model.centroid.y();
    half = margin * std::max(model.a, model.b);
  } else {
    cu = model.centroid.y();
    cv = model.centroid.z();
    half = margin * std::max(model.b, model.c);
  }
  spec.u_min = cu - half;
  spec.u_max = cu + half;
  spec.v_min = cv - half;
  spec.v_max = cv + half;
  return spec;
}

TactileSurface build_tactile_surface(const SurfaceField& field, const EllipsoidModel& model,
                                     double scale) {
  model.validate();
  TactileSurface surface;
  surface.grid = field.grid;
  surface.values = field.values;
  const std::size_t count = field.grid.site_count();
  surface.base.resize(count);
  surface.displaced.resize(count);
  surface.normal.resize(count);
  for (int i = 0; i < field.grid.rows; ++i) {
    for (int j = 0; j < field.grid.cols; ++j) {
      const std::size_t s = static_cast<std::size_t>(i) * field.grid.cols + j;
      const SurfaceParam p = field.grid.param_at(i, j);
      surface.base[s] = param_to_point(model, p);
      surface.normal[s] = surface_normal(model, p);
      surface.displaced[s] = surface.base[s] + field.values(i, j) * scale * surface.normal[s];
    }
  }
  return surface;
}

void accumulate_norm_bounds(const TactileSurface& surface, const ProjectionSpec& spec,
                            NormBounds& bounds) {
  for (std::size_t s = 0; s < surface.displaced.size(); ++s) {
    if (!site_visible(surface.normal[s], spec.plane)) continue;
    const double d = depth_of(surface.displaced[s], spec.plane);
    bounds.lo = std::min(bounds.lo, d);
    bounds.hi = std::max(bounds.hi, d);
  }
}

NormBounds compute_norm_bounds(const std::vector<TactileSurface>& surfaces,
                               const ProjectionSpec& spec) {
  NormBounds bounds;
  for (const auto& surface : surfaces) accumulate_norm_bounds(surface, spec, bounds);
  return bounds;
}

TactileFrame render_frame(const TactileSurface& surface, const ProjectionSpec& spec,
                          NormBounds bounds, double timestamp) {
  spec.validate();
  if (!bounds.valid()) {
    throw ValidationError("render_frame: degenerate normalization bounds (hi <= lo)");
  }

  TactileFrame frame;
  frame.plane = spec.plane;
  frame.bounds = bounds;
  frame.timestamp = timestamp;
  frame.intensity = Eigen::MatrixXd::Zero(spec.rows, spec.cols);
  frame.mask = Mask::Zero(spec.rows, spec.cols);

  const double du = (spec.u_max - spec.u_min) / spec.cols;
  const double dv = (spec.v_max - spec.v_min) / spec.rows;
  const double range = bounds.hi - bounds.lo;

  for (std::size_t s = 0; s < surface.displaced.size(); ++s) {
    if (!site_visible(surface.normal[s], spec.plane)) continue;
    double u, v;
    project(surface.displaced[s], spec.plane, u, v);
    const int col = static_cast<int>(std::floor((u - spec.u_min) / du));
    const int row = static_cast<int>(std::floor((v - spec.v_min) / dv));
    if (row < 0 || row >= spec.rows || col < 0 || col >= spec.cols) continue;
    const double depth = depth_of(surface.displaced[s], spec.plane);
    const double value = std::clamp((depth - bounds.lo) / range, 0.0, 1.0);
    if (!frame.mask(row, col) || value > frame.intensity(row, col)) {
      frame.intensity(row, col) = value;
    }
    frame.mask(row, col) = 1;
  }
  return frame;
}

TactileFrame quantize_frame(const TactileFrame& frame) {
  TactileFrame out = frame;
  for (Eigen::Index r = 0; r < frame.intensity.rows(); ++r) {
    for (Eigen::Index c = 0; c < frame.intensity.cols(); ++c) {
      if (frame.mask(r, c)) {
        const double level = 1.0 + std::round(std::clamp(frame.intensity(r, c), 0.0, 1.0) * 254.0);
        out.intensity(r, c) = level / 255.0;
      } else {
        out.intensity(r, c) = 0.0;
      }
    }
  }
  return out;
}

}  // namespace ctflow
