#include "ctflow/geometry.hpp"

#include "ctflow/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace ctflow {

namespace {

std::string axis_name(int column) {
  // Design columns are [x^2, y^2, z^2, 2x, 2y, 2z]; both columns of a pair
  // collapse when the layout carries no information along that axis.
  switch (column % 3) {
    case 0: return "x";
    case 1: return "y";
    default: return "z";
  }
}

struct QuadricSeed {
  double a, b, c;
  Vec3 centroid;
};

// Linear least squares on A x^2 + B y^2 + C z^2 + 2Dx + 2Ey + 2Fz = 1.
QuadricSeed linear_seed(const TaxelLayout& layout) {
  Eigen::Matrix<double, kTaxelCount, 6> design;
  for (std::size_t i = 0; i < kTaxelCount; ++i) {
    const Vec3& p = layout.positions[i];
    design.row(i) << p.x() * p.x(), p.y() * p.y(), p.z() * p.z(),
        2.0 * p.x(), 2.0 * p.y(), 2.0 * p.z();
  }

  Eigen::ColPivHouseholderQR<Eigen::Matrix<double, kTaxelCount, 6>> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 6) {
    const auto perm = qr.colsPermutation().indices();
    std::string axes;
    for (int k = qr.rank(); k < 6; ++k) {
      const std::string name = axis_name(perm(k));
      if (axes.find(name) == std::string::npos) {
        if (!axes.empty()) axes += ", ";
        axes += name;
      }
    }
    throw NumericalError("ellipsoid fit failed: layout is rank-deficient along " + axes);
  }

  const Eigen::Matrix<double, 6, 1> u = qr.solve(Eigen::Matrix<double, kTaxelCount, 1>::Ones());
  for (int k = 0; k < 3; ++k) {
    if (!(u(k) > 0.0) || !std::isfinite(u(k))) {
      throw NumericalError("ellipsoid fit failed: nonpositive curvature along " + axis_name(k));
    }
  }

  QuadricSeed seed;
  seed.centroid = Vec3(-u(3) / u(0), -u(4) / u(1), -u(5) / u(2));
  const double gamma =
      1.0 + u(3) * u(3) / u(0) + u(4) * u(4) / u(1) + u(5) * u(5) / u(2);
  if (!(gamma > 0.0)) {
    throw NumericalError("ellipsoid fit failed: degenerate quadric (gamma <= 0)");
  }
  seed.a = std::sqrt(gamma / u(0));
  seed.b = std::sqrt(gamma / u(1));
  seed.c = std::sqrt(gamma / u(2));
  return seed;
}

double objective(const TaxelLayout& layout, const Eigen::Matrix<double, 6, 1>& p) {
  double sum = 0.0;
  for (const Vec3& x : layout.positions) {
    const double rx = (x.x() - p(3)) / p(0);
    const double ry = (x.y() - p(4)) / p(1);
    const double rz = (x.z() - p(5)) / p(2);
    const double r = rx * rx + ry * ry + rz * rz - 1.0;
    sum += r * r;
  }
  return sum;
}

}  // namespace

bool SurfaceParam::in_domain(double slack) const {
  return theta >= -slack && theta <= kPi + slack && phi >= kPi - slack &&
         phi <= 2.0 * kPi + slack;
}

void TaxelLayout::validate(double z_slack) const {
  for (std::size_t i = 0; i < kTaxelCount; ++i) {
    const Vec3& p = positions[i];
    if (!p.allFinite()) {
      throw ValidationError("taxel " + std::to_string(i + 1) + " has a non-finite coordinate");
    }
    if (p.z() < -z_slack) {
      std::ostringstream msg;
      msg << "taxel " << (i + 1) << " lies below the half-space bound (z = " << p.z()
          << " < -" << z_slack << ")";
      throw ValidationError(msg.str());
    }
  }
}

void EllipsoidModel::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0) || !std::isfinite(a) ||
      !std::isfinite(b) || !std::isfinite(c) || !centroid.allFinite()) {
    throw ValidationError("ellipsoid semi-axes must be positive and finite");
  }
}

EllipsoidModel fit_ellipsoid(const TaxelLayout& layout) {
  layout.validate(std::numeric_limits<double>::infinity());

  const QuadricSeed seed = linear_seed(layout);

  // Levenberg-Marquardt on (a, b, c, cx, cy, cz) for the normalized
  // residual; the linear seed minimizes a scaled variant, so for noisy
  // data the polish moves the parameters slightly.
  Eigen::Matrix<double, 6, 1> p;
  p << seed.a, seed.b, seed.c, seed.centroid.x(), seed.centroid.y(), seed.centroid.z();

  double lambda = 1e-3;
  double f = objective(layout, p);
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::Matrix<double, kTaxelCount, 6> jac;
    Eigen::Matrix<double, kTaxelCount, 1> res;
    for (std::size_t i = 0; i < kTaxelCount; ++i) {
      const Vec3& x = layout.positions[i];
      const double dx = x.x() - p(3);
      const double dy = x.y() - p(4);
      const double dz = x.z() - p(5);
      const double qx = dx / p(0), qy = dy / p(1), qz = dz / p(2);
      res(i) = qx * qx + qy * qy + qz * qz - 1.0;
      jac(i, 0) = -2.0 * qx * qx / p(0);
      jac(i, 1) = -2.0 * qy * qy / p(1);
      jac(i, 2) = -2.0 * qz * qz / p(2);
      jac(i, 3) = -2.0 * qx / p(0);
      jac(i, 4) = -2.0 * qy / p(1);
      jac(i, 5) = -2.0 * qz / p(2);
    }

    const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
    const Eigen::Matrix<double, 6, 1> jtr = jac.transpose() * res;
    if (jtr.norm() < 1e-14) break;

    Eigen::Matrix<double, 6, 6> damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::Matrix<double, 6, 1> step = damped.ldlt().solve(-jtr);
    const Eigen::Matrix<double, 6, 1> cand = p + step;

    if (cand(0) > 0.0 && cand(1) > 0.0 && cand(2) > 0.0) {
      const double fc = objective(layout, cand);
      if (fc < f) {
        p = cand;
        f = fc;
        lambda = std::max(lambda * 0.5, 1e-12);
        if (step.norm() < 1e-14 * (1.0 + p.norm())) break;
        continue;
      }
    }
    lambda *= 4.0;
    if (lambda > 1e12) break;
  }

  EllipsoidModel model;
  model.a = p(0);
  model.b = p(1);
  model.c = p(2);
  model.centroid = Vec3(p(3), p(4), p(5));
  model.validate();
  return model;
}

double mean_algebraic_residual(const EllipsoidModel& model, const TaxelLayout& layout) {
  double sum = 0.0;
  for (const Vec3& x : layout.positions) {
    const double rx = (x.x() - model.centroid.x()) / model.a;
    const double ry = (x.y() - model.centroid.y()) / model.b;
    const double rz = (x.z() - model.centroid.z()) / model.c;
    sum += std::abs(rx * rx + ry * ry + rz * rz - 1.0);
  }
  return sum / static_cast<double>(kTaxelCount);
}

Vec3 param_to_point(const EllipsoidModel& model, const SurfaceParam& p) {
  const double st = std::sin(p.theta);
  return model.centroid + Vec3(model.a * st * std::cos(p.phi),
                               model.b * st * std::sin(p.phi),
                               model.c * std::cos(p.theta));
}

SurfaceParam point_to_param(const EllipsoidModel& model, const Vec3& x) {
  const Vec3 d = x - model.centroid;
  const Vec3 n(d.x() / model.a, d.y() / model.b, d.z() / model.c);
  const double norm = n.norm();
  if (norm < 1e-12) {
    throw NumericalError("point_to_param: point coincides with the centroid, radial direction undefined");
  }

  SurfaceParam out;
  out.theta = std::acos(std::clamp(n.z() / norm, -1.0, 1.0));

  const double radial = std::hypot(n.x(), n.y());
  if (radial < 1e-12 * norm) {
    out.phi = kPi;  // pole: phi undefined, canonical value
    return out;
  }

  double ny = n.y();
  if (ny > 0.0) {
    if (ny > 1e-9 * norm) {
      throw NumericalError("point_to_param: point lies on the unmapped half (y > 0)");
    }
    ny = 0.0;  // snap numerical spill onto the phi = {pi, 2*pi} boundary
  }
  double phi = std::atan2(ny, n.x());  // in [-pi, 0]
  phi += 2.0 * kPi;                    // into [pi, 2*pi]
  out.phi = std::clamp(phi, kPi, 2.0 * kPi);
  return out;
}

double geodesic_distance(const EllipsoidModel& model, const SurfaceParam& p,
                         const SurfaceParam& q, int n_segments) {
  if (n_segments < 1) {
    throw ValidationError("geodesic_distance: n_segments must be >= 1");
  }
  const double dtheta = q.theta - p.theta;
  const double dphi = q.phi - p.phi;
  double length = 0.0;
  Vec3 prev = param_to_point(model, p);
  for (int k = 1; k <= n_segments; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n_segments);
    const SurfaceParam s{p.theta + t * dtheta, p.phi + t * dphi};
    const Vec3 cur = param_to_point(model, s);
    length += (cur - prev).norm();
    prev = cur;
  }
  return length;
}

Vec3 surface_normal(const EllipsoidModel& model, const SurfaceParam& p) {
  const Vec3 x = param_to_point(model, p) - model.centroid;
  const Vec3 grad(x.x() / (model.a * model.a), x.y() / (model.b * model.b),
                  x.z() / (model.c * model.c));
  return grad.normalized();
}

}  // namespace ctflow
