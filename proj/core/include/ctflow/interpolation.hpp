#pragma once

#include "ctflow/geometry.hpp"

#include <Eigen/Core>

#include <array>

namespace ctflow {

/// Geodesic Gaussian kernel settings. The default exponent is the linear
/// form exp(-d / (2 sigma^2)); squared_exponent switches to the classical
/// exp(-d^2 / (2 sigma^2)) for comparison.
struct KernelConfig {
  double sigma = 4.0;  // mm
  int n_segments = 50;
  bool squared_exponent = false;

  void validate() const;
};

/// Regular sample grid in chart coordinates, endpoints included. A single
/// row (or column) collapses to the midpoint of its range.
struct GridSpec {
  int rows = 64;
  int cols = 128;
  double theta_min = 0.0;
  double theta_max = kPi;
  double phi_min = kPi;
  double phi_max = 2.0 * kPi;

  double theta_at(int i) const;
  double phi_at(int j) const;
  SurfaceParam param_at(int i, int j) const;
  std::size_t site_count() const { return static_cast<std::size_t>(rows) * cols; }
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

using TaxelParams = std::array<SurfaceParam, kTaxelCount>;

/// Estimated impedance per grid site.
struct SurfaceField {
  GridSpec grid;
  Eigen::MatrixXd values;  // rows x cols
};

/// Kernel weights per (site, taxel) pair. Depends only on geometry and the
/// kernel config, so one table serves every time step of a sequence.
struct WeightTable {
  GridSpec grid;
  Eigen::MatrixXd weights;  // site_count x 24, sites in row-major order
};

double kernel_weight(const EllipsoidModel& model, const SurfaceParam& p,
                     const SurfaceParam& q, const KernelConfig& cfg);

/// Chart coordinates of all 24 taxels of a layout.
TaxelParams layout_params(const EllipsoidModel& model, const TaxelLayout& layout);

WeightTable precompute_weights(const EllipsoidModel& model, const TaxelParams& taxels,
                               const GridSpec& grid, const KernelConfig& cfg, int jobs = 1);

/// Normalized kernel estimate per site. Each site value is a convex
/// combination of the 24 taxel values; throws NumericalError when the
/// weight sum underflows to zero at some site.
SurfaceField interpolate_with_table(const WeightTable& table, const Eigen::VectorXd& values);

SurfaceField interpolate_field(const EllipsoidModel& model, const TaxelParams& taxels,
                               const Eigen::VectorXd& values, const GridSpec& grid,
                               const KernelConfig& cfg, int jobs = 1);

}  // namespace ctflow
