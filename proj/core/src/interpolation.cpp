#include "ctflow/interpolation.hpp"

#include "ctflow/errors.hpp"
#include "ctflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ctflow {

void KernelConfig::validate() const {
  if (!(sigma > 0.0)) throw ValidationError("kernel sigma must be > 0");
  if (n_segments < 1) throw ValidationError("kernel n_segments must be >= 1");
}

double GridSpec::theta_at(int i) const {
  if (rows == 1) return 0.5 * (theta_min + theta_max);
  return theta_min + (theta_max - theta_min) * i / static_cast<double>(rows - 1);
}

double GridSpec::phi_at(int j) const {
  if (cols == 1) return 0.5 * (phi_min + phi_max);
  return phi_min + (phi_max - phi_min) * j / static_cast<double>(cols - 1);
}

SurfaceParam GridSpec::param_at(int i, int j) const {
  return SurfaceParam{theta_at(i), phi_at(j)};
}

void GridSpec::validate() const {
  if (rows < 1 || cols < 1) throw ValidationError("grid resolution must be >= 1");
  if (!(theta_max >= theta_min) || !(phi_max >= phi_min)) {
    throw ValidationError("grid ranges are inverted");
  }
  if (!SurfaceParam{theta_min, phi_min}.in_domain() ||
      !SurfaceParam{theta_max, phi_max}.in_domain()) {
    throw ValidationError("grid range leaves the chart domain [0,pi] x [pi,2pi]");
  }
}

double kernel_weight(const EllipsoidModel& model, const SurfaceParam& p,
                     const SurfaceParam& q, const KernelConfig& cfg) {
  const double d = geodesic_distance(model, p, q, cfg.n_segments);
  const double arg = cfg.squared_exponent ? d * d : d;
  return std::exp(-arg / (2.0 * cfg.sigma * cfg.sigma));
}

TaxelParams layout_params(const EllipsoidModel& model, const TaxelLayout& layout) {
  TaxelParams params;
  for (std::size_t i = 0; i < kTaxelCount; ++i) {
    params[i] = point_to_param(model, layout.positions[i]);
  }
  return params;
}

WeightTable precompute_weights(const EllipsoidModel& model, const TaxelParams& taxels,
                               const GridSpec& grid, const KernelConfig& cfg, int jobs) {
  grid.validate();
  cfg.validate();
  WeightTable table;
  table.grid = grid;
  table.weights.resize(static_cast<Eigen::Index>(grid.site_count()), kTaxelCount);
  parallel_for(static_cast<std::size_t>(grid.rows), jobs, [&](std::size_t i) {
    for (int j = 0; j < grid.cols; ++j) {
      const SurfaceParam site = grid.param_at(static_cast<int>(i), j);
      const Eigen::Index s = static_cast<Eigen::Index>(i) * grid.cols + j;
      for (std::size_t k = 0; k < kTaxelCount; ++k) {
        table.weights(s, static_cast<Eigen::Index>(k)) =
            kernel_weight(model, site, taxels[k], cfg);
      }
    }
  });
  return table;
}

SurfaceField interpolate_with_table(const WeightTable& table, const Eigen::VectorXd& values) {
  if (values.size() != static_cast<Eigen::Index>(kTaxelCount)) {
    throw ValidationError("interpolation expects 24 taxel values");
  }
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();

  SurfaceField field;
  field.grid = table.grid;
  field.values.resize(table.grid.rows, table.grid.cols);
  for (int i = 0; i < table.grid.rows; ++i) {
    for (int j = 0; j < table.grid.cols; ++j) {
      const Eigen::Index s = static_cast<Eigen::Index>(i) * table.grid.cols + j;
      double num = 0.0, den = 0.0;
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kTaxelCount); ++k) {
        const double w = table.weights(s, k);
        num += w * values(k);
        den += w;
      }
      if (den <= 0.0) {
        std::ostringstream msg;
        msg << "kernel weights underflow at grid site (" << i << ", " << j << "), theta="
            << table.grid.theta_at(i) << " phi=" << table.grid.phi_at(j)
            << "; sigma is too small for the taxel spacing";
        throw NumericalError(msg.str());
      }
      // weighted average of samples; the clamp guards rounding spill past
      // the sample range so the convex-combination bound holds exactly
      field.values(i, j) = std::clamp(num / den, lo, hi);
    }
  }
  return field;
}

SurfaceField interpolate_field(const EllipsoidModel& model, const TaxelParams& taxels,
                               const Eigen::VectorXd& values, const GridSpec& grid,
                               const KernelConfig& cfg, int jobs) {
  return interpolate_with_table(precompute_weights(model, taxels, grid, cfg, jobs), values);
}

}  // namespace ctflow
