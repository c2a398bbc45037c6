#pragma once

#include "ctflow/frames.hpp"

#include <Eigen/Core>

namespace ctflow {

/// Parameters of the polynomial-expansion flow estimator.
struct FarnebackConfig {
  int window_radius = 7;     // applicability window half-width, pixels
  double poly_sigma = 1.5;   // Gaussian applicability width
  int levels = 3;            // pyramid levels (>= 1)
  double pyr_scale = 0.5;    // size ratio between levels, in (0, 1)
  int iterations = 5;        // displacement updates per level
  double flow_sigma = 1.1;   // spatial smoothing of the update equations

  void validate() const;
};

/// Per-pixel quadratic model I(x+u) ~ u'Au + b'u + c fitted over a
/// Gaussian-weighted window (u = column offset, v = row offset).
struct PolyExpansion {
  Eigen::MatrixXd c;
  Eigen::MatrixXd bx, by;
  Eigen::MatrixXd axx, axy, ayy;  // A = [[axx, axy], [axy, ayy]]
};

/// Weighted least-squares expansion via separable correlations with
/// reflective (mirror) borders.
PolyExpansion polynomial_expansion(const Eigen::MatrixXd& image, const FarnebackConfig& cfg);

/// Dense displacement field between two frames, pixels/frame. Values are
/// zero outside the validity mask.
struct FlowField {
  Eigen::MatrixXd vx, vy;
  Mask mask;

  Eigen::Index rows() const { return vx.rows(); }
  Eigen::Index cols() const { return vx.cols(); }
};

/// Coarse-to-fine displacement estimation from polynomial-expansion
/// coefficients. The validity mask is the intersection of both frame
/// silhouettes eroded by one window radius; flow is zeroed outside it.
/// Throws ValidationError on size or projection mismatch.
FlowField estimate_flow(const TactileFrame& prev, const TactileFrame& next,
                        const FarnebackConfig& cfg, const FlowField* init = nullptr);

/// Reduction of a flow field to one arrow.
struct AggregateFlow {
  Eigen::Vector2d direction = Eigen::Vector2d::Zero();  // unit when magnitude > 0
  double magnitude = 0.0;  // length of the magnitude-weighted mean vector
  double coverage = 0.0;   // fraction of masked pixels moving faster than the threshold
};

/// Magnitude-weighted mean over the validity mask. Throws ValidationError
/// on an empty mask.
AggregateFlow aggregate(const FlowField& flow, double coverage_threshold = 0.1);

/// Plain mean of the flow vectors over the validity mask.
Eigen::Vector2d masked_mean(const FlowField& flow);

/// Brightness-constancy diagnostic: mean |next(x + v) - prev(x)| over the
/// validity mask, bilinear sampling with clamped borders. The zero-flow
/// residual of a pair is mean_warp_residual with an all-zero field.
double mean_warp_residual(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& next,
                          const FlowField& flow);

}  // namespace ctflow
