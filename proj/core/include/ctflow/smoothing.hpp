#pragma once

#include <Eigen/Core>

#include <vector>

namespace ctflow {

/// One recorded session: N samples of 24 taxel impedances plus the
/// hydro-acoustic pressure channel. Values are raw sensor counts.
struct TaxelRecording {
  std::vector<double> timestamps;  // seconds, strictly increasing
  Eigen::MatrixXd impedances;      // N x 24
  Eigen::VectorXd pressure;        // N

  std::size_t size() const { return timestamps.size(); }
  /// Throws ValidationError on shape mismatch, non-monotone time or
  /// non-finite values.
  void validate() const;
};

/// Smoothing leaves the shape untouched, only the values change.
using SmoothedRecording = TaxelRecording;

/// Noise scales for the constant-state model: transition I, measurement
/// covariance r_scale*I, process covariance q_scale*I. The initial state
/// covariance is s0_scale*I; it is not prescribed by the model, the
/// default matches the measurement noise.
struct SmootherConfig {
  double r_scale = 0.005;
  double q_scale = 0.00015;
  double s0_scale = 0.005;

  void validate() const;
};

/// With scalar-identity noise every channel shares one covariance scalar;
/// Dense runs the same recursions with full matrices (the two must agree,
/// which is what the channel-decoupling test checks).
enum class CovarianceForm { ScalarIdentity, Dense };

struct KalmanForwardResult {
  Eigen::MatrixXd filtered;   // N x C, p(t|t)
  Eigen::MatrixXd predicted;  // N x C, p(t|t-1); row 0 mirrors filtered
  CovarianceForm form = CovarianceForm::ScalarIdentity;

  // S = s * I in scalar form...
  std::vector<double> cov_filtered;
  std::vector<double> cov_predicted;
  // ...and full matrices in dense form.
  std::vector<Eigen::MatrixXd> cov_filtered_dense;
  std::vector<Eigen::MatrixXd> cov_predicted_dense;
};

struct RtsResult {
  Eigen::MatrixXd smoothed;  // N x C, p(t|T)
  std::vector<double> cov_smoothed;
  std::vector<Eigen::MatrixXd> cov_smoothed_dense;
};

/// Forward pass over an N x C value matrix. Initial state is the first
/// measurement. Throws ValidationError on an empty input.
KalmanForwardResult kalman_forward(const Eigen::MatrixXd& values, const SmootherConfig& cfg,
                                   CovarianceForm form = CovarianceForm::ScalarIdentity);

/// Backward (Rauch-Tung-Striebel) pass; the last smoothed state equals the
/// last filtered state.
RtsResult rts_backward(const KalmanForwardResult& forward);

/// Forward + backward over a raw matrix.
Eigen::MatrixXd smooth_values(const Eigen::MatrixXd& values, const SmootherConfig& cfg,
                              CovarianceForm form = CovarianceForm::ScalarIdentity);

/// Smooths all 24 impedance channels and the pressure channel of a
/// recording with the same machinery.
SmoothedRecording smooth(const TaxelRecording& rec, const SmootherConfig& cfg,
                         CovarianceForm form = CovarianceForm::ScalarIdentity);

}  // namespace ctflow
