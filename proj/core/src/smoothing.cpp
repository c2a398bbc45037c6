#include "ctflow/smoothing.hpp"

#include "ctflow/errors.hpp"
#include "ctflow/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace ctflow {

void TaxelRecording::validate() const {
  const auto n = static_cast<Eigen::Index>(timestamps.size());
  if (n == 0) throw ValidationError("recording is empty");
  if (impedances.rows() != n || pressure.size() != n) {
    throw ValidationError("recording shape mismatch: " + std::to_string(timestamps.size()) +
                          " timestamps, " + std::to_string(impedances.rows()) +
                          " impedance rows, " + std::to_string(pressure.size()) +
                          " pressure samples");
  }
  if (impedances.cols() != static_cast<Eigen::Index>(kTaxelCount)) {
    throw ValidationError("recording must have 24 impedance channels, got " +
                          std::to_string(impedances.cols()));
  }
  for (std::size_t t = 1; t < timestamps.size(); ++t) {
    if (!(timestamps[t] > timestamps[t - 1])) {
      throw ValidationError("timestamps not strictly increasing at sample " + std::to_string(t));
    }
  }
  if (!impedances.allFinite() || !pressure.allFinite()) {
    throw ValidationError("recording contains non-finite values");
  }
  for (double t : timestamps) {
    if (!std::isfinite(t)) throw ValidationError("recording contains non-finite timestamps");
  }
}

void SmootherConfig::validate() const {
  if (!(r_scale > 0.0) || !(q_scale > 0.0) || !(s0_scale > 0.0)) {
    throw ValidationError("smoother scales must be positive (r_scale, q_scale, s0_scale)");
  }
}

KalmanForwardResult kalman_forward(const Eigen::MatrixXd& values, const SmootherConfig& cfg,
                                   CovarianceForm form) {
  cfg.validate();
  const Eigen::Index n = values.rows();
  const Eigen::Index channels = values.cols();
  if (n == 0 || channels == 0) throw ValidationError("kalman_forward: empty input");

  KalmanForwardResult out;
  out.form = form;
  out.filtered.resize(n, channels);
  out.predicted.resize(n, channels);
  out.filtered.row(0) = values.row(0);
  out.predicted.row(0) = values.row(0);

  if (form == CovarianceForm::ScalarIdentity) {
    out.cov_filtered.assign(n, 0.0);
    out.cov_predicted.assign(n, 0.0);
    double s = cfg.s0_scale;
    out.cov_filtered[0] = s;
    out.cov_predicted[0] = s;
    for (Eigen::Index t = 1; t < n; ++t) {
      // transition is the identity, so the prediction is the previous state
      const double s_pred = s + cfg.q_scale;
      const double k = s_pred / (s_pred + cfg.r_scale);
      s = (1.0 - k) * s_pred;
      out.predicted.row(t) = out.filtered.row(t - 1);
      out.filtered.row(t) =
          out.predicted.row(t) + k * (values.row(t) - out.predicted.row(t));
      out.cov_predicted[t] = s_pred;
      out.cov_filtered[t] = s;
    }
    return out;
  }

  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(channels, channels);
  const Eigen::MatrixXd r = cfg.r_scale * identity;
  const Eigen::MatrixXd q = cfg.q_scale * identity;

  out.cov_filtered_dense.resize(n);
  out.cov_predicted_dense.resize(n);
  Eigen::MatrixXd s = cfg.s0_scale * identity;
  out.cov_filtered_dense[0] = s;
  out.cov_predicted_dense[0] = s;
  for (Eigen::Index t = 1; t < n; ++t) {
    Eigen::MatrixXd s_pred = s + q;
    const Eigen::MatrixXd gain = s_pred * (s_pred + r).inverse();
    s = (identity - gain) * s_pred;
    s = 0.5 * (s + s.transpose());  // keep the covariance symmetric
    out.predicted.row(t) = out.filtered.row(t - 1);
    out.filtered.row(t) =
        out.predicted.row(t) +
        (gain * (values.row(t) - out.predicted.row(t)).transpose()).transpose();
    out.cov_predicted_dense[t] = s_pred;
    out.cov_filtered_dense[t] = s;
  }
  return out;
}

RtsResult rts_backward(const KalmanForwardResult& fwd) {
  const Eigen::Index n = fwd.filtered.rows();
  if (n == 0) throw ValidationError("rts_backward: empty forward pass");

  RtsResult out;
  out.smoothed = fwd.filtered;  // last smoothed state equals last filtered state

  if (fwd.form == CovarianceForm::ScalarIdentity) {
    out.cov_smoothed.assign(n, 0.0);
    out.cov_smoothed[n - 1] = fwd.cov_filtered[n - 1];
    for (Eigen::Index t = n - 1; t >= 1; --t) {
      const double gain = fwd.cov_filtered[t - 1] / fwd.cov_predicted[t];
      out.cov_smoothed[t - 1] =
          fwd.cov_filtered[t - 1] +
          gain * (out.cov_smoothed[t] - fwd.cov_predicted[t]) * gain;
      out.smoothed.row(t - 1) =
          fwd.filtered.row(t - 1) +
          gain * (out.smoothed.row(t) - fwd.predicted.row(t));
    }
    return out;
  }

  out.cov_smoothed_dense.resize(n);
  out.cov_smoothed_dense[n - 1] = fwd.cov_filtered_dense[n - 1];
  for (Eigen::Index t = n - 1; t >= 1; --t) {
    const Eigen::MatrixXd gain =
        fwd.cov_filtered_dense[t - 1] * fwd.cov_predicted_dense[t].inverse();
    Eigen::MatrixXd s =
        fwd.cov_filtered_dense[t - 1] +
        gain * (out.cov_smoothed_dense[t] - fwd.cov_predicted_dense[t]) * gain.transpose();
    out.cov_smoothed_dense[t - 1] = 0.5 * (s + s.transpose());
    out.smoothed.row(t - 1) =
        fwd.filtered.row(t - 1) +
        (gain * (out.smoothed.row(t) - fwd.predicted.row(t)).transpose()).transpose();
  }
  return out;
}

Eigen::MatrixXd smooth_values(const Eigen::MatrixXd& values, const SmootherConfig& cfg,
                              CovarianceForm form) {
  return rts_backward(kalman_forward(values, cfg, form)).smoothed;
}

SmoothedRecording smooth(const TaxelRecording& rec, const SmootherConfig& cfg,
                         CovarianceForm form) {
  rec.validate();
  SmoothedRecording out;
  out.timestamps = rec.timestamps;
  out.impedances = smooth_values(rec.impedances, cfg, form);
  out.pressure = smooth_values(rec.pressure, cfg, form);
  return out;
}

}  // namespace ctflow
