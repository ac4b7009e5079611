#include "vibroloc/tracking.hpp"

#include "vibroloc/errors.hpp"

namespace vibroloc {

namespace {

Eigen::Matrix4d transition() {
  // Constant-velocity model in step index, unit interval between steps.
  Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
  F(0, 2) = 1.0;
  F(1, 3) = 1.0;
  return F;
}

Eigen::Matrix<double, 2, 4> observation() {
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  return H;
}

}  // namespace

void KfConfig::validate() const {
  if (!(q > 0.0)) throw ConfigError("kalman q must be positive");
  if (!(r > 0.0)) throw ConfigError("kalman r must be positive");
  if (!(initial_position_var > 0.0) || !(initial_velocity_var > 0.0))
    throw ConfigError("kalman initial variances must be positive");
}

KfState kf_init(const Eigen::Vector2d& first_measurement,
                const KfConfig& cfg) {
  cfg.validate();
  if (!first_measurement.allFinite())
    throw DataError("non-finite measurement seeding the filter");
  KfState state;
  state.mean.setZero();
  state.mean.head<2>() = first_measurement;
  state.covariance.setZero();
  state.covariance(0, 0) = cfg.initial_position_var;
  state.covariance(1, 1) = cfg.initial_position_var;
  state.covariance(2, 2) = cfg.initial_velocity_var;
  state.covariance(3, 3) = cfg.initial_velocity_var;
  state.step_count = 1;
  return state;
}

KfState kf_step(const KfState& prev, const Eigen::Vector2d& measurement,
                const KfConfig& cfg) {
  const Eigen::Matrix4d F = transition();
  const Eigen::Matrix<double, 2, 4> H = observation();
  const Eigen::Matrix4d Q = Eigen::Matrix4d::Identity() * cfg.q;
  const Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * cfg.r;

  const Eigen::Vector4d mean_pred = F * prev.mean;
  const Eigen::Matrix4d cov_pred = F * prev.covariance * F.transpose() + Q;

  const Eigen::Vector2d innovation = measurement - H * mean_pred;
  const Eigen::Matrix2d S = H * cov_pred * H.transpose() + R;
  const Eigen::Matrix<double, 4, 2> K =
      cov_pred * H.transpose() * S.inverse();

  KfState next;
  next.mean = mean_pred + K * innovation;
  const Eigen::Matrix4d updated =
      (Eigen::Matrix4d::Identity() - K * H) * cov_pred;
  next.covariance = 0.5 * (updated + updated.transpose());
  next.step_count = prev.step_count + 1;
  if (!next.mean.allFinite() || !next.covariance.allFinite() ||
      !(next.covariance.diagonal().minCoeff() > 0.0))
    throw NumericError("kalman update lost a valid covariance");
  return next;
}

std::vector<Eigen::Vector2d> filter_track(
    const std::vector<Eigen::Vector2d>& measurements, const KfConfig& cfg) {
  cfg.validate();
  std::vector<Eigen::Vector2d> out;
  out.reserve(measurements.size());
  if (measurements.empty()) return out;

  KfState state = kf_init(measurements.front(), cfg);
  out.push_back(kf_position(state));
  for (std::size_t k = 1; k < measurements.size(); ++k) {
    state = kf_step(state, measurements[k], cfg);
    out.push_back(kf_position(state));
  }
  return out;
}

}  // namespace vibroloc
