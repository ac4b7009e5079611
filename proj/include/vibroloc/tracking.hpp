#pragma once

#include <Eigen/Dense>
#include <vector>

namespace vibroloc {

// Constant-velocity filter over step index (the step increment is fixed at
// 1; walking-speed variation is absorbed by the process noise).
struct KfConfig {
  double q = 0.05;                  // process noise, Q = q I4
  double r = 0.25;                  // measurement noise, R = r I2
  double initial_position_var = 1.0;
  double initial_velocity_var = 1.0;

  void validate() const;  // throws ConfigError
};

struct KfState {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();  // (x, y, vx, vy)
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
  int step_count = 0;
};

// State pinned at the first measurement with zero velocity and the configured
// diagonal covariance. Throws DataError on non-finite input.
KfState kf_init(const Eigen::Vector2d& first_measurement, const KfConfig& cfg);

// One predict + update cycle. The covariance is re-symmetrized after the
// update; losing positive-definiteness throws NumericError. Returns the new
// state; the filtered position is the first two mean components.
KfState kf_step(const KfState& state, const Eigen::Vector2d& measurement,
                const KfConfig& cfg);

inline Eigen::Vector2d kf_position(const KfState& s) {
  return s.mean.head<2>();
}

// Filters a whole per-traversal measurement sequence. The first measurement
// seeds the filter and is returned unchanged; filtering starts at step 2.
std::vector<Eigen::Vector2d> filter_track(
    const std::vector<Eigen::Vector2d>& measurements, const KfConfig& cfg);

}  // namespace vibroloc
