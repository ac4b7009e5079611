#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "vibroloc/dataset.hpp"

namespace vibroloc {

// Window geometry derived from the window length in seconds and the layout.
struct WindowConfig {
  double t_w_s = 0.12;
  int samples = 0;      // l = floor(t_w * f_s)
  int dim = 0;          // d = l * N_s

  static WindowConfig from(double t_w_s, double sample_rate_hz,
                           int sensor_count);  // throws ConfigError if l < 1
};

// One vectorized per-step waveform window.
struct ReservoirState {
  Eigen::VectorXd values;  // length d
  bool normalized = false;
  StepRef ref;
};

// The l x N_s window ending at sample s_k (rows s_k-l+1 ... s_k, all
// sensors, original column order). Throws DataError when there is not enough
// history or s_k is outside the record, naming the step.
Eigen::MatrixXd extract_window(const WaveformRecord& record,
                               Eigen::Index s_k, const WindowConfig& cfg,
                               const StepRef& ref = {});

// Column-major stacking: element (t, j) lands at position j*l + t.
ReservoirState vectorize(const Eigen::MatrixXd& window, const StepRef& ref = {});

// Divides by sqrt(mean(values^2)) so the result has unit RMS. Throws
// DataError on an all-zero state ("degenerate window").
ReservoirState rms_normalize(const ReservoirState& raw);

inline double rms(const Eigen::VectorXd& v) {
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

// A batch of per-step states with their provenance, as serialized by the
// featurize step.
struct StateSet {
  Eigen::MatrixXd states;     // N x d
  std::vector<StepRef> refs;  // N
  std::vector<double> times;  // event time per row, s
  Eigen::MatrixXd positions;  // N x 2 labeled positions
  bool normalized = false;
};

// Binary round trip; bit-exact. A bad magic, version, or truncated payload is
// a DataError.
void save_states(const StateSet& set, const std::filesystem::path& path);
StateSet load_states(const std::filesystem::path& path);

}  // namespace vibroloc
