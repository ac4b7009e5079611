#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vibroloc/dataset.hpp"

namespace vibroloc {

struct Mode {
  int m = 1;
  int n = 1;
  double omega = 0.0;  // rad/s
  double zeta = 0.0;   // damping ratio, in (0,1)
};

// Simply-supported rectangular plate reduced to a modal basis. Mode shapes
// are phi_mn(x, y) = sin(m pi x / Lx) sin(n pi y / Ly) and frequencies follow
// the thin-plate dispersion omega = c ((m pi / Lx)^2 + (n pi / Ly)^2).
struct FloorModel {
  double length_x = 0.0;
  double length_y = 0.0;
  std::vector<Mode> modes;  // sorted ascending by omega
  double stiffness_coeff = 0.0;  // c in the dispersion relation

  double mode_shape(const Mode& mode, double x, double y) const;
};

struct FloorConfig {
  double length_x = 16.8;
  double length_y = 3.0;
  int modes_x = 12;
  int modes_y = 4;
  double zeta = 0.03;
  // c tuned so the (1,1) mode of the default plate sits near 15 Hz.
  double stiffness_coeff = 83.3;
};

FloorModel build_floor(const FloorConfig& config);  // throws ConfigError

struct GaitProfile {
  double impulse_mean = 1.0;      // N*s
  double impulse_jitter = 0.05;   // relative std
  double step_length = 0.62;      // m
  double stance_width = 0.15;     // m
  double cadence_s = 0.5;         // mean step period
  double placement_jitter = 0.02; // m, lateral and longitudinal std
  // Natural per-step timing scatter around the cadence grid (s). Strikes
  // land at walk_start + k*cadence + eps_k rather than drifting, matching
  // how a walker holds an overall pace while individual steps vary.
  double timing_jitter_s = 0.015;

  void validate() const;  // throws ConfigError
};

struct TraversalPlan {
  double line_y = 1.5;      // walking-line offset across the corridor
  double x_start = 0.4;
  double x_end = 16.52;
  int direction = 1;        // +1 / -1 along x
  std::string subject = "S1";
  std::string traversal = "Tr1";
  double walk_start_s = 1.0;
  double tail_s = 1.5;      // quiet time appended after the last strike
};

// Modal-superposition synthesis of one traversal. Each strike at
// (x0, y0, t0) with impulse I adds, per mode and sensor,
//   phi(x0,y0) phi(xs,ys) I A exp(-zeta w (t-t0)) sin(w_d (t-t0)),
// with A = 1/w and w_d = w sqrt(1-zeta^2); i.i.d. Gaussian sensor noise on
// top. Labels carry the exact strike positions and times. Identical seeds
// give identical bytes.
LabeledDataset simulate_traversal(const FloorModel& floor,
                                  const TraversalPlan& plan,
                                  const GaitProfile& gait,
                                  const SensorLayout& layout,
                                  double noise_std, std::uint64_t seed);

// Default 11-sensor corridor-line layout: jittered spacing along x, fixed
// y at the corridor centerline.
SensorLayout default_corridor_layout(std::uint64_t seed,
                                     const FloorConfig& config = {});

struct Campaign {
  std::vector<LabeledDataset> datasets;
  SensorLayout layout;
  FloorModel floor;
  double noise_std = 0.0;
};

// Two subjects x six traversals x 27 strikes on the default floor. S1 walks
// with unit impulse at 0.50 s mean cadence, S2 heavier (1.6x impulse) and
// slightly slower (0.505 s); both carry natural per-step timing scatter.
// Walking lines cycle across three lateral offsets and direction alternates
// per traversal. Noise std is 1% of the campaign-median peak amplitude.
Campaign default_campaign(std::uint64_t seed);

// The plans/gaits behind default_campaign, exposed for tests and the CLI.
GaitProfile default_gait(const std::string& subject);
TraversalPlan default_plan(const std::string& subject, int traversal_index,
                           const FloorConfig& config = {});

}  // namespace vibroloc
