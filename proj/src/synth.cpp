#include "vibroloc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vibroloc/errors.hpp"
#include "vibroloc/rng.hpp"

namespace vibroloc {

namespace {
constexpr double kPi = 3.14159265358979323846;
// Per-strike modal tails are evaluated until the envelope has decayed to
// 1e-9 of its initial value; the threshold is relative, so scaling the
// impulse rescales the waveform exactly.
constexpr double kEnvelopeCut = 20.723265836946411;  // ln(1e9)

void add_noise(Eigen::MatrixXd& samples, double std_dev, std::uint64_t seed) {
  if (std_dev == 0.0) return;
  GaussianStream noise(seed);
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    for (Eigen::Index j = 0; j < samples.cols(); ++j)
      samples(i, j) += std_dev * noise.next();
}

struct Strike {
  double t0 = 0.0;
  double x = 0.0;
  double y = 0.0;
  double impulse = 0.0;
};

std::vector<Strike> plan_strikes(const TraversalPlan& plan,
                                 const GaitProfile& gait,
                                 std::uint64_t seed) {
  const double span = plan.x_end - plan.x_start;
  const int n_steps =
      static_cast<int>(std::floor(span / gait.step_length + 1e-9)) + 1;

  GaussianStream placement(derive_seed(seed, "placement"));
  GaussianStream impulse(derive_seed(seed, "impulse"));
  GaussianStream timing(derive_seed(seed, "timing"));

  std::vector<Strike> strikes;
  strikes.reserve(static_cast<std::size_t>(n_steps));
  for (int k = 0; k < n_steps; ++k) {
    const double base_x = plan.direction >= 0
                              ? plan.x_start + k * gait.step_length
                              : plan.x_end - k * gait.step_length;
    const double foot = (k % 2 == 0) ? 0.5 : -0.5;
    Strike s;
    s.t0 = plan.walk_start_s + k * gait.cadence_s +
           gait.timing_jitter_s * timing.next();
    s.x = base_x + gait.placement_jitter * placement.next();
    s.y = plan.line_y + foot * gait.stance_width +
          gait.placement_jitter * placement.next();
    s.impulse = gait.impulse_mean * (1.0 + gait.impulse_jitter * impulse.next());
    strikes.push_back(s);
  }
  return strikes;
}

void check_plan(const FloorModel& floor, const TraversalPlan& plan) {
  if (plan.direction != 1 && plan.direction != -1)
    throw ConfigError("traversal direction must be +1 or -1");
  if (!(plan.x_end > plan.x_start))
    throw ConfigError("traversal must cover a positive x span");
  if (!(plan.x_start > 0.0) || !(plan.x_end < floor.length_x))
    throw ConfigError("traversal x range must lie inside the floor");
  if (!(plan.line_y > 0.0) || !(plan.line_y < floor.length_y))
    throw ConfigError("walking line must lie inside the floor");
  if (plan.walk_start_s < 0.0 || plan.tail_s < 0.0)
    throw ConfigError("walk start and tail must be non-negative");
}
}  // namespace

double FloorModel::mode_shape(const Mode& mode, double x, double y) const {
  return std::sin(mode.m * kPi * x / length_x) *
         std::sin(mode.n * kPi * y / length_y);
}

FloorModel build_floor(const FloorConfig& config) {
  if (!(config.length_x > 0.0) || !(config.length_y > 0.0))
    throw ConfigError("floor dimensions must be positive");
  if (config.modes_x < 1 || config.modes_y < 1)
    throw ConfigError("mode counts must be >= 1");
  if (!(config.zeta > 0.0 && config.zeta < 1.0))
    throw ConfigError("damping ratio must lie in (0,1)");
  if (!(config.stiffness_coeff > 0.0))
    throw ConfigError("stiffness coefficient must be positive");

  FloorModel floor;
  floor.length_x = config.length_x;
  floor.length_y = config.length_y;
  floor.stiffness_coeff = config.stiffness_coeff;
  floor.modes.reserve(
      static_cast<std::size_t>(config.modes_x * config.modes_y));
  for (int m = 1; m <= config.modes_x; ++m) {
    for (int n = 1; n <= config.modes_y; ++n) {
      Mode mode;
      mode.m = m;
      mode.n = n;
      const double kx = m * kPi / config.length_x;
      const double ky = n * kPi / config.length_y;
      mode.omega = config.stiffness_coeff * (kx * kx + ky * ky);
      mode.zeta = config.zeta;
      floor.modes.push_back(mode);
    }
  }
  std::sort(floor.modes.begin(), floor.modes.end(),
            [](const Mode& a, const Mode& b) {
              if (a.omega != b.omega) return a.omega < b.omega;
              if (a.m != b.m) return a.m < b.m;
              return a.n < b.n;
            });
  return floor;
}

void GaitProfile::validate() const {
  if (!(impulse_mean > 0.0)) throw ConfigError("impulse mean must be positive");
  if (impulse_jitter < 0.0) throw ConfigError("impulse jitter must be >= 0");
  if (!(step_length > 0.0)) throw ConfigError("step length must be positive");
  if (stance_width < 0.0) throw ConfigError("stance width must be >= 0");
  if (!(cadence_s > 0.0)) throw ConfigError("cadence must be positive");
  if (placement_jitter < 0.0)
    throw ConfigError("placement jitter must be >= 0");
  if (timing_jitter_s < 0.0) throw ConfigError("timing jitter must be >= 0");
  if (timing_jitter_s >= 0.25 * cadence_s)
    throw ConfigError("timing jitter must be small relative to the cadence");
}

LabeledDataset simulate_traversal(const FloorModel& floor,
                                  const TraversalPlan& plan,
                                  const GaitProfile& gait,
                                  const SensorLayout& layout,
                                  double noise_std, std::uint64_t seed) {
  layout.validate();
  gait.validate();
  check_plan(floor, plan);
  if (floor.modes.empty()) throw ConfigError("floor has no modes");
  if (noise_std < 0.0) throw ConfigError("noise std must be >= 0");

  const double fs = layout.sample_rate_hz;
  const auto strikes = plan_strikes(plan, gait, seed);
  double t_last = plan.walk_start_s;
  for (const Strike& strike : strikes) t_last = std::max(t_last, strike.t0);
  const double duration = t_last + plan.tail_s;
  const auto n_samples = static_cast<Eigen::Index>(std::llround(duration * fs));
  const auto n_sensors = static_cast<Eigen::Index>(layout.sensor_count());

  // phi at the sensors, per mode: constant across strikes.
  const auto n_modes = static_cast<Eigen::Index>(floor.modes.size());
  Eigen::MatrixXd phi_sensor(n_modes, n_sensors);
  for (Eigen::Index mi = 0; mi < n_modes; ++mi)
    for (Eigen::Index j = 0; j < n_sensors; ++j)
      phi_sensor(mi, j) = floor.mode_shape(
          floor.modes[static_cast<std::size_t>(mi)],
          layout.sensors[static_cast<std::size_t>(j)].x_m,
          layout.sensors[static_cast<std::size_t>(j)].y_m);

  Eigen::MatrixXd samples = Eigen::MatrixXd::Zero(n_samples, n_sensors);
  Eigen::VectorXd scratch(n_samples);

  for (const Strike& strike : strikes) {
    const auto i0 = std::max<Eigen::Index>(
        0, static_cast<Eigen::Index>(std::ceil(strike.t0 * fs - 1e-9)));
    if (i0 >= n_samples) continue;
    const double dt0 = static_cast<double>(i0) / fs - strike.t0;

    for (Eigen::Index mi = 0; mi < n_modes; ++mi) {
      const Mode& mode = floor.modes[static_cast<std::size_t>(mi)];
      const double amp = 1.0 / mode.omega;
      const double src =
          floor.mode_shape(mode, strike.x, strike.y) * strike.impulse * amp;
      if (src == 0.0) continue;

      const double decay_rate = mode.zeta * mode.omega;
      const double omega_d =
          mode.omega * std::sqrt(1.0 - mode.zeta * mode.zeta);
      const auto n_tail = static_cast<Eigen::Index>(
          std::ceil(kEnvelopeCut / decay_rate * fs));
      const Eigen::Index n = std::min(n_samples - i0, n_tail);
      if (n <= 0) continue;

      // Damped sinusoid by phasor recurrence: one decay/rotation per sample
      // instead of exp+sin, identical ordering every run.
      const double a = std::exp(-decay_rate / fs);
      const double cs = std::cos(omega_d / fs);
      const double sn = std::sin(omega_d / fs);
      double env = std::exp(-decay_rate * dt0);
      double s = env * std::sin(omega_d * dt0);
      double c = env * std::cos(omega_d * dt0);
      for (Eigen::Index i = 0; i < n; ++i) {
        scratch[i] = s;
        const double s_next = a * (s * cs + c * sn);
        const double c_next = a * (c * cs - s * sn);
        s = s_next;
        c = c_next;
      }
      for (Eigen::Index j = 0; j < n_sensors; ++j)
        samples.col(j).segment(i0, n) += src * phi_sensor(mi, j) * scratch.head(n);
    }
  }

  add_noise(samples, noise_std, derive_seed(seed, "noise"));

  LabeledDataset ds;
  ds.record.layout = layout;
  ds.record.samples = std::move(samples);
  ds.record.start_time_s = 0.0;
  ds.labels.reserve(strikes.size());
  for (std::size_t k = 0; k < strikes.size(); ++k) {
    FootstepLabel label;
    label.k = static_cast<int>(k);
    label.t_s = strikes[k].t0;
    label.x_m = strikes[k].x;
    label.y_m = strikes[k].y;
    label.subject = plan.subject;
    label.traversal = plan.traversal;
    ds.labels.push_back(label);
  }
  ds.validate();
  return ds;
}

SensorLayout default_corridor_layout(std::uint64_t seed,
                                     const FloorConfig& config) {
  constexpr int kSensors = 11;
  const double margin = 0.8;
  const double pitch = (config.length_x - 2.0 * margin) / (kSensors - 1);

  GaussianStream jitter(derive_seed(seed, "layout"));
  SensorLayout layout;
  layout.sample_rate_hz = 1024.0;
  layout.sensors.reserve(kSensors);
  for (int j = 0; j < kSensors; ++j) {
    char id[8];
    std::snprintf(id, sizeof(id), "s%02d", j + 1);
    Sensor sensor;
    sensor.id = id;
    sensor.x_m = margin + j * pitch + 0.3 * (jitter.uniform01() - 0.5);
    sensor.y_m = config.length_y / 2.0;
    layout.sensors.push_back(sensor);
  }
  layout.validate();
  return layout;
}

GaitProfile default_gait(const std::string& subject) {
  GaitProfile gait;
  if (subject == "S1") {
    gait.impulse_mean = 1.0;
    gait.cadence_s = 0.50;
  } else if (subject == "S2") {
    gait.impulse_mean = 1.6;
    gait.cadence_s = 0.505;
  } else {
    throw ConfigError("unknown subject: " + subject);
  }
  return gait;
}

TraversalPlan default_plan(const std::string& subject, int traversal_index,
                           const FloorConfig& config) {
  if (traversal_index < 1) throw ConfigError("traversal index starts at 1");
  if (subject != "S1" && subject != "S2")
    throw ConfigError("unknown subject: " + subject);
  const double center = config.length_y / 2.0;
  const double offsets[3] = {center - 0.15, center, center + 0.15};
  TraversalPlan plan;
  plan.subject = subject;
  plan.traversal = "Tr" + std::to_string(traversal_index);
  plan.line_y = offsets[(traversal_index - 1) % 3];
  plan.direction = (traversal_index % 2 == 1) ? 1 : -1;
  return plan;
}

Campaign default_campaign(std::uint64_t seed) {
  Campaign campaign;
  const FloorConfig floor_config;
  campaign.floor = build_floor(floor_config);
  campaign.layout = default_corridor_layout(derive_seed(seed, "sensors"),
                                            floor_config);

  // Clean pass first: the noise floor is pinned to the signal scale (1% of
  // the campaign-median per-traversal peak), so it has to be measured before
  // noise is added.
  std::vector<std::uint64_t> seeds;
  std::vector<double> peaks;
  for (const char* subject : {"S1", "S2"}) {
    const GaitProfile gait = default_gait(subject);
    for (int t = 1; t <= 6; ++t) {
      const TraversalPlan plan = default_plan(subject, t, floor_config);
      const std::uint64_t ds_seed =
          derive_seed(seed, std::string(subject) + "/" + plan.traversal);
      LabeledDataset ds = simulate_traversal(campaign.floor, plan, gait,
                                             campaign.layout, 0.0, ds_seed);
      peaks.push_back(ds.record.samples.cwiseAbs().maxCoeff());
      seeds.push_back(ds_seed);
      campaign.datasets.push_back(std::move(ds));
    }
  }

  std::vector<double> sorted = peaks;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t h = sorted.size() / 2;
  const double median = sorted.size() % 2 == 1
                            ? sorted[h]
                            : 0.5 * (sorted[h - 1] + sorted[h]);
  campaign.noise_std = 0.01 * median;

  for (std::size_t i = 0; i < campaign.datasets.size(); ++i)
    add_noise(campaign.datasets[i].record.samples, campaign.noise_std,
              derive_seed(seeds[i], "noise"));
  return campaign;
}

}  // namespace vibroloc
