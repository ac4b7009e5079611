#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace vibroloc {

struct Sensor {
  std::string id;
  double x_m = 0.0;
  double y_m = 0.0;
};

// Sensor positions plus the shared sampling rate. Units are fixed project-wide:
// meters, seconds, m/s^2.
struct SensorLayout {
  std::vector<Sensor> sensors;
  double sample_rate_hz = 0.0;

  int sensor_count() const { return static_cast<int>(sensors.size()); }
  // Throws DataError if ids collide, positions are non-finite, the list is
  // empty, or sample_rate_hz <= 0.
  void validate() const;
  // Index of a sensor id, or -1.
  int index_of(const std::string& id) const;
};

// One synchronized multi-channel recording. samples is T x N_s, column j is
// sensor j of the layout, in m/s^2.
struct WaveformRecord {
  SensorLayout layout;
  Eigen::MatrixXd samples;
  double start_time_s = 0.0;

  Eigen::Index sample_count() const { return samples.rows(); }
  double duration_s() const {
    return static_cast<double>(samples.rows()) / layout.sample_rate_hz;
  }
  double time_at(Eigen::Index i) const {
    return start_time_s + static_cast<double>(i) / layout.sample_rate_hz;
  }
  void validate() const;
};

struct FootstepLabel {
  int k = 0;  // step index within its traversal
  double t_s = 0.0;
  double x_m = 0.0;
  double y_m = 0.0;
  std::string subject;
  std::string traversal;
};

// Identifies one foot strike across the pipeline.
struct StepRef {
  std::string subject;
  std::string traversal;
  int k = 0;

  bool operator==(const StepRef&) const = default;
};

struct LabeledDataset {
  WaveformRecord record;
  std::vector<FootstepLabel> labels;  // sorted ascending by t_s

  // Enforces every type invariant: sorted labels, timestamps inside the
  // record, unique (subject, traversal, k), finite coordinates.
  void validate() const;
};

enum class WaveformFormat { csv, bin };

// Loads a dataset from its manifest.json. Any invariant violation is a hard
// error; nothing is silently reordered or repaired.
LabeledDataset load_dataset(const std::filesystem::path& manifest_path);

// Writes layout.csv, labels.csv, the waveform file and manifest.json into
// dir. Returns the manifest path. Binary waveforms round-trip bit-exactly;
// CSV round-trips to full double precision (written with %.17g).
std::filesystem::path save_dataset(const LabeledDataset& ds,
                                   const std::filesystem::path& dir,
                                   WaveformFormat format = WaveformFormat::bin);

// Returns a record restricted to the given sensor ids (column subset, layout
// rewritten). Order follows the original layout. Throws DataError on unknown
// ids or empty selection.
WaveformRecord select_sensors(const WaveformRecord& record,
                              const std::vector<std::string>& ids);

}  // namespace vibroloc
