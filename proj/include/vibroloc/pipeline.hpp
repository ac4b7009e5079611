#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vibroloc/dataset.hpp"
#include "vibroloc/detect.hpp"
#include "vibroloc/eval.hpp"
#include "vibroloc/model_io.hpp"
#include "vibroloc/synth.hpp"
#include "vibroloc/tracking.hpp"

namespace vibroloc {

// One traversal, identified the way labels are.
struct TraversalKey {
  std::string subject;
  std::string traversal;

  bool operator==(const TraversalKey&) const = default;
  auto operator<=>(const TraversalKey&) const = default;
};

struct ExperimentConfig {
  std::vector<std::filesystem::path> manifests;  // empty when data is passed in memory
  std::vector<TraversalKey> train;
  std::vector<TraversalKey> test;
  std::vector<std::string> sensor_ids;  // empty = all sensors
  // Keep detection on the full array when sensor_ids restricts the readout,
  // so event timing does not degrade with the feature subset.
  bool detect_all_sensors = false;

  DetectionConfig detection;
  double t_w_s = 0.12;
  double match_window_s = 0.1;  // event-to-label association radius

  bool rms_normalize = true;
  bool centering = false;
  std::optional<int> pca_dim;      // fixed D; otherwise chosen from eta_target
  double eta_target = 0.99;
  std::optional<double> epsilon;   // absolute ridge; otherwise scale-relative default
  bool penalize_bias = true;

  bool kalman = false;
  KfConfig kf;

  double bin_pitch_x = 1.0;
  double bin_pitch_y = 0.15;

  std::uint64_t seed = 42;

  void validate() const;  // throws ConfigError (disjoint selectors, ranges)
};

struct SensorFisher {
  std::string sensor_id;
  double j_x = 0.0;
  double j_y = 0.0;
};

struct SplitMetrics {
  RmseTriple raw;
  std::optional<RmseTriple> filtered;
  int steps = 0;
};

struct ExperimentReport {
  SplitMetrics train;
  SplitMetrics test;
  std::vector<Prediction> train_predictions;
  std::vector<Prediction> test_predictions;
  Eigen::VectorXd eta_curve;            // eta(1..r_full)
  BinSpec bins_x, bins_y;
  Eigen::MatrixXi confusion_x, confusion_y;  // test split
  std::vector<SensorFisher> fisher;          // train+test pooled
  int dropped_unmatched = 0;   // detections with no label within the window
  int dropped_no_history = 0;  // matched detections without window history
  int unmatched_labels = 0;
  ModelBundle model;
  ExperimentConfig config;
};

// Greedy nearest-in-time association between detected events and labels,
// closest pair first, each side claimed at most once. Returns, per label, the
// index of its event or -1.
std::vector<std::ptrdiff_t> match_events_to_labels(
    const WaveformRecord& record, const EventList& events,
    const std::vector<FootstepLabel>& labels, double window_s);

// detect -> featurize (-> RMS) -> PCA on train -> ridge on train -> predict
// train+test -> optional per-traversal Kalman -> metrics. The PCA model and
// readout never see test data.
ExperimentReport run_pipeline(const std::vector<LabeledDataset>& datasets,
                              const ExperimentConfig& cfg);
// Same, loading cfg.manifests first.
ExperimentReport run_pipeline(const ExperimentConfig& cfg);

struct SweepRow {
  int size = 0;          // training traversals or sensor count
  int repeats = 0;
  RmseTriple mean;       // mean test RMSE over repeats
  RmseTriple stddev;     // std over repeats
};

// Draws `repeats` random subsets of the given size from cfg.train (test
// selectors stay fixed), runs the pipeline, aggregates test RMSE. Repeats
// run in parallel; subset draws happen up front so results are seed-stable.
std::vector<SweepRow> sweep_training_size(
    const std::vector<LabeledDataset>& datasets, const ExperimentConfig& cfg,
    const std::vector<int>& sizes, int repeats, std::uint64_t seed);

// Random sensor subsets per count, same aggregation.
std::vector<SweepRow> sweep_sensor_count(
    const std::vector<LabeledDataset>& datasets, const ExperimentConfig& cfg,
    const std::vector<int>& counts, int repeats, std::uint64_t seed);

// Writes config.json, metrics.json, predictions.csv, eta_curve.csv,
// confusion_x.csv, confusion_y.csv, fisher.csv and scatter.svg into dir.
void write_report(const ExperimentReport& report,
                  const std::filesystem::path& dir);

// metrics.json / predictions.csv / config snapshots, exposed for the CLI.
std::string metrics_json(const ExperimentReport& report);
std::string predictions_csv(const ExperimentReport& report);
std::string config_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

// Predicted-vs-true longitudinal scatter.
std::string scatter_svg(const std::vector<Prediction>& preds);

}  // namespace vibroloc
