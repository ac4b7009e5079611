#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "vibroloc/errors.hpp"
#include "vibroloc/pipeline.hpp"
#include "vibroloc/synth.hpp"

using namespace vibroloc;

namespace {

// Four short traversals on a small plate: enough steps to train on, cheap
// enough to synthesize repeatedly inside a unit test.
std::vector<LabeledDataset> mini_campaign(double scale = 1.0) {
  FloorConfig fc;
  fc.length_x = 8.0;
  fc.modes_x = 6;
  fc.modes_y = 3;
  const FloorModel floor = build_floor(fc);

  SensorLayout layout;
  layout.sample_rate_hz = 512.0;
  layout.sensors = {
      {"s1", 1.3, 1.5}, {"s2", 3.1, 1.5}, {"s3", 4.9, 1.5}, {"s4", 6.7, 1.5}};

  GaitProfile gait;
  std::vector<LabeledDataset> out;
  const char* names[] = {"Tr1", "Tr2", "Tr3", "Tr4"};
  for (int t = 0; t < 4; ++t) {
    TraversalPlan plan;
    plan.x_start = 0.5;
    plan.x_end = 7.5;
    plan.subject = "S1";
    plan.traversal = names[t];
    plan.direction = (t % 2 == 0) ? 1 : -1;
    LabeledDataset ds =
        simulate_traversal(floor, plan, gait, layout, 1e-4, 100 + t);
    if (scale != 1.0) ds.record.samples *= scale;
    out.push_back(std::move(ds));
  }
  return out;
}

ExperimentConfig mini_config() {
  ExperimentConfig cfg;
  cfg.train = {{"S1", "Tr1"}, {"S1", "Tr2"}};
  cfg.test = {{"S1", "Tr3"}, {"S1", "Tr4"}};
  cfg.detection.threshold_fraction = 0.1;
  return cfg;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("vibroloc_pipe_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

}  // namespace

TEST_CASE("event-label matching is greedy, closest pair first") {
  WaveformRecord rec;
  rec.layout.sample_rate_hz = 100.0;
  rec.layout.sensors = {{"a", 0, 0}};
  rec.samples = Eigen::MatrixXd::Zero(1000, 1);

  const EventList events = {{100, 1.0}, {200, 1.0}, {500, 1.0}};
  std::vector<FootstepLabel> labels(4);
  labels[0].t_s = 0.98;  // closest to event 0 (0.02 s)
  labels[1].t_s = 1.04;  // also wants event 0, but loses the greedy race
  labels[2].t_s = 4.96;
  labels[3].t_s = 7.00;  // nothing within the window
  for (int i = 0; i < 4; ++i) labels[i].k = i;

  const auto idx = match_events_to_labels(rec, events, labels, 0.1);
  REQUIRE(idx.size() == 4);
  CHECK(idx[0] == 0);
  CHECK(idx[1] == -1);  // event 0 already claimed, event 1 is 0.96 s away
  CHECK(idx[2] == 2);
  CHECK(idx[3] == -1);

  // Widening the window lets the loser fall back to the next event.
  const auto wide = match_events_to_labels(rec, events, labels, 1.0);
  CHECK(wide[0] == 0);
  CHECK(wide[1] == 1);
  CHECK(wide[2] == 2);
  CHECK(wide[3] == -1);
}

TEST_CASE("config validation rejects overlap and bad ranges") {
  ExperimentConfig cfg = mini_config();
  cfg.validate();

  ExperimentConfig overlap = mini_config();
  overlap.test.push_back({"S1", "Tr1"});
  CHECK_THROWS_AS(overlap.validate(), ConfigError);

  ExperimentConfig empty = mini_config();
  empty.train.clear();
  CHECK_THROWS_AS(empty.validate(), ConfigError);

  ExperimentConfig dup = mini_config();
  dup.train.push_back({"S1", "Tr1"});
  CHECK_THROWS_AS(dup.validate(), ConfigError);

  ExperimentConfig bad_eta = mini_config();
  bad_eta.eta_target = 0.0;
  CHECK_THROWS_AS(bad_eta.validate(), ConfigError);

  ExperimentConfig bad_eps = mini_config();
  bad_eps.epsilon = -1.0;
  CHECK_THROWS_AS(bad_eps.validate(), ConfigError);
}

TEST_CASE("pipeline runs end to end on a small campaign") {
  const auto datasets = mini_campaign();
  const ExperimentReport report = run_pipeline(datasets, mini_config());

  CHECK(report.train.steps >= 20);
  CHECK(report.test.steps >= 20);
  CHECK(report.test.raw.total < 2.5);
  CHECK(std::abs(report.test.raw.total * report.test.raw.total -
                 (report.test.raw.x * report.test.raw.x +
                  report.test.raw.y * report.test.raw.y)) < 1e-12);

  // eta curve is a cumulative fraction: non-decreasing, ends at 1.
  const auto& eta = report.eta_curve;
  REQUIRE(eta.size() >= 2);
  for (Eigen::Index i = 1; i < eta.size(); ++i) CHECK(eta[i] >= eta[i - 1]);
  CHECK(eta[eta.size() - 1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.model.settings.pca_dim >= 1);
  CHECK(report.model.settings.pca_dim <= eta.size());

  // Confusion rows account for every test step.
  CHECK(report.confusion_x.sum() == report.test.steps);
  CHECK(report.confusion_y.sum() == report.test.steps);

  for (const auto& p : report.test_predictions) {
    CHECK(p.ref.subject == "S1");
    CHECK((p.ref.traversal == "Tr3" || p.ref.traversal == "Tr4"));
    CHECK(!p.filtered.has_value());
  }
  CHECK(report.fisher.size() == 4);
}

TEST_CASE("test selector cannot influence the trained model") {
  const auto datasets = mini_campaign();
  ExperimentConfig a = mini_config();
  a.test = {{"S1", "Tr3"}};
  ExperimentConfig b = mini_config();
  b.test = {{"S1", "Tr4"}};

  const ExperimentReport ra = run_pipeline(datasets, a);
  const ExperimentReport rb = run_pipeline(datasets, b);
  CHECK(ra.model.readout.weights == rb.model.readout.weights);
  CHECK(ra.model.pca.directions == rb.model.pca.directions);
  CHECK(ra.model.readout.epsilon == rb.model.readout.epsilon);
}

TEST_CASE("globally rescaled waveforms give the same predictions") {
  const ExperimentReport base = run_pipeline(mini_campaign(1.0), mini_config());
  const ExperimentReport scaled =
      run_pipeline(mini_campaign(3.7), mini_config());

  REQUIRE(base.test_predictions.size() == scaled.test_predictions.size());
  for (std::size_t i = 0; i < base.test_predictions.size(); ++i) {
    const auto& p = base.test_predictions[i];
    const auto& q = scaled.test_predictions[i];
    CHECK(p.ref == q.ref);
    CHECK(std::abs(p.predicted.x() - q.predicted.x()) <= 1e-9);
    CHECK(std::abs(p.predicted.y() - q.predicted.y()) <= 1e-9);
  }
}

TEST_CASE("repeat runs serialize identically") {
  const auto datasets = mini_campaign();
  const ExperimentConfig cfg = mini_config();
  const ExperimentReport r1 = run_pipeline(datasets, cfg);
  const ExperimentReport r2 = run_pipeline(datasets, cfg);
  CHECK(metrics_json(r1) == metrics_json(r2));
  CHECK(predictions_csv(r1) == predictions_csv(r2));
}

TEST_CASE("config json round trips every field") {
  ExperimentConfig cfg = mini_config();
  cfg.manifests = {"/data/a/manifest.json", "/data/b/manifest.json"};
  cfg.sensor_ids = {"s2", "s3"};
  cfg.detect_all_sensors = true;
  cfg.detection.smooth_window_samples = 15;
  cfg.detection.mode = DetectionMode::streaming;
  cfg.t_w_s = 0.2;
  cfg.match_window_s = 0.05;
  cfg.rms_normalize = false;
  cfg.centering = true;
  cfg.pca_dim = 7;
  cfg.eta_target = 0.9;
  cfg.epsilon = 1e-4;
  cfg.penalize_bias = false;
  cfg.kalman = true;
  cfg.kf.q = 0.2;
  cfg.bin_pitch_y = 0.3;
  cfg.seed = 7;

  const ExperimentConfig back = config_from_json(config_json(cfg));
  CHECK(back.manifests == cfg.manifests);
  CHECK(back.train == cfg.train);
  CHECK(back.test == cfg.test);
  CHECK(back.sensor_ids == cfg.sensor_ids);
  CHECK(back.detect_all_sensors == true);
  CHECK(back.detection.smooth_window_samples == 15);
  CHECK(back.detection.mode == DetectionMode::streaming);
  CHECK(back.detection.threshold_fraction == cfg.detection.threshold_fraction);
  CHECK(back.t_w_s == 0.2);
  CHECK(back.match_window_s == 0.05);
  CHECK(back.rms_normalize == false);
  CHECK(back.centering == true);
  REQUIRE(back.pca_dim.has_value());
  CHECK(*back.pca_dim == 7);
  REQUIRE(back.epsilon.has_value());
  CHECK(*back.epsilon == 1e-4);
  CHECK(back.penalize_bias == false);
  CHECK(back.kalman == true);
  CHECK(back.kf.q == 0.2);
  CHECK(back.bin_pitch_y == 0.3);
  CHECK(back.seed == 7);

  // When no fixed dimension is set, the eta target is what round-trips.
  ExperimentConfig eta_cfg = mini_config();
  eta_cfg.eta_target = 0.9;
  const ExperimentConfig eta_back = config_from_json(config_json(eta_cfg));
  CHECK(!eta_back.pca_dim.has_value());
  CHECK(eta_back.eta_target == 0.9);

  CHECK_THROWS_AS(config_from_json("{not json"), ConfigError);
}

TEST_CASE("sensor subsets restrict the readout features") {
  const auto datasets = mini_campaign();
  ExperimentConfig cfg = mini_config();
  cfg.sensor_ids = {"s2", "s3"};
  cfg.detect_all_sensors = true;

  const ExperimentReport report = run_pipeline(datasets, cfg);
  CHECK(report.model.settings.sensor_ids == cfg.sensor_ids);
  CHECK(report.test.steps >= 20);
  CHECK(report.fisher.size() == 2);

  cfg.sensor_ids = {"nope"};
  CHECK_THROWS_AS(run_pipeline(datasets, cfg), DataError);
}

TEST_CASE("kalman smoothing adds filtered metrics per traversal") {
  const auto datasets = mini_campaign();
  ExperimentConfig cfg = mini_config();
  cfg.kalman = true;

  const ExperimentReport report = run_pipeline(datasets, cfg);
  REQUIRE(report.test.filtered.has_value());
  CHECK(report.test.filtered->total > 0.0);
  CHECK(std::isfinite(report.test.filtered->total));
  for (const auto& p : report.test_predictions)
    CHECK(p.filtered.has_value());
}

TEST_CASE("write_report emits the full artifact set deterministically") {
  const auto datasets = mini_campaign();
  const ExperimentReport report = run_pipeline(datasets, mini_config());

  TempDir d1, d2;
  write_report(report, d1.path);
  write_report(report, d2.path);

  for (const char* name :
       {"config.json", "metrics.json", "predictions.csv", "eta_curve.csv",
        "confusion_x.csv", "confusion_y.csv", "fisher.csv", "scatter.svg"}) {
    CAPTURE(name);
    CHECK(std::filesystem::file_size(d1.path / name) > 0);
    CHECK(slurp(d1.path / name) == slurp(d2.path / name));
  }
}
