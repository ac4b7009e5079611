#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "vibroloc/errors.hpp"
#include "vibroloc/eval.hpp"

using namespace vibroloc;

namespace {

Prediction make_pred(double tx, double ty, double px, double py) {
  Prediction p;
  p.truth = Eigen::Vector2d(tx, ty);
  p.predicted = Eigen::Vector2d(px, py);
  return p;
}

}  // namespace

TEST_CASE("rmse components and the total identity") {
  std::vector<Prediction> preds{make_pred(0, 0, 3, 4),
                                make_pred(1, 1, 1, 1)};
  const RmseTriple r = rmse(preds);

  CHECK(r.x == doctest::Approx(std::sqrt(4.5)).epsilon(1e-15));
  CHECK(r.y == doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));
  CHECK(r.total == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK(std::abs(r.total * r.total - r.x * r.x - r.y * r.y) <= 1e-12);

  CHECK_THROWS_AS(rmse({}), DataError);
  CHECK_THROWS_AS(rmse(preds, PredictionKind::filtered), DataError);

  preds[0].filtered = preds[0].truth;
  preds[1].filtered = preds[1].truth;
  const RmseTriple f = rmse(preds, PredictionKind::filtered);
  CHECK(f.total == 0.0);
}

TEST_CASE("uniform bins snap to pitch multiples") {
  const BinSpec bins = make_bins(BinAxis::x, 0.4, 16.52, 1.0);
  CHECK(bins.axis == BinAxis::x);
  CHECK(bins.edges.front() == 0.0);
  CHECK(bins.edges.back() == 17.0);
  CHECK(bins.bin_count() == 17);

  // A range inside one pitch cell still produces a usable spec.
  const BinSpec tiny = make_bins(BinAxis::y, 1.46, 1.54, 10.0);
  CHECK(tiny.bin_count() >= 1);

  CHECK_THROWS_AS(make_bins(BinAxis::x, 0.0, 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(make_bins(BinAxis::x, 2.0, 1.0, 0.5), ConfigError);
}

TEST_CASE("bin lookup clamps out-of-range values") {
  BinSpec bins;
  bins.edges = {0.0, 1.0, 2.0, 3.0};
  CHECK(bins.bin_of(-5.0) == 0);
  CHECK(bins.bin_of(0.5) == 0);
  CHECK(bins.bin_of(1.0) == 1);  // right-open intervals
  CHECK(bins.bin_of(2.999) == 2);
  CHECK(bins.bin_of(3.0) == 2);
  CHECK(bins.bin_of(99.0) == 2);

  BinSpec bad;
  bad.edges = {1.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("confusion counts land at (true bin, predicted bin)") {
  BinSpec bins;
  bins.axis = BinAxis::x;
  bins.edges = {0.0, 1.0, 2.0};

  std::vector<Prediction> preds{
      make_pred(0.5, 0, 0.4, 0),   // bin 0 -> 0
      make_pred(0.5, 0, 1.6, 0),   // bin 0 -> 1
      make_pred(1.5, 0, 1.2, 0),   // bin 1 -> 1
      make_pred(1.5, 0, 1.8, 0)};  // bin 1 -> 1
  const Eigen::MatrixXi c = confusion_matrix(preds, bins);

  CHECK(c(0, 0) == 1);
  CHECK(c(0, 1) == 1);
  CHECK(c(1, 1) == 2);
  CHECK(c.sum() == 4);
  CHECK(c.row(0).sum() == 2);
  CHECK(diagonal_mass(c) == doctest::Approx(0.75));

  CHECK_THROWS_AS(confusion_matrix({}, bins), DataError);
}

TEST_CASE("fisher ratio on a hand case") {
  Eigen::MatrixXd features(4, 2);
  features << 0.0, 5.0,
              0.1, 5.0,
              1.0, 5.0,
              1.1, 5.0;
  const std::vector<int> bins{0, 0, 1, 1};
  const Eigen::VectorXd j = fisher_ratio(features, bins);

  // Between = 2*(0.5)^2 * 2 = 1; within = 2 bins * 2 * 0.0025 = 0.01.
  CHECK(j[0] == doctest::Approx(100.0).epsilon(1e-9));
  // Constant feature: 0/0 maps to zero.
  CHECK(j[1] == 0.0);
}

TEST_CASE("fisher ratio caps a zero within-variance") {
  Eigen::MatrixXd features(4, 1);
  features << 0.0, 0.0, 1.0, 1.0;
  const std::vector<int> bins{0, 0, 1, 1};
  CHECK(fisher_ratio(features, bins)[0] == 1e6);
  CHECK(fisher_ratio(features, bins, 50.0)[0] == 50.0);
}

TEST_CASE("fisher ratio input validation") {
  Eigen::MatrixXd features(4, 1);
  features << 0, 1, 2, 3;
  CHECK_THROWS_AS(fisher_ratio(features, {0, 0, 0}), DataError);
  CHECK_THROWS_AS(fisher_ratio(features, {0, 0, 0, 0}), DataError);
  CHECK_THROWS_AS(fisher_ratio(features, {0, 0, -1, 1}), DataError);
}

TEST_CASE("per-sensor step features are the window column RMS") {
  WaveformRecord rec;
  rec.layout.sample_rate_hz = 10.0;
  rec.layout.sensors = {{"a", 0, 0}, {"b", 0, 0}};
  rec.samples.resize(10, 2);
  rec.samples.setZero();
  rec.samples(4, 0) = 3.0;
  rec.samples(5, 0) = 4.0;
  rec.samples(5, 1) = 2.0;

  WindowConfig cfg;
  cfg.t_w_s = 0.2;
  cfg.samples = 2;
  cfg.dim = 4;

  EventList events{{5, 1.0}};
  const Eigen::MatrixXd f = sensor_feature(rec, events, cfg);
  REQUIRE(f.rows() == 1);
  REQUIRE(f.cols() == 2);
  CHECK(f(0, 0) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
  CHECK(f(0, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}
