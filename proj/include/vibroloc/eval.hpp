#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "vibroloc/dataset.hpp"
#include "vibroloc/detect.hpp"
#include "vibroloc/features.hpp"

namespace vibroloc {

struct Prediction {
  StepRef ref;
  Eigen::Vector2d truth = Eigen::Vector2d::Zero();
  Eigen::Vector2d predicted = Eigen::Vector2d::Zero();
  std::optional<Eigen::Vector2d> filtered;
};

enum class PredictionKind { raw, filtered };

struct RmseTriple {
  double total = 0.0;
  double x = 0.0;
  double y = 0.0;
};

// RMSE over all predictions; total^2 == x^2 + y^2 holds by construction of
// the definitions (checked to 1e-12 in the tests). Throws DataError on an
// empty list or when filtered values are requested but absent.
RmseTriple rmse(const std::vector<Prediction>& preds,
                PredictionKind kind = PredictionKind::raw);

enum class BinAxis { x, y };

struct BinSpec {
  BinAxis axis = BinAxis::x;
  std::vector<double> edges;  // strictly increasing, >= 2 entries

  int bin_count() const { return static_cast<int>(edges.size()) - 1; }
  // Bin of a coordinate; values outside the range clamp to the boundary bins.
  int bin_of(double value) const;
  void validate() const;  // throws ConfigError
};

// Uniform edges at the given pitch covering [lo, hi] (edges snapped to
// multiples of pitch so the grid is stable across runs).
BinSpec make_bins(BinAxis axis, double lo, double hi, double pitch);

// counts(true bin, predicted bin). Row sums equal the per-true-bin step
// counts. Throws DataError on empty predictions.
Eigen::MatrixXi confusion_matrix(const std::vector<Prediction>& preds,
                                 const BinSpec& bins);

// Fraction of steps on the diagonal.
double diagonal_mass(const Eigen::MatrixXi& confusion);

// Fisher ratio per sensor: J_j = sum_c N_c (mu_c - mu)^2 / sum_c N_c s_c^2
// with population variances within bins. A zero denominator with a positive
// numerator maps to `cap`; 0/0 maps to 0. features is steps x sensors,
// bin_of_step the per-step bin index. Throws DataError unless >= 2 distinct
// bins are present.
Eigen::VectorXd fisher_ratio(const Eigen::MatrixXd& features,
                             const std::vector<int>& bin_of_step,
                             double cap = 1e6);

// Per-step, per-sensor scalar feature: the RMS of each sensor's column of
// the step's waveform window. steps x sensors.
Eigen::MatrixXd sensor_feature(const WaveformRecord& record,
                               const EventList& events,
                               const WindowConfig& cfg);

}  // namespace vibroloc
