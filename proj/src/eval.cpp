#include "vibroloc/eval.hpp"

#include <algorithm>
#include <cmath>

#include "vibroloc/errors.hpp"

namespace vibroloc {

namespace {
Eigen::Vector2d estimate_of(const Prediction& p, PredictionKind kind) {
  if (kind == PredictionKind::raw) return p.predicted;
  if (!p.filtered)
    throw DataError("filtered estimate requested but not present");
  return *p.filtered;
}
}  // namespace

RmseTriple rmse(const std::vector<Prediction>& preds, PredictionKind kind) {
  if (preds.empty()) throw DataError("rmse over empty prediction list");
  double sx = 0.0, sy = 0.0;
  for (const Prediction& p : preds) {
    const Eigen::Vector2d e = estimate_of(p, kind) - p.truth;
    sx += e.x() * e.x();
    sy += e.y() * e.y();
  }
  const double n = static_cast<double>(preds.size());
  RmseTriple out;
  out.x = std::sqrt(sx / n);
  out.y = std::sqrt(sy / n);
  out.total = std::sqrt((sx + sy) / n);
  return out;
}

void BinSpec::validate() const {
  if (edges.size() < 2) throw ConfigError("bin spec needs >= 2 edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]))
      throw ConfigError("bin edges must increase strictly");
}

int BinSpec::bin_of(double value) const {
  // upper_bound on interior edges; outside values clamp to the end bins.
  const int n = bin_count();
  if (value < edges.front()) return 0;
  if (value >= edges.back()) return n - 1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), value);
  int idx = static_cast<int>(it - edges.begin()) - 1;
  return std::clamp(idx, 0, n - 1);
}

BinSpec make_bins(BinAxis axis, double lo, double hi, double pitch) {
  if (!(pitch > 0.0)) throw ConfigError("bin pitch must be positive");
  if (!(hi > lo)) throw ConfigError("bin range must be non-empty");
  const long first = static_cast<long>(std::floor(lo / pitch + 1e-9));
  const long last = static_cast<long>(std::ceil(hi / pitch - 1e-9));
  BinSpec spec;
  spec.axis = axis;
  for (long i = first; i <= last; ++i)
    spec.edges.push_back(static_cast<double>(i) * pitch);
  if (spec.edges.size() < 2)
    spec.edges.push_back(spec.edges.front() + pitch);
  spec.validate();
  return spec;
}

Eigen::MatrixXi confusion_matrix(const std::vector<Prediction>& preds,
                                 const BinSpec& bins) {
  bins.validate();
  if (preds.empty()) throw DataError("confusion matrix over empty predictions");
  const int n = bins.bin_count();
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(n, n);
  for (const Prediction& p : preds) {
    const int coord = bins.axis == BinAxis::x ? 0 : 1;
    const int row = bins.bin_of(p.truth[coord]);
    const int col = bins.bin_of(p.predicted[coord]);
    counts(row, col) += 1;
  }
  return counts;
}

double diagonal_mass(const Eigen::MatrixXi& confusion) {
  const long total = confusion.sum();
  if (total <= 0) throw DataError("empty confusion matrix");
  long diag = 0;
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) diag += confusion(i, i);
  return static_cast<double>(diag) / static_cast<double>(total);
}

Eigen::VectorXd fisher_ratio(const Eigen::MatrixXd& features,
                             const std::vector<int>& bin_of_step,
                             double cap) {
  const Eigen::Index n = features.rows();
  if (static_cast<Eigen::Index>(bin_of_step.size()) != n)
    throw DataError("fisher: bin list length mismatch");
  if (n < 2) throw DataError("fisher: need >= 2 steps");

  int max_bin = -1;
  for (int b : bin_of_step) {
    if (b < 0) throw DataError("fisher: negative bin index");
    max_bin = std::max(max_bin, b);
  }
  std::vector<long> counts(static_cast<std::size_t>(max_bin) + 1, 0);
  for (int b : bin_of_step) ++counts[static_cast<std::size_t>(b)];
  int occupied = 0;
  for (long c : counts)
    if (c > 0) ++occupied;
  if (occupied < 2) throw DataError("fisher: need >= 2 occupied bins");

  const Eigen::Index s = features.cols();
  Eigen::VectorXd out(s);
  for (Eigen::Index j = 0; j < s; ++j) {
    const Eigen::VectorXd col = features.col(j);
    const double mu = col.mean();
    // Per-bin means and population variances.
    std::vector<double> sum(counts.size(), 0.0);
    std::vector<double> sumsq(counts.size(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto b = static_cast<std::size_t>(bin_of_step[i]);
      sum[b] += col[i];
      sumsq[b] += col[i] * col[i];
    }
    double between = 0.0, within = 0.0;
    for (std::size_t b = 0; b < counts.size(); ++b) {
      if (counts[b] == 0) continue;
      const double nc = static_cast<double>(counts[b]);
      const double mc = sum[b] / nc;
      between += nc * (mc - mu) * (mc - mu);
      within += std::max(0.0, sumsq[b] - nc * mc * mc);
    }
    if (within > 0.0)
      out[j] = std::min(between / within, cap);
    else
      out[j] = between > 0.0 ? cap : 0.0;
  }
  return out;
}

Eigen::MatrixXd sensor_feature(const WaveformRecord& record,
                               const EventList& events,
                               const WindowConfig& cfg) {
  const auto n_sensors = record.samples.cols();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(events.size()), n_sensors);
  for (std::size_t k = 0; k < events.size(); ++k) {
    const Eigen::MatrixXd window =
        extract_window(record, events[k].sample, cfg, StepRef{});
    for (Eigen::Index j = 0; j < n_sensors; ++j)
      out(static_cast<Eigen::Index>(k), j) = rms(window.col(j));
  }
  return out;
}

}  // namespace vibroloc
