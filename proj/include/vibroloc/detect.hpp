#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vibroloc/dataset.hpp"

namespace vibroloc {

enum class DetectionMode { offline, streaming };

struct DetectionConfig {
  int smooth_window_samples = 31;     // ~30 ms at 1024 Hz, must be odd
  double threshold_fraction = 0.2;    // alpha, fraction of the reference max
  double min_separation_s = 0.2;      // peaks closer than this merge
  DetectionMode mode = DetectionMode::offline;
  double streaming_max_horizon_s = 5.0;  // trailing window for the running max

  void validate() const;  // throws ConfigError
};

struct Event {
  Eigen::Index sample = 0;  // s_k
  double peak = 0.0;        // smoothed composite value at s_k
};

// Strictly increasing event timestamps with pairwise gaps of at least
// min_separation_s.
using EventList = std::vector<Event>;

// g(t) = mean_j |a_j(t)|. Throws DataError on an empty record.
Eigen::VectorXd composite_signal(const WaveformRecord& record);

// Centered moving average with edge truncation (shorter effective window at
// the boundaries). window must be odd and >= 1.
Eigen::VectorXd smooth(const Eigen::VectorXd& signal, int window);

// Peak picking on the smoothed composite. Candidates are interior local
// maxima (plateaus count once, at their center) above
// threshold_fraction * M, where M is the global max (offline) or the
// trailing-horizon running max at the candidate (streaming). Conflicts under
// min_separation_s resolve greedily in favor of the larger peak, earlier
// peak on ties.
EventList detect_events(const Eigen::VectorXd& g_smoothed,
                        const DetectionConfig& cfg, double sample_rate_hz);

// Convenience: composite -> smooth -> detect on one record.
EventList detect_record(const WaveformRecord& record,
                        const DetectionConfig& cfg);

// Incremental detector for live use. Single consumer, not shareable across
// threads while active. Feed raw composite samples g(t) in order; events are
// confirmed once min_separation_s has elapsed past their peak without a
// larger competitor, so emission lags the peak by that amount plus half the
// smoothing window.
class StreamingDetector {
 public:
  StreamingDetector(const DetectionConfig& cfg, double sample_rate_hz);

  void push(double g_raw);
  // Call once after the last sample; flushes the smoother and any pending
  // peak.
  void finish();
  // Confirmed events so far (drains the internal queue).
  EventList take_confirmed();

 private:
  void advance_smoother();
  void scan(Eigen::Index i);
  void consider(Eigen::Index p, double v);

  DetectionConfig cfg_;
  double fs_;
  Eigen::Index min_sep_samples_;
  Eigen::Index horizon_samples_;
  int half_;

  std::vector<double> raw_;
  std::vector<double> smoothed_;
  Eigen::Index n_smoothed_ = 0;
  bool finished_ = false;

  Eigen::Index rise_start_ = 0;  // start of the current non-descending run
  bool has_pending_ = false;
  Event pending_{};
  EventList confirmed_;
};

}  // namespace vibroloc
