#include "vibroloc/detect.hpp"

#include <algorithm>
#include <cmath>

#include "vibroloc/errors.hpp"

namespace vibroloc {

void DetectionConfig::validate() const {
  if (smooth_window_samples < 1 || smooth_window_samples % 2 == 0)
    throw ConfigError("smooth_window_samples must be odd and positive");
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
    throw ConfigError("threshold_fraction must lie in (0,1)");
  if (!(min_separation_s > 0.0))
    throw ConfigError("min_separation_s must be positive");
  if (mode == DetectionMode::streaming && !(streaming_max_horizon_s > 0.0))
    throw ConfigError("streaming_max_horizon_s must be positive");
}

Eigen::VectorXd composite_signal(const WaveformRecord& record) {
  if (record.samples.rows() == 0 || record.samples.cols() == 0)
    throw DataError("empty record");
  return record.samples.cwiseAbs().rowwise().mean();
}

Eigen::VectorXd smooth(const Eigen::VectorXd& signal, int window) {
  if (window < 1 || window % 2 == 0)
    throw ConfigError("smoothing window must be odd and positive");
  const Eigen::Index n = signal.size();
  const Eigen::Index half = window / 2;
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
    const Eigen::Index hi = std::min(n - 1, i + half);
    out[i] = signal.segment(lo, hi - lo + 1).mean();
  }
  return out;
}

namespace {

// Interior local maxima; a plateau counts once at its (floored) center.
// Plateaus touching either boundary are not peaks, so a constant signal has
// none.
std::vector<Event> local_maxima(const Eigen::VectorXd& g) {
  std::vector<Event> peaks;
  const Eigen::Index n = g.size();
  Eigen::Index plateau_start = -1;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (g[i] > g[i - 1]) {
      plateau_start = i;
    } else if (g[i] < g[i - 1]) {
      if (plateau_start >= 0)
        peaks.push_back({(plateau_start + i - 1) / 2, g[i - 1]});
      plateau_start = -1;
    }
    // equal: plateau continues (or we never rose; plateau_start stays -1)
  }
  return peaks;
}

Eigen::Index separation_samples(double min_separation_s, double fs) {
  return static_cast<Eigen::Index>(std::ceil(min_separation_s * fs - 1e-9));
}

}  // namespace

EventList detect_events(const Eigen::VectorXd& g_smoothed,
                        const DetectionConfig& cfg, double sample_rate_hz) {
  cfg.validate();
  if (!(sample_rate_hz > 0.0)) throw ConfigError("sample rate must be positive");
  const Eigen::Index n = g_smoothed.size();
  if (n == 0) return {};

  std::vector<Event> candidates;
  if (cfg.mode == DetectionMode::offline) {
    const double threshold = cfg.threshold_fraction * g_smoothed.maxCoeff();
    for (const Event& p : local_maxima(g_smoothed))
      if (p.peak > threshold) candidates.push_back(p);
  } else {
    const Eigen::Index horizon = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::llround(cfg.streaming_max_horizon_s *
                                                  sample_rate_hz)));
    for (const Event& p : local_maxima(g_smoothed)) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, p.sample - horizon + 1);
      const double run_max =
          g_smoothed.segment(lo, p.sample - lo + 1).maxCoeff();
      if (p.peak > cfg.threshold_fraction * run_max) candidates.push_back(p);
    }
  }

  // Largest peak wins; anything within min_separation of a kept peak drops.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Event& a, const Event& b) {
                     if (a.peak != b.peak) return a.peak > b.peak;
                     return a.sample < b.sample;
                   });
  const Eigen::Index min_gap = separation_samples(cfg.min_separation_s, sample_rate_hz);
  EventList kept;
  for (const Event& c : candidates) {
    bool blocked = false;
    for (const Event& k : kept)
      if (std::abs(c.sample - k.sample) < min_gap) {
        blocked = true;
        break;
      }
    if (!blocked) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end(),
            [](const Event& a, const Event& b) { return a.sample < b.sample; });
  return kept;
}

EventList detect_record(const WaveformRecord& record, const DetectionConfig& cfg) {
  const Eigen::VectorXd g = composite_signal(record);
  return detect_events(smooth(g, cfg.smooth_window_samples), cfg,
                       record.layout.sample_rate_hz);
}

StreamingDetector::StreamingDetector(const DetectionConfig& cfg, double sample_rate_hz)
    : cfg_(cfg), fs_(sample_rate_hz) {
  cfg_.mode = DetectionMode::streaming;
  cfg_.validate();
  if (!(fs_ > 0.0)) throw ConfigError("sample rate must be positive");
  min_sep_samples_ = separation_samples(cfg_.min_separation_s, fs_);
  horizon_samples_ = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(cfg_.streaming_max_horizon_s * fs_)));
  half_ = cfg_.smooth_window_samples / 2;
}

void StreamingDetector::push(double g_raw) {
  if (finished_) throw ConfigError("StreamingDetector: push after finish");
  raw_.push_back(g_raw);
  advance_smoother();
}

void StreamingDetector::advance_smoother() {
  // smoothed[i] needs raw samples up to i + half; at finish the window
  // truncates at the end like the batch smoother.
  const Eigen::Index n_raw = static_cast<Eigen::Index>(raw_.size());
  while (true) {
    const Eigen::Index i = n_smoothed_;
    if (i >= n_raw) break;
    if (!finished_ && i + half_ >= n_raw) break;
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half_);
    const Eigen::Index hi = std::min(n_raw - 1, i + half_);
    double sum = 0.0;
    for (Eigen::Index j = lo; j <= hi; ++j) sum += raw_[j];
    smoothed_.push_back(sum / static_cast<double>(hi - lo + 1));
    ++n_smoothed_;
    scan(i);
  }
}

void StreamingDetector::scan(Eigen::Index i) {
  if (i >= 1) {
    if (smoothed_[i] > smoothed_[i - 1]) {
      rise_start_ = i;
    } else if (smoothed_[i] < smoothed_[i - 1]) {
      if (rise_start_ >= 1)
        consider((rise_start_ + i - 1) / 2, smoothed_[i - 1]);
      rise_start_ = 0;
    }
  }
  if (has_pending_ && i - pending_.sample > min_sep_samples_) {
    confirmed_.push_back(pending_);
    has_pending_ = false;
  }
}

void StreamingDetector::consider(Eigen::Index p, double v) {
  const Eigen::Index lo = std::max<Eigen::Index>(0, p - horizon_samples_ + 1);
  double run_max = 0.0;
  for (Eigen::Index j = lo; j <= p; ++j) run_max = std::max(run_max, smoothed_[j]);
  if (!(v > cfg_.threshold_fraction * run_max)) return;
  if (has_pending_) {
    if (p - pending_.sample < min_sep_samples_) {
      if (v > pending_.peak) pending_ = {p, v};  // larger peak displaces
      return;
    }
    confirmed_.push_back(pending_);
  }
  pending_ = {p, v};
  has_pending_ = true;
}

void StreamingDetector::finish() {
  if (finished_) return;
  finished_ = true;
  advance_smoother();
  if (has_pending_) {
    confirmed_.push_back(pending_);
    has_pending_ = false;
  }
}

EventList StreamingDetector::take_confirmed() {
  EventList out;
  out.swap(confirmed_);
  return out;
}

}  // namespace vibroloc
