#include "vibroloc/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <thread>

#include "vibroloc/errors.hpp"
#include "vibroloc/features.hpp"
#include "vibroloc/io_util.hpp"
#include "vibroloc/readout.hpp"
#include "vibroloc/rng.hpp"
#include "vibroloc/subspace.hpp"

namespace vibroloc {

namespace {

using nlohmann::json;

TraversalKey key_of(const StepRef& ref) { return {ref.subject, ref.traversal}; }

bool selected(const std::vector<TraversalKey>& keys, const TraversalKey& k) {
  return std::find(keys.begin(), keys.end(), k) != keys.end();
}

struct StepPool {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::Vector2d> positions;
  std::vector<StepRef> refs;

  Eigen::MatrixXd state_matrix() const {
    if (states.empty()) return {};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(states.size()),
                      states.front().size());
    for (std::size_t i = 0; i < states.size(); ++i)
      m.row(static_cast<Eigen::Index>(i)) = states[i];
    return m;
  }
  Eigen::MatrixXd position_matrix() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(positions.size()), 2);
    for (std::size_t i = 0; i < positions.size(); ++i)
      m.row(static_cast<Eigen::Index>(i)) = positions[i];
    return m;
  }
};

struct Assembly {
  StepPool train, test;
  std::vector<Eigen::VectorXd> fisher_rows;  // per kept step, per-sensor RMS
  std::vector<Eigen::Vector2d> fisher_truth;
  int dropped_unmatched = 0;
  int dropped_no_history = 0;
  int unmatched_labels = 0;
  std::vector<std::string> sensor_ids;
  double sample_rate_hz = 0.0;
};

}  // namespace

std::vector<std::ptrdiff_t> match_events_to_labels(
    const WaveformRecord& record, const EventList& events,
    const std::vector<FootstepLabel>& labels, double window_s) {
  struct Cand {
    double adt;
    std::size_t ei, li;
  };
  std::vector<Cand> cands;
  for (std::size_t ei = 0; ei < events.size(); ++ei) {
    const double te = record.time_at(events[ei].sample);
    for (std::size_t li = 0; li < labels.size(); ++li) {
      const double adt = std::abs(te - labels[li].t_s);
      if (adt <= window_s) cands.push_back({adt, ei, li});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.adt != b.adt) return a.adt < b.adt;
    if (a.li != b.li) return a.li < b.li;
    return a.ei < b.ei;
  });

  std::vector<std::ptrdiff_t> event_of_label(labels.size(), -1);
  std::vector<char> event_used(events.size(), 0);
  for (const Cand& c : cands) {
    if (event_used[c.ei] || event_of_label[c.li] >= 0) continue;
    event_used[c.ei] = 1;
    event_of_label[c.li] = static_cast<std::ptrdiff_t>(c.ei);
  }
  return event_of_label;
}

namespace {

Assembly assemble_steps(const std::vector<LabeledDataset>& datasets,
                        const ExperimentConfig& cfg) {
  Assembly out;
  bool first = true;
  WindowConfig wc;

  for (const LabeledDataset& ds : datasets) {
    bool any_selected = false;
    for (const FootstepLabel& label : ds.labels) {
      const TraversalKey k{label.subject, label.traversal};
      if (selected(cfg.train, k) || selected(cfg.test, k)) {
        any_selected = true;
        break;
      }
    }
    if (!any_selected) continue;

    const WaveformRecord record =
        cfg.sensor_ids.empty() ? ds.record
                               : select_sensors(ds.record, cfg.sensor_ids);

    std::vector<std::string> ids;
    ids.reserve(record.layout.sensors.size());
    for (const Sensor& s : record.layout.sensors) ids.push_back(s.id);
    if (first) {
      out.sensor_ids = ids;
      out.sample_rate_hz = record.layout.sample_rate_hz;
      wc = WindowConfig::from(cfg.t_w_s, out.sample_rate_hz,
                              record.layout.sensor_count());
      first = false;
    } else if (ids != out.sensor_ids ||
               record.layout.sample_rate_hz != out.sample_rate_hz) {
      throw DataError("datasets disagree on sensor layout or sample rate");
    }

    const EventList events = detect_record(
        cfg.detect_all_sensors ? ds.record : record, cfg.detection);
    const auto event_of_label =
        match_events_to_labels(record, events, ds.labels, cfg.match_window_s);

    std::vector<char> event_claimed(events.size(), 0);
    for (std::size_t li = 0; li < ds.labels.size(); ++li)
      if (event_of_label[li] >= 0)
        event_claimed[static_cast<std::size_t>(event_of_label[li])] = 1;
    for (char used : event_claimed)
      if (!used) ++out.dropped_unmatched;

    for (std::size_t li = 0; li < ds.labels.size(); ++li) {
      const FootstepLabel& label = ds.labels[li];
      const TraversalKey k{label.subject, label.traversal};
      const bool in_train = selected(cfg.train, k);
      const bool in_test = selected(cfg.test, k);
      if (!in_train && !in_test) continue;

      if (event_of_label[li] < 0) {
        ++out.unmatched_labels;
        continue;
      }
      const Event& event =
          events[static_cast<std::size_t>(event_of_label[li])];
      const StepRef ref{label.subject, label.traversal, label.k};

      Eigen::MatrixXd window;
      try {
        window = extract_window(record, event.sample, wc, ref);
      } catch (const DataError&) {
        ++out.dropped_no_history;
        continue;
      }

      ReservoirState state = vectorize(window, ref);
      if (cfg.rms_normalize) state = rms_normalize(state);

      StepPool& pool = in_train ? out.train : out.test;
      pool.states.push_back(std::move(state.values));
      pool.positions.emplace_back(label.x_m, label.y_m);
      pool.refs.push_back(ref);

      Eigen::VectorXd per_sensor(window.cols());
      for (Eigen::Index j = 0; j < window.cols(); ++j)
        per_sensor[j] = rms(window.col(j));
      out.fisher_rows.push_back(std::move(per_sensor));
      out.fisher_truth.emplace_back(label.x_m, label.y_m);
    }
  }

  if (first) throw DataError("no dataset contains a selected traversal");
  return out;
}

void apply_kalman(std::vector<Prediction>& preds, const KfConfig& kf) {
  std::map<TraversalKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < preds.size(); ++i)
    groups[key_of(preds[i].ref)].push_back(i);
  for (const auto& [key, idx] : groups) {
    std::vector<Eigen::Vector2d> measurements;
    measurements.reserve(idx.size());
    for (std::size_t i : idx) measurements.push_back(preds[i].predicted);
    const auto filtered = filter_track(measurements, kf);
    for (std::size_t j = 0; j < idx.size(); ++j)
      preds[idx[j]].filtered = filtered[j];
  }
}

json rmse_json(const RmseTriple& t) {
  return json{{"total", t.total}, {"x", t.x}, {"y", t.y}};
}

std::string confusion_csv(const BinSpec& bins, const Eigen::MatrixXi& counts) {
  std::string out = "true_lower_edge";
  for (int c = 0; c < bins.bin_count(); ++c)
    out += ",pred_" + io::format_double(bins.edges[static_cast<std::size_t>(c)]);
  out += "\n";
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    out += io::format_double(bins.edges[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < counts.cols(); ++c)
      out += "," + std::to_string(counts(r, c));
    out += "\n";
  }
  return out;
}

json keys_json(const std::vector<TraversalKey>& keys) {
  json arr = json::array();
  for (const TraversalKey& k : keys)
    arr.push_back({{"subject", k.subject}, {"traversal", k.traversal}});
  return arr;
}

std::vector<TraversalKey> keys_from_json(const json& arr) {
  std::vector<TraversalKey> out;
  for (const json& e : arr)
    out.push_back({e.at("subject").get<std::string>(),
                   e.at("traversal").get<std::string>()});
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (train.empty()) throw ConfigError("no training traversals selected");
  if (test.empty()) throw ConfigError("no test traversals selected");
  for (const TraversalKey& k : train)
    if (selected(test, k))
      throw ConfigError("train and test selectors overlap: " + k.subject +
                        "/" + k.traversal);
  {
    std::set<TraversalKey> t(train.begin(), train.end());
    if (t.size() != train.size())
      throw ConfigError("duplicate training selector");
    std::set<TraversalKey> u(test.begin(), test.end());
    if (u.size() != test.size()) throw ConfigError("duplicate test selector");
  }
  if (!sensor_ids.empty()) {
    std::set<std::string> s(sensor_ids.begin(), sensor_ids.end());
    if (s.size() != sensor_ids.size())
      throw ConfigError("duplicate sensor id in selection");
  }
  detection.validate();
  if (!(t_w_s > 0.0)) throw ConfigError("window length must be positive");
  if (!(match_window_s > 0.0))
    throw ConfigError("match window must be positive");
  if (!(eta_target > 0.0 && eta_target <= 1.0))
    throw ConfigError("eta target must lie in (0,1]");
  if (pca_dim && *pca_dim < 1) throw ConfigError("pca_dim must be >= 1");
  if (epsilon && !(*epsilon > 0.0))
    throw ConfigError("epsilon must be positive");
  if (kalman) kf.validate();
  if (!(bin_pitch_x > 0.0) || !(bin_pitch_y > 0.0))
    throw ConfigError("bin pitches must be positive");
}

ExperimentReport run_pipeline(const std::vector<LabeledDataset>& datasets,
                              const ExperimentConfig& cfg) {
  cfg.validate();
  if (datasets.empty()) throw DataError("no datasets");

  Assembly steps = assemble_steps(datasets, cfg);
  if (steps.train.states.size() < 2)
    throw DataError("fewer than 2 training steps survived detection");
  if (steps.test.states.empty())
    throw DataError("no test steps survived detection");

  const Eigen::MatrixXd train_states = steps.train.state_matrix();
  const Eigen::MatrixXd test_states = steps.test.state_matrix();

  ExperimentReport report;
  report.config = cfg;
  report.dropped_unmatched = steps.dropped_unmatched;
  report.dropped_no_history = steps.dropped_no_history;
  report.unmatched_labels = steps.unmatched_labels;

  PcaModel pca = fit_pca(train_states, cfg.centering);
  const int rank = pca.rank_available();
  report.eta_curve.resize(rank);
  {
    const double total = pca.eigenvalues.sum();
    if (!(total > 0.0)) throw NumericError("zero variance spectrum");
    double cum = 0.0;
    for (int i = 0; i < rank; ++i) {
      cum += pca.eigenvalues[i];
      report.eta_curve[i] = cum / total;
    }
  }

  int D = 0;
  if (cfg.pca_dim) {
    if (*cfg.pca_dim > rank)
      throw ConfigError("pca_dim " + std::to_string(*cfg.pca_dim) +
                        " exceeds available rank " + std::to_string(rank));
    D = *cfg.pca_dim;
  } else {
    D = choose_dimension(pca, cfg.eta_target);
  }

  const Eigen::MatrixXd z_train = project_rows(pca, train_states, D);
  const Eigen::MatrixXd z_test = project_rows(pca, test_states, D);

  const TrainingSet ts =
      assemble_training(z_train, steps.train.position_matrix());
  const double eps = cfg.epsilon ? *cfg.epsilon : default_ridge_epsilon(ts.design);
  const ReadoutModel readout = train_ridge(ts, eps, cfg.penalize_bias);

  auto make_preds = [&](const StepPool& pool, const Eigen::MatrixXd& z) {
    std::vector<Prediction> preds;
    preds.reserve(pool.refs.size());
    for (std::size_t i = 0; i < pool.refs.size(); ++i) {
      Prediction p;
      p.ref = pool.refs[i];
      p.truth = pool.positions[i];
      p.predicted =
          predict(readout, z.row(static_cast<Eigen::Index>(i)).transpose());
      preds.push_back(std::move(p));
    }
    return preds;
  };
  report.train_predictions = make_preds(steps.train, z_train);
  report.test_predictions = make_preds(steps.test, z_test);

  if (cfg.kalman) {
    apply_kalman(report.train_predictions, cfg.kf);
    apply_kalman(report.test_predictions, cfg.kf);
  }

  auto split_metrics = [&](const std::vector<Prediction>& preds) {
    SplitMetrics m;
    m.raw = rmse(preds, PredictionKind::raw);
    if (cfg.kalman) m.filtered = rmse(preds, PredictionKind::filtered);
    m.steps = static_cast<int>(preds.size());
    return m;
  };
  report.train = split_metrics(report.train_predictions);
  report.test = split_metrics(report.test_predictions);

  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  for (const Eigen::Vector2d& p : steps.fisher_truth) {
    lo_x = std::min(lo_x, p.x());
    hi_x = std::max(hi_x, p.x());
    lo_y = std::min(lo_y, p.y());
    hi_y = std::max(hi_y, p.y());
  }
  report.bins_x = make_bins(BinAxis::x, lo_x, hi_x, cfg.bin_pitch_x);
  report.bins_y = make_bins(BinAxis::y, lo_y, hi_y, cfg.bin_pitch_y);
  report.confusion_x = confusion_matrix(report.test_predictions, report.bins_x);
  report.confusion_y = confusion_matrix(report.test_predictions, report.bins_y);

  {
    const auto n = static_cast<Eigen::Index>(steps.fisher_rows.size());
    Eigen::MatrixXd features(n, steps.fisher_rows.front().size());
    std::vector<int> bin_x(static_cast<std::size_t>(n)),
        bin_y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      features.row(i) = steps.fisher_rows[static_cast<std::size_t>(i)];
      bin_x[static_cast<std::size_t>(i)] =
          report.bins_x.bin_of(steps.fisher_truth[static_cast<std::size_t>(i)].x());
      bin_y[static_cast<std::size_t>(i)] =
          report.bins_y.bin_of(steps.fisher_truth[static_cast<std::size_t>(i)].y());
    }
    const Eigen::VectorXd jx = fisher_ratio(features, bin_x);
    const Eigen::VectorXd jy = fisher_ratio(features, bin_y);
    for (std::size_t j = 0; j < steps.sensor_ids.size(); ++j)
      report.fisher.push_back({steps.sensor_ids[j],
                               jx[static_cast<Eigen::Index>(j)],
                               jy[static_cast<Eigen::Index>(j)]});
  }

  report.model.pca = std::move(pca);
  report.model.readout = readout;
  report.model.settings.t_w_s = cfg.t_w_s;
  report.model.settings.pca_dim = D;
  if (!cfg.pca_dim) report.model.settings.eta_target = cfg.eta_target;
  report.model.settings.epsilon = eps;
  report.model.settings.rms_normalize = cfg.rms_normalize;
  report.model.settings.centering = cfg.centering;
  report.model.settings.penalize_bias = cfg.penalize_bias;
  report.model.settings.sample_rate_hz = steps.sample_rate_hz;
  report.model.settings.sensor_ids = steps.sensor_ids;
  report.model.validate();
  return report;
}

ExperimentReport run_pipeline(const ExperimentConfig& cfg) {
  if (cfg.manifests.empty())
    throw ConfigError("config lists no dataset manifests");
  std::vector<LabeledDataset> datasets;
  datasets.reserve(cfg.manifests.size());
  for (const std::filesystem::path& m : cfg.manifests)
    datasets.push_back(load_dataset(m));
  return run_pipeline(datasets, cfg);
}

namespace {

struct SweepJob {
  std::size_t row = 0;
  ExperimentConfig cfg;
};

std::vector<SweepRow> run_jobs(const std::vector<LabeledDataset>& datasets,
                               const std::vector<SweepJob>& jobs,
                               const std::vector<int>& sizes, int repeats) {
  std::vector<RmseTriple> results(jobs.size());
  std::vector<std::exception_ptr> failures(jobs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        results[i] = run_pipeline(datasets, jobs[i].cfg).test.raw;
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const unsigned hw = std::thread::hardware_concurrency();
  const unsigned n_threads = std::max<unsigned>(
      1, std::min<unsigned>(hw != 0 ? hw : 2,
                            static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();

  for (const std::exception_ptr& e : failures)
    if (e) std::rethrow_exception(e);

  std::vector<SweepRow> rows(sizes.size());
  for (std::size_t r = 0; r < sizes.size(); ++r) {
    rows[r].size = sizes[r];
    rows[r].repeats = repeats;
  }
  // mean then sample std, componentwise
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    SweepRow& row = rows[jobs[i].row];
    row.mean.total += results[i].total;
    row.mean.x += results[i].x;
    row.mean.y += results[i].y;
  }
  for (SweepRow& row : rows) {
    row.mean.total /= repeats;
    row.mean.x /= repeats;
    row.mean.y /= repeats;
  }
  if (repeats > 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      SweepRow& row = rows[jobs[i].row];
      const double dt = results[i].total - row.mean.total;
      const double dx = results[i].x - row.mean.x;
      const double dy = results[i].y - row.mean.y;
      row.stddev.total += dt * dt;
      row.stddev.x += dx * dx;
      row.stddev.y += dy * dy;
    }
    for (SweepRow& row : rows) {
      row.stddev.total = std::sqrt(row.stddev.total / (repeats - 1));
      row.stddev.x = std::sqrt(row.stddev.x / (repeats - 1));
      row.stddev.y = std::sqrt(row.stddev.y / (repeats - 1));
    }
  }
  return rows;
}

template <typename T>
std::vector<T> draw_subset(std::vector<T> pool, int size, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  for (int i = 0; i < size; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        static_cast<std::size_t>(gen() % (pool.size() - static_cast<std::size_t>(i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(size));
  return pool;
}

}  // namespace

std::vector<SweepRow> sweep_training_size(
    const std::vector<LabeledDataset>& datasets, const ExperimentConfig& cfg,
    const std::vector<int>& sizes, int repeats, std::uint64_t seed) {
  cfg.validate();
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (sizes.empty()) throw ConfigError("no sweep sizes given");
  for (int s : sizes)
    if (s < 1 || s > static_cast<int>(cfg.train.size()))
      throw ConfigError("sweep size " + std::to_string(s) +
                        " outside the training pool");

  std::vector<SweepJob> jobs;
  for (std::size_t r = 0; r < sizes.size(); ++r) {
    for (int rep = 0; rep < repeats; ++rep) {
      SweepJob job;
      job.row = r;
      job.cfg = cfg;
      job.cfg.train = draw_subset(
          cfg.train, sizes[r],
          derive_seed(seed, "train-size/" + std::to_string(sizes[r]) +
                                "/rep/" + std::to_string(rep)));
      jobs.push_back(std::move(job));
    }
  }
  return run_jobs(datasets, jobs, sizes, repeats);
}

std::vector<SweepRow> sweep_sensor_count(
    const std::vector<LabeledDataset>& datasets, const ExperimentConfig& cfg,
    const std::vector<int>& counts, int repeats, std::uint64_t seed) {
  cfg.validate();
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (counts.empty()) throw ConfigError("no sweep counts given");
  if (datasets.empty()) throw DataError("no datasets");

  std::vector<std::string> pool = cfg.sensor_ids;
  if (pool.empty())
    for (const Sensor& s : datasets.front().record.layout.sensors)
      pool.push_back(s.id);

  for (int c : counts)
    if (c < 1 || c > static_cast<int>(pool.size()))
      throw ConfigError("sweep count " + std::to_string(c) +
                        " outside the sensor pool");

  std::vector<SweepJob> jobs;
  for (std::size_t r = 0; r < counts.size(); ++r) {
    for (int rep = 0; rep < repeats; ++rep) {
      SweepJob job;
      job.row = r;
      job.cfg = cfg;
      job.cfg.sensor_ids = draw_subset(
          pool, counts[r],
          derive_seed(seed, "sensor-count/" + std::to_string(counts[r]) +
                                "/rep/" + std::to_string(rep)));
      jobs.push_back(std::move(job));
    }
  }
  return run_jobs(datasets, jobs, counts, repeats);
}

std::string metrics_json(const ExperimentReport& report) {
  json j;
  auto split = [&](const SplitMetrics& m) {
    json s;
    s["rmse"] = rmse_json(m.raw);
    if (m.filtered) s["rmse_filtered"] = rmse_json(*m.filtered);
    s["steps"] = m.steps;
    return s;
  };
  j["train"] = split(report.train);
  j["test"] = split(report.test);
  j["test"]["diagonal_mass_x"] = diagonal_mass(report.confusion_x);
  j["test"]["diagonal_mass_y"] = diagonal_mass(report.confusion_y);
  j["pca"] = {{"dim", report.model.settings.pca_dim},
              {"rank", report.model.pca.rank_available()},
              {"eta", report.eta_curve[report.model.settings.pca_dim - 1]}};
  j["ridge"] = {{"epsilon", report.model.settings.epsilon}};
  j["dropped"] = {{"unmatched_events", report.dropped_unmatched},
                  {"no_history", report.dropped_no_history},
                  {"unmatched_labels", report.unmatched_labels}};
  return j.dump(2) + "\n";
}

std::string predictions_csv(const ExperimentReport& report) {
  std::string out =
      "split,k,subject,traversal,x_m,y_m,xhat_m,yhat_m,xhat_kf_m,yhat_kf_m\n";
  auto rows = [&](const std::vector<Prediction>& preds, const char* split) {
    for (const Prediction& p : preds) {
      out += split;
      out += "," + std::to_string(p.ref.k) + "," + p.ref.subject + "," +
             p.ref.traversal + "," + io::format_double(p.truth.x()) + "," +
             io::format_double(p.truth.y()) + "," +
             io::format_double(p.predicted.x()) + "," +
             io::format_double(p.predicted.y()) + ",";
      if (p.filtered)
        out += io::format_double(p.filtered->x()) + "," +
               io::format_double(p.filtered->y());
      else
        out += ",";
      out += "\n";
    }
  };
  rows(report.train_predictions, "train");
  rows(report.test_predictions, "test");
  return out;
}

std::string config_json(const ExperimentConfig& cfg) {
  json j;
  json manifests = json::array();
  for (const std::filesystem::path& m : cfg.manifests)
    manifests.push_back(m.string());
  j["manifests"] = manifests;
  j["train"] = keys_json(cfg.train);
  j["test"] = keys_json(cfg.test);
  j["sensor_ids"] = cfg.sensor_ids;
  j["detect_all_sensors"] = cfg.detect_all_sensors;
  j["detection"] = {
      {"smooth_window_samples", cfg.detection.smooth_window_samples},
      {"threshold_fraction", cfg.detection.threshold_fraction},
      {"min_separation_s", cfg.detection.min_separation_s},
      {"mode",
       cfg.detection.mode == DetectionMode::offline ? "offline" : "streaming"},
      {"streaming_max_horizon_s", cfg.detection.streaming_max_horizon_s}};
  j["t_w_s"] = cfg.t_w_s;
  j["match_window_s"] = cfg.match_window_s;
  j["rms_normalize"] = cfg.rms_normalize;
  j["centering"] = cfg.centering;
  if (cfg.pca_dim)
    j["pca_dim"] = *cfg.pca_dim;
  else
    j["eta_target"] = cfg.eta_target;
  if (cfg.epsilon) j["epsilon"] = *cfg.epsilon;
  j["penalize_bias"] = cfg.penalize_bias;
  j["kalman"] = cfg.kalman;
  j["kf"] = {{"q", cfg.kf.q},
             {"r", cfg.kf.r},
             {"initial_position_var", cfg.kf.initial_position_var},
             {"initial_velocity_var", cfg.kf.initial_velocity_var}};
  j["bin_pitch_x"] = cfg.bin_pitch_x;
  j["bin_pitch_y"] = cfg.bin_pitch_y;
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  try {
    ExperimentConfig cfg;
    for (const json& m : j.value("manifests", json::array()))
      cfg.manifests.emplace_back(m.get<std::string>());
    if (j.contains("train")) cfg.train = keys_from_json(j.at("train"));
    if (j.contains("test")) cfg.test = keys_from_json(j.at("test"));
    cfg.sensor_ids = j.value("sensor_ids", std::vector<std::string>{});
    cfg.detect_all_sensors = j.value("detect_all_sensors", false);
    if (j.contains("detection")) {
      const json& d = j.at("detection");
      cfg.detection.smooth_window_samples =
          d.value("smooth_window_samples", cfg.detection.smooth_window_samples);
      cfg.detection.threshold_fraction =
          d.value("threshold_fraction", cfg.detection.threshold_fraction);
      cfg.detection.min_separation_s =
          d.value("min_separation_s", cfg.detection.min_separation_s);
      const std::string mode = d.value("mode", std::string("offline"));
      if (mode == "offline")
        cfg.detection.mode = DetectionMode::offline;
      else if (mode == "streaming")
        cfg.detection.mode = DetectionMode::streaming;
      else
        throw ConfigError("unknown detection mode: " + mode);
      cfg.detection.streaming_max_horizon_s = d.value(
          "streaming_max_horizon_s", cfg.detection.streaming_max_horizon_s);
    }
    cfg.t_w_s = j.value("t_w_s", cfg.t_w_s);
    cfg.match_window_s = j.value("match_window_s", cfg.match_window_s);
    cfg.rms_normalize = j.value("rms_normalize", cfg.rms_normalize);
    cfg.centering = j.value("centering", cfg.centering);
    if (j.contains("pca_dim") && !j.at("pca_dim").is_null())
      cfg.pca_dim = j.at("pca_dim").get<int>();
    cfg.eta_target = j.value("eta_target", cfg.eta_target);
    if (j.contains("epsilon") && !j.at("epsilon").is_null())
      cfg.epsilon = j.at("epsilon").get<double>();
    cfg.penalize_bias = j.value("penalize_bias", cfg.penalize_bias);
    cfg.kalman = j.value("kalman", cfg.kalman);
    if (j.contains("kf")) {
      const json& k = j.at("kf");
      cfg.kf.q = k.value("q", cfg.kf.q);
      cfg.kf.r = k.value("r", cfg.kf.r);
      cfg.kf.initial_position_var =
          k.value("initial_position_var", cfg.kf.initial_position_var);
      cfg.kf.initial_velocity_var =
          k.value("initial_velocity_var", cfg.kf.initial_velocity_var);
    }
    cfg.bin_pitch_x = j.value("bin_pitch_x", cfg.bin_pitch_x);
    cfg.bin_pitch_y = j.value("bin_pitch_y", cfg.bin_pitch_y);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string scatter_svg(const std::vector<Prediction>& preds) {
  if (preds.empty()) throw DataError("scatter over empty predictions");
  constexpr int kW = 640, kH = 480, kM = 60;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Prediction& p : preds) {
    lo = std::min({lo, p.truth.x(), p.predicted.x()});
    hi = std::max({hi, p.truth.x(), p.predicted.x()});
  }
  double pad = 0.05 * (hi - lo);
  if (!(pad > 0.0)) pad = 1.0;
  lo -= pad;
  hi += pad;

  const auto sx = [&](double v) {
    return kM + (v - lo) / (hi - lo) * (kW - 2 * kM);
  };
  const auto sy = [&](double v) {
    return kH - kM - (v - lo) / (hi - lo) * (kH - 2 * kM);
  };
  char buf[256];
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
         "height=\"480\" viewBox=\"0 0 640 480\">\n";
  out += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
                sx(lo), sy(lo), sx(hi), sy(hi));
  out += buf;
  for (const Prediction& p : preds) {
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"#1f77b4\" "
                  "fill-opacity=\"0.6\"/>\n",
                  sx(p.truth.x()), sy(p.predicted.x()));
    out += buf;
  }
  out += "<text x=\"320\" y=\"470\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\">true x (m)</text>\n";
  out += "<text x=\"16\" y=\"240\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\" "
         "transform=\"rotate(-90 16 240)\">predicted x (m)</text>\n";
  out += "</svg>\n";
  return out;
}

void write_report(const ExperimentReport& report,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_file((dir / "config.json").string(), config_json(report.config));
  io::write_file((dir / "metrics.json").string(), metrics_json(report));
  io::write_file((dir / "predictions.csv").string(), predictions_csv(report));

  std::string eta = "D,eta\n";
  for (Eigen::Index i = 0; i < report.eta_curve.size(); ++i)
    eta += std::to_string(i + 1) + "," +
           io::format_double(report.eta_curve[i]) + "\n";
  io::write_file((dir / "eta_curve.csv").string(), eta);

  io::write_file((dir / "confusion_x.csv").string(),
                 confusion_csv(report.bins_x, report.confusion_x));
  io::write_file((dir / "confusion_y.csv").string(),
                 confusion_csv(report.bins_y, report.confusion_y));

  std::string fisher = "sensor_id,j_x,j_y\n";
  for (const SensorFisher& f : report.fisher)
    fisher += f.sensor_id + "," + io::format_double(f.j_x) + "," +
              io::format_double(f.j_y) + "\n";
  io::write_file((dir / "fisher.csv").string(), fisher);

  io::write_file((dir / "scatter.svg").string(),
                 scatter_svg(report.test_predictions));
}

}  // namespace vibroloc
