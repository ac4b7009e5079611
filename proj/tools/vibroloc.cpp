#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vibroloc/dataset.hpp"
#include "vibroloc/detect.hpp"
#include "vibroloc/errors.hpp"
#include "vibroloc/eval.hpp"
#include "vibroloc/features.hpp"
#include "vibroloc/io_util.hpp"
#include "vibroloc/model_io.hpp"
#include "vibroloc/pipeline.hpp"
#include "vibroloc/readout.hpp"
#include "vibroloc/rng.hpp"
#include "vibroloc/subspace.hpp"
#include "vibroloc/synth.hpp"
#include "vibroloc/tracking.hpp"

namespace fs = std::filesystem;
using namespace vibroloc;

namespace {

TraversalKey parse_selector(const std::string& s) {
  const auto pos = s.find(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 == s.size())
    throw ConfigError("selector must look like S1:Tr3, got '" + s + "'");
  return {s.substr(0, pos), s.substr(pos + 1)};
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::fputs(text.c_str(), stdout);
  else
    io::write_file(out_path, text);
}

// --config JSON plus flag overrides; flags given on the command line win.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::function<void(ExperimentConfig&)>> appliers;

  ExperimentConfig build() const {
    ExperimentConfig cfg;
    if (!config_path.empty())
      cfg = config_from_json(io::read_file(config_path));
    for (const auto& apply : appliers) apply(cfg);
    return cfg;
  }
};

template <typename T, typename F>
void override_opt(CLI::App* cmd, ConfigArgs& args, const std::string& flag,
                  const std::string& desc, F apply) {
  auto value = std::make_shared<T>();
  CLI::Option* opt = cmd->add_option(flag, *value, desc);
  args.appliers.push_back([opt, value, apply](ExperimentConfig& cfg) {
    if (opt->count() > 0) apply(cfg, *value);
  });
}

template <typename F>
void override_flag(CLI::App* cmd, ConfigArgs& args, const std::string& flag,
                   const std::string& desc, F apply) {
  auto value = std::make_shared<bool>(false);
  CLI::Option* opt = cmd->add_flag(flag, *value, desc);
  args.appliers.push_back([opt, value, apply](ExperimentConfig& cfg) {
    if (opt->count() > 0) apply(cfg, *value);
  });
}

std::shared_ptr<ConfigArgs> attach_experiment_options(CLI::App* cmd) {
  auto args = std::make_shared<ConfigArgs>();
  cmd->add_option("--config", args->config_path, "experiment config (JSON)")
      ->check(CLI::ExistingFile);

  override_opt<std::vector<std::string>>(
      cmd, *args, "--manifest", "dataset manifest path (repeatable)",
      [](ExperimentConfig& c, const std::vector<std::string>& v) {
        c.manifests.assign(v.begin(), v.end());
      });
  override_opt<std::vector<std::string>>(
      cmd, *args, "--train", "training selector subject:traversal (repeatable)",
      [](ExperimentConfig& c, const std::vector<std::string>& v) {
        c.train.clear();
        for (const auto& s : v) c.train.push_back(parse_selector(s));
      });
  override_opt<std::vector<std::string>>(
      cmd, *args, "--test", "test selector subject:traversal (repeatable)",
      [](ExperimentConfig& c, const std::vector<std::string>& v) {
        c.test.clear();
        for (const auto& s : v) c.test.push_back(parse_selector(s));
      });
  override_opt<std::vector<std::string>>(
      cmd, *args, "--sensors", "sensor id subset (repeatable)",
      [](ExperimentConfig& c, const std::vector<std::string>& v) {
        c.sensor_ids = v;
      });
  override_flag(cmd, *args, "--detect-all-sensors",
                "detect events on the full array even with --sensors",
                [](ExperimentConfig& c, bool v) { c.detect_all_sensors = v; });

  override_opt<int>(cmd, *args, "--smooth",
                    "detection smoothing window, samples (odd)",
                    [](ExperimentConfig& c, const int& v) {
                      c.detection.smooth_window_samples = v;
                    });
  override_opt<double>(cmd, *args, "--alpha",
                       "detection threshold as a fraction of the max",
                       [](ExperimentConfig& c, const double& v) {
                         c.detection.threshold_fraction = v;
                       });
  override_opt<double>(cmd, *args, "--min-sep",
                       "minimum event separation, s",
                       [](ExperimentConfig& c, const double& v) {
                         c.detection.min_separation_s = v;
                       });
  override_opt<std::string>(
      cmd, *args, "--detect-mode", "offline or streaming",
      [](ExperimentConfig& c, const std::string& v) {
        if (v == "offline")
          c.detection.mode = DetectionMode::offline;
        else if (v == "streaming")
          c.detection.mode = DetectionMode::streaming;
        else
          throw ConfigError("unknown detection mode: " + v);
      });

  override_opt<double>(
      cmd, *args, "--t-w", "reservoir window length, s",
      [](ExperimentConfig& c, const double& v) { c.t_w_s = v; });
  override_opt<double>(
      cmd, *args, "--match-window", "event-to-label association radius, s",
      [](ExperimentConfig& c, const double& v) { c.match_window_s = v; });
  override_flag(cmd, *args, "--rms,!--no-rms", "RMS-normalize states",
                [](ExperimentConfig& c, bool v) { c.rms_normalize = v; });
  override_flag(cmd, *args, "--centering,!--no-centering",
                "center states before PCA",
                [](ExperimentConfig& c, bool v) { c.centering = v; });
  // Registered before --pca-dim so an explicit --pca-dim wins over --eta.
  override_opt<double>(cmd, *args, "--eta",
                       "retained-variance target choosing D",
                       [](ExperimentConfig& c, const double& v) {
                         c.eta_target = v;
                         c.pca_dim.reset();
                       });
  override_opt<int>(
      cmd, *args, "--pca-dim", "fixed projection dimension D",
      [](ExperimentConfig& c, const int& v) { c.pca_dim = v; });
  override_opt<double>(
      cmd, *args, "--epsilon", "absolute ridge regularizer",
      [](ExperimentConfig& c, const double& v) { c.epsilon = v; });
  override_flag(cmd, *args, "--penalize-bias,!--no-penalize-bias",
                "include the bias row in the ridge penalty",
                [](ExperimentConfig& c, bool v) { c.penalize_bias = v; });
  override_flag(cmd, *args, "--kalman,!--no-kalman",
                "constant-velocity smoothing per traversal",
                [](ExperimentConfig& c, bool v) { c.kalman = v; });
  override_opt<double>(cmd, *args, "--kf-q", "Kalman process noise q",
                       [](ExperimentConfig& c, const double& v) { c.kf.q = v; });
  override_opt<double>(cmd, *args, "--kf-r", "Kalman measurement noise r",
                       [](ExperimentConfig& c, const double& v) { c.kf.r = v; });
  override_opt<double>(
      cmd, *args, "--bin-x", "confusion bin pitch along x, m",
      [](ExperimentConfig& c, const double& v) { c.bin_pitch_x = v; });
  override_opt<double>(
      cmd, *args, "--bin-y", "confusion bin pitch along y, m",
      [](ExperimentConfig& c, const double& v) { c.bin_pitch_y = v; });
  override_opt<std::uint64_t>(
      cmd, *args, "--seed", "campaign seed recorded in reports",
      [](ExperimentConfig& c, const std::uint64_t& v) { c.seed = v; });
  return args;
}

void print_summary(const ExperimentReport& r) {
  auto line = [](const char* name, const SplitMetrics& m) {
    std::printf("%s steps=%d rmse_total=%.4f rmse_x=%.4f rmse_y=%.4f", name,
                m.steps, m.raw.total, m.raw.x, m.raw.y);
    if (m.filtered)
      std::printf(" filtered_total=%.4f filtered_x=%.4f", m.filtered->total,
                  m.filtered->x);
    std::printf("\n");
  };
  line("train:", r.train);
  line("test: ", r.test);
  std::printf(
      "pca: D=%d eta=%.4f rank=%d  ridge: epsilon=%.3e\n",
      r.model.settings.pca_dim,
      r.eta_curve[r.model.settings.pca_dim - 1],
      r.model.pca.rank_available(), r.model.settings.epsilon);
  std::printf("dropped: unmatched_events=%d no_history=%d unmatched_labels=%d\n",
              r.dropped_unmatched, r.dropped_no_history, r.unmatched_labels);
}

// ---- simulate ----

struct SimulateArgs {
  std::string out;
  std::uint64_t seed = 42;
  std::vector<std::string> subjects;
  int traversals = 6;
  double noise = -1.0;  // < 0: relative default (1% of median peak)
  bool noise_given = false;
  std::string format = "bin";
};

void run_simulate(const SimulateArgs& a) {
  if (a.traversals < 1) throw ConfigError("need at least one traversal");
  const std::vector<std::string> subjects =
      a.subjects.empty() ? std::vector<std::string>{"S1", "S2"} : a.subjects;
  if (a.noise_given && a.noise < 0.0)
    throw ConfigError("noise std must be >= 0");
  const WaveformFormat format =
      a.format == "csv" ? WaveformFormat::csv : WaveformFormat::bin;

  const FloorConfig floor_config;
  const FloorModel floor = build_floor(floor_config);
  const SensorLayout layout =
      default_corridor_layout(derive_seed(a.seed, "sensors"), floor_config);

  struct Item {
    std::string subject;
    TraversalPlan plan;
    GaitProfile gait;
    std::uint64_t seed;
  };
  std::vector<Item> items;
  for (const std::string& subject : subjects) {
    const GaitProfile gait = default_gait(subject);
    for (int t = 1; t <= a.traversals; ++t) {
      const TraversalPlan plan = default_plan(subject, t, floor_config);
      items.push_back({subject, plan, gait,
                       derive_seed(a.seed, subject + "/" + plan.traversal)});
    }
  }

  double noise_std = a.noise;
  if (!a.noise_given) {
    // Clean pass to pin the noise floor at 1% of the median traversal peak.
    std::vector<double> peaks;
    for (const Item& item : items) {
      const LabeledDataset ds = simulate_traversal(floor, item.plan, item.gait,
                                                   layout, 0.0, item.seed);
      peaks.push_back(ds.record.samples.cwiseAbs().maxCoeff());
    }
    std::sort(peaks.begin(), peaks.end());
    const std::size_t h = peaks.size() / 2;
    const double median = peaks.size() % 2 == 1
                              ? peaks[h]
                              : 0.5 * (peaks[h - 1] + peaks[h]);
    noise_std = 0.01 * median;
  }

  for (const Item& item : items) {
    const LabeledDataset ds = simulate_traversal(floor, item.plan, item.gait,
                                                 layout, noise_std, item.seed);
    const fs::path dir =
        fs::path(a.out) / (item.subject + "_" + item.plan.traversal);
    const fs::path manifest = save_dataset(ds, dir, format);
    std::printf("%s\n", manifest.string().c_str());
  }
}

// ---- detect / featurize / predict ----

struct DetectArgs {
  std::string manifest;
  std::string out;
  DetectionConfig detection;
  std::string mode = "offline";
};

void attach_detection_flags(CLI::App* cmd, DetectArgs& a) {
  cmd->add_option("--smooth", a.detection.smooth_window_samples,
                  "smoothing window, samples (odd)");
  cmd->add_option("--alpha", a.detection.threshold_fraction,
                  "threshold as a fraction of the max");
  cmd->add_option("--min-sep", a.detection.min_separation_s,
                  "minimum event separation, s");
  cmd->add_option("--detect-mode", a.mode, "offline or streaming")
      ->check(CLI::IsMember({"offline", "streaming"}));
  cmd->add_option("--horizon", a.detection.streaming_max_horizon_s,
                  "streaming running-max horizon, s");
}

DetectionConfig resolve_detection(const DetectArgs& a) {
  DetectionConfig cfg = a.detection;
  cfg.mode =
      a.mode == "streaming" ? DetectionMode::streaming : DetectionMode::offline;
  return cfg;
}

void run_detect(const DetectArgs& a) {
  const LabeledDataset ds = load_dataset(a.manifest);
  const EventList events = detect_record(ds.record, resolve_detection(a));
  std::string csv = "s_k,t_s,peak\n";
  for (const Event& e : events)
    csv += std::to_string(e.sample) + "," +
           io::format_double(ds.record.time_at(e.sample)) + "," +
           io::format_double(e.peak) + "\n";
  emit(csv, a.out);
  if (!a.out.empty())
    std::printf("%zu events -> %s\n", events.size(), a.out.c_str());
}

struct FeaturizeArgs {
  DetectArgs detect;
  double t_w_s = 0.12;
  double match_window_s = 0.1;
  bool rms = true;
};

void run_featurize(const FeaturizeArgs& a) {
  if (a.detect.out.empty()) throw ConfigError("featurize needs --out");
  const LabeledDataset ds = load_dataset(a.detect.manifest);
  const WaveformRecord& record = ds.record;
  const EventList events = detect_record(record, resolve_detection(a.detect));
  const auto event_of_label =
      match_events_to_labels(record, events, ds.labels, a.match_window_s);
  const WindowConfig wc = WindowConfig::from(
      a.t_w_s, record.layout.sample_rate_hz, record.layout.sensor_count());

  std::vector<Eigen::VectorXd> rows;
  StateSet set;
  set.normalized = a.rms;
  int no_history = 0, unmatched_labels = 0;
  for (std::size_t li = 0; li < ds.labels.size(); ++li) {
    if (event_of_label[li] < 0) {
      ++unmatched_labels;
      continue;
    }
    const FootstepLabel& label = ds.labels[li];
    const Event& event = events[static_cast<std::size_t>(event_of_label[li])];
    const StepRef ref{label.subject, label.traversal, label.k};
    Eigen::MatrixXd window;
    try {
      window = extract_window(record, event.sample, wc, ref);
    } catch (const DataError&) {
      ++no_history;
      continue;
    }
    ReservoirState state = vectorize(window, ref);
    if (a.rms) state = rms_normalize(state);
    rows.push_back(std::move(state.values));
    set.refs.push_back(ref);
    set.times.push_back(record.time_at(event.sample));
    set.positions.conservativeResize(set.positions.rows() + 1, 2);
    set.positions.row(set.positions.rows() - 1) =
        Eigen::RowVector2d(label.x_m, label.y_m);
  }
  int dropped_events = static_cast<int>(events.size());
  for (const auto e : event_of_label)
    if (e >= 0) --dropped_events;

  if (rows.empty()) throw DataError("no labeled steps survived detection");
  set.states.resize(static_cast<Eigen::Index>(rows.size()),
                    rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    set.states.row(static_cast<Eigen::Index>(i)) = rows[i];

  save_states(set, a.detect.out);
  std::printf(
      "%zu states (d=%lld) -> %s  dropped: unmatched_events=%d "
      "no_history=%d unmatched_labels=%d\n",
      rows.size(), static_cast<long long>(set.states.cols()),
      a.detect.out.c_str(), dropped_events, no_history, unmatched_labels);
}

struct PredictArgs {
  std::string model;
  DetectArgs detect;
  bool kalman = false;
  KfConfig kf;
};

void run_predict(const PredictArgs& a) {
  const ModelBundle model = load_model(a.model);
  const LabeledDataset ds = load_dataset(a.detect.manifest);
  const WaveformRecord record =
      select_sensors(ds.record, model.settings.sensor_ids);
  if (record.layout.sample_rate_hz != model.settings.sample_rate_hz)
    throw DataError("sample rate differs from the model's training data");

  const EventList events = detect_record(record, resolve_detection(a.detect));
  const WindowConfig wc =
      WindowConfig::from(model.settings.t_w_s, record.layout.sample_rate_hz,
                         record.layout.sensor_count());

  std::vector<Eigen::Index> kept;
  std::vector<Eigen::Vector2d> raw;
  for (const Event& event : events) {
    Eigen::MatrixXd window;
    try {
      window = extract_window(record, event.sample, wc);
    } catch (const DataError&) {
      continue;  // not enough history at the very start of the record
    }
    ReservoirState state = vectorize(window);
    if (model.settings.rms_normalize) state = rms_normalize(state);
    const Eigen::VectorXd z =
        project(model.pca, state.values, model.settings.pca_dim);
    raw.push_back(predict(model.readout, z));
    kept.push_back(event.sample);
  }

  std::vector<Eigen::Vector2d> filtered;
  if (a.kalman) filtered = filter_track(raw, a.kf);

  std::string csv = a.kalman ? "s_k,t_s,xhat_m,yhat_m,xhat_kf_m,yhat_kf_m\n"
                             : "s_k,t_s,xhat_m,yhat_m\n";
  for (std::size_t i = 0; i < raw.size(); ++i) {
    csv += std::to_string(kept[i]) + "," +
           io::format_double(record.time_at(kept[i])) + "," +
           io::format_double(raw[i].x()) + "," + io::format_double(raw[i].y());
    if (a.kalman)
      csv += "," + io::format_double(filtered[i].x()) + "," +
             io::format_double(filtered[i].y());
    csv += "\n";
  }
  emit(csv, a.detect.out);
  if (!a.detect.out.empty())
    std::printf("%zu predictions -> %s\n", raw.size(), a.detect.out.c_str());
}

// ---- train / report / pipeline / pca-report / sweep ----

struct RunArgs {
  std::shared_ptr<ConfigArgs> cfg;
  std::string out;
  std::string model_out;
};

void run_train(const RunArgs& a) {
  const ExperimentConfig cfg = a.cfg->build();
  const ExperimentReport report = run_pipeline(cfg);
  save_model(report.model, a.model_out);
  std::printf("model -> %s\n", a.model_out.c_str());
  if (!a.out.empty()) {
    write_report(report, a.out);
    std::printf("report -> %s\n", a.out.c_str());
  }
  print_summary(report);
}

void run_report(const RunArgs& a) {
  const ExperimentConfig cfg = a.cfg->build();
  const ExperimentReport report = run_pipeline(cfg);
  write_report(report, a.out);
  std::printf("report -> %s\n", a.out.c_str());
  print_summary(report);
}

void run_full_pipeline(const RunArgs& a) {
  const ExperimentConfig cfg = a.cfg->build();
  const ExperimentReport report = run_pipeline(cfg);
  write_report(report, a.out);
  save_model(report.model, fs::path(a.out) / "model.json");
  std::printf("run directory -> %s\n", a.out.c_str());
  print_summary(report);
}

void run_pca_report(const RunArgs& a) {
  const ExperimentConfig cfg = a.cfg->build();
  const ExperimentReport report = run_pipeline(cfg);
  std::string csv = "D,eta\n";
  for (Eigen::Index i = 0; i < report.eta_curve.size(); ++i)
    csv += std::to_string(i + 1) + "," +
           io::format_double(report.eta_curve[i]) + "\n";
  emit(csv, a.out);
  if (!a.out.empty())
    std::printf("eta curve (rank %d) -> %s, chosen D=%d\n",
                report.model.pca.rank_available(), a.out.c_str(),
                report.model.settings.pca_dim);
}

struct SweepArgs {
  std::shared_ptr<ConfigArgs> cfg;
  std::string mode;
  std::vector<int> sizes;
  int repeats = 5;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
};

void run_sweep(const SweepArgs& a) {
  const ExperimentConfig cfg = a.cfg->build();
  const std::uint64_t seed = a.seed_given ? a.seed : cfg.seed;

  std::vector<LabeledDataset> datasets;
  if (cfg.manifests.empty())
    throw ConfigError("config lists no dataset manifests");
  for (const auto& m : cfg.manifests) datasets.push_back(load_dataset(m));

  std::vector<SweepRow> rows;
  if (a.mode == "training-size")
    rows = sweep_training_size(datasets, cfg, a.sizes, a.repeats, seed);
  else if (a.mode == "sensor-count")
    rows = sweep_sensor_count(datasets, cfg, a.sizes, a.repeats, seed);
  else
    throw ConfigError("sweep mode must be training-size or sensor-count");

  std::string csv =
      "size,repeats,mean_total,mean_x,mean_y,std_total,std_x,std_y\n";
  for (const SweepRow& row : rows)
    csv += std::to_string(row.size) + "," + std::to_string(row.repeats) + "," +
           io::format_double(row.mean.total) + "," +
           io::format_double(row.mean.x) + "," +
           io::format_double(row.mean.y) + "," +
           io::format_double(row.stddev.total) + "," +
           io::format_double(row.stddev.x) + "," +
           io::format_double(row.stddev.y) + "\n";
  emit(csv, a.out);
  if (!a.out.empty())
    std::printf("%zu sweep rows -> %s\n", rows.size(), a.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"floor-vibration footstep localization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vibroloc 0.1.0");

  auto sim = std::make_shared<SimulateArgs>();
  {
    CLI::App* cmd = app.add_subcommand(
        "simulate", "synthesize walking traversals on the modal floor");
    cmd->add_option("--out", sim->out, "output directory")->required();
    cmd->add_option("--seed", sim->seed, "campaign seed");
    cmd->add_option("--subjects", sim->subjects,
                    "subjects to simulate (default S1,S2)")
        ->delimiter(',');
    cmd->add_option("--traversals", sim->traversals,
                    "traversals per subject");
    CLI::Option* noise =
        cmd->add_option("--noise", sim->noise,
                        "absolute noise std (default: 1% of median peak)");
    cmd->add_option("--format", sim->format, "waveform format")
        ->check(CLI::IsMember({"csv", "bin"}));
    cmd->callback([sim, noise] {
      sim->noise_given = noise->count() > 0;
      run_simulate(*sim);
    });
  }

  auto det = std::make_shared<DetectArgs>();
  {
    CLI::App* cmd =
        app.add_subcommand("detect", "detect foot strikes in a dataset");
    cmd->add_option("--manifest", det->manifest, "dataset manifest")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", det->out, "events.csv path (default stdout)");
    attach_detection_flags(cmd, *det);
    cmd->callback([det] { run_detect(*det); });
  }

  auto feat = std::make_shared<FeaturizeArgs>();
  {
    CLI::App* cmd = app.add_subcommand(
        "featurize", "detect, window and vectorize labeled steps");
    cmd->add_option("--manifest", feat->detect.manifest, "dataset manifest")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", feat->detect.out, "states.bin path")->required();
    attach_detection_flags(cmd, feat->detect);
    cmd->add_option("--t-w", feat->t_w_s, "window length, s");
    cmd->add_option("--match-window", feat->match_window_s,
                    "event-to-label association radius, s");
    cmd->add_flag("--rms,!--no-rms", feat->rms, "RMS-normalize states");
    cmd->callback([feat] { run_featurize(*feat); });
  }

  auto pred = std::make_shared<PredictArgs>();
  {
    CLI::App* cmd = app.add_subcommand(
        "predict", "apply a saved model to a dataset's detected steps");
    cmd->add_option("--model", pred->model, "model.json path")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--manifest", pred->detect.manifest, "dataset manifest")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", pred->detect.out,
                    "predictions csv path (default stdout)");
    attach_detection_flags(cmd, pred->detect);
    cmd->add_flag("--kalman", pred->kalman, "smooth the track");
    cmd->add_option("--kf-q", pred->kf.q, "Kalman process noise q");
    cmd->add_option("--kf-r", pred->kf.r, "Kalman measurement noise r");
    cmd->callback([pred] { run_predict(*pred); });
  }

  auto train_args = std::make_shared<RunArgs>();
  {
    CLI::App* cmd = app.add_subcommand(
        "train", "fit PCA + ridge readout on the training selectors");
    train_args->cfg = attach_experiment_options(cmd);
    train_args->model_out = "model.json";
    cmd->add_option("--model-out", train_args->model_out, "model path");
    cmd->add_option("--report-dir", train_args->out,
                    "also write the evaluation artifacts here");
    cmd->callback([train_args] { run_train(*train_args); });
  }

  auto report_args = std::make_shared<RunArgs>();
  {
    CLI::App* cmd = app.add_subcommand(
        "report", "run the experiment and write evaluation artifacts");
    report_args->cfg = attach_experiment_options(cmd);
    cmd->add_option("--out", report_args->out, "run directory")->required();
    cmd->callback([report_args] { run_report(*report_args); });
  }

  auto pipe_args = std::make_shared<RunArgs>();
  {
    CLI::App* cmd = app.add_subcommand(
        "pipeline", "end to end: train, evaluate, write run dir + model");
    pipe_args->cfg = attach_experiment_options(cmd);
    cmd->add_option("--out", pipe_args->out, "run directory")->required();
    cmd->callback([pipe_args] { run_full_pipeline(*pipe_args); });
  }

  auto pca_args = std::make_shared<RunArgs>();
  {
    CLI::App* cmd = app.add_subcommand(
        "pca-report", "emit the retained-variance curve eta(D)");
    pca_args->cfg = attach_experiment_options(cmd);
    cmd->add_option("--out", pca_args->out,
                    "eta_curve.csv path (default stdout)");
    cmd->callback([pca_args] { run_pca_report(*pca_args); });
  }

  auto sweep_args = std::make_shared<SweepArgs>();
  {
    CLI::App* cmd = app.add_subcommand(
        "sweep", "training-size or sensor-count sweep over random subsets");
    sweep_args->cfg = attach_experiment_options(cmd);
    cmd->add_option("--mode", sweep_args->mode, "training-size or sensor-count")
        ->required()
        ->check(CLI::IsMember({"training-size", "sensor-count"}));
    cmd->add_option("--sizes", sweep_args->sizes,
                    "subset sizes, comma separated")
        ->required()
        ->delimiter(',');
    cmd->add_option("--repeats", sweep_args->repeats, "repeats per size");
    CLI::Option* seed_opt =
        cmd->add_option("--sweep-seed", sweep_args->seed,
                        "subset-draw seed (default: config seed)");
    cmd->add_option("--out", sweep_args->out, "csv path (default stdout)");
    cmd->callback([sweep_args, seed_opt] {
      sweep_args->seed_given = seed_opt->count() > 0;
      run_sweep(*sweep_args);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
