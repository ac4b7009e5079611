#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vibroloc/dataset.hpp"
#include "vibroloc/detect.hpp"
#include "vibroloc/errors.hpp"
#include "vibroloc/features.hpp"
#include "vibroloc/pipeline.hpp"
#include "vibroloc/readout.hpp"
#include "vibroloc/subspace.hpp"
#include "vibroloc/synth.hpp"
#include "vibroloc/tracking.hpp"

namespace py = pybind11;
using namespace vibroloc;

namespace {

DetectionConfig make_detection(int smooth, double alpha, double min_sep,
                               const std::string& mode, double horizon) {
  DetectionConfig cfg;
  cfg.smooth_window_samples = smooth;
  cfg.threshold_fraction = alpha;
  cfg.min_separation_s = min_sep;
  cfg.streaming_max_horizon_s = horizon;
  if (mode == "offline")
    cfg.mode = DetectionMode::offline;
  else if (mode == "streaming")
    cfg.mode = DetectionMode::streaming;
  else
    throw ConfigError("unknown detection mode: " + mode);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "floor-vibration footstep localization core";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericError>(m, "NumericError");

  m.def(
      "simulate_campaign",
      [](const std::string& out_dir, std::uint64_t seed,
         const std::string& format) {
        const Campaign campaign = default_campaign(seed);
        const WaveformFormat wf =
            format == "csv" ? WaveformFormat::csv : WaveformFormat::bin;
        std::vector<std::string> manifests;
        for (const LabeledDataset& ds : campaign.datasets) {
          const FootstepLabel& first = ds.labels.front();
          const std::filesystem::path dir =
              std::filesystem::path(out_dir) /
              (first.subject + "_" + first.traversal);
          manifests.push_back(save_dataset(ds, dir, wf).string());
        }
        return manifests;
      },
      py::arg("out_dir"), py::arg("seed") = 42, py::arg("format") = "bin",
      "Write the default two-subject synthetic campaign; returns manifest "
      "paths.");

  m.def(
      "detect_events",
      [](const std::string& manifest, int smooth, double alpha, double min_sep,
         const std::string& mode, double horizon) {
        const LabeledDataset ds = load_dataset(manifest);
        const EventList events = detect_record(
            ds.record, make_detection(smooth, alpha, min_sep, mode, horizon));
        Eigen::MatrixXd out(static_cast<Eigen::Index>(events.size()), 3);
        for (std::size_t i = 0; i < events.size(); ++i) {
          out(static_cast<Eigen::Index>(i), 0) =
              static_cast<double>(events[i].sample);
          out(static_cast<Eigen::Index>(i), 1) =
              ds.record.time_at(events[i].sample);
          out(static_cast<Eigen::Index>(i), 2) = events[i].peak;
        }
        return out;
      },
      py::arg("manifest"), py::arg("smooth") = 31, py::arg("alpha") = 0.2,
      py::arg("min_sep") = 0.2, py::arg("mode") = "offline",
      py::arg("horizon") = 5.0,
      "Detect foot strikes; rows are (sample, time_s, peak).");

  m.def(
      "rms_normalize",
      [](const Eigen::VectorXd& values) {
        ReservoirState state;
        state.values = values;
        return rms_normalize(state).values;
      },
      py::arg("values"), "Scale a state vector to unit RMS.");

  m.def(
      "fit_pca",
      [](const Eigen::MatrixXd& states, bool centering) {
        const PcaModel model = fit_pca(states, centering);
        return py::make_tuple(model.directions, model.eigenvalues);
      },
      py::arg("states"), py::arg("centering") = false,
      "Principal directions (d x r) and eigenvalues of row states.");

  m.def(
      "train_ridge",
      [](const Eigen::MatrixXd& projected, const Eigen::MatrixXd& positions,
         std::optional<double> epsilon, bool penalize_bias) {
        const TrainingSet ts = assemble_training(projected, positions);
        const double eps =
            epsilon ? *epsilon : default_ridge_epsilon(ts.design);
        return train_ridge(ts, eps, penalize_bias).weights;
      },
      py::arg("projected"), py::arg("positions"),
      py::arg("epsilon") = std::nullopt, py::arg("penalize_bias") = true,
      "Closed-form ridge readout; returns the (D+1) x 2 weight matrix "
      "(last row is the bias).");

  m.def(
      "kalman_filter",
      [](const Eigen::MatrixXd& measurements, double q, double r) {
        if (measurements.cols() != 2)
          throw DataError("measurements must be N x 2");
        KfConfig cfg;
        cfg.q = q;
        cfg.r = r;
        std::vector<Eigen::Vector2d> input;
        input.reserve(static_cast<std::size_t>(measurements.rows()));
        for (Eigen::Index i = 0; i < measurements.rows(); ++i)
          input.emplace_back(measurements(i, 0), measurements(i, 1));
        const auto filtered = filter_track(input, cfg);
        Eigen::MatrixXd out(measurements.rows(), 2);
        for (std::size_t i = 0; i < filtered.size(); ++i)
          out.row(static_cast<Eigen::Index>(i)) = filtered[i].transpose();
        return out;
      },
      py::arg("measurements"), py::arg("q") = 0.05, py::arg("r") = 0.25,
      "Constant-velocity smoothing of an N x 2 position track.");

  m.def(
      "run_experiment",
      [](const std::string& config, std::optional<std::string> out_dir) {
        const ExperimentConfig cfg = config_from_json(config);
        const ExperimentReport report = run_pipeline(cfg);
        if (out_dir) write_report(report, *out_dir);
        return metrics_json(report);
      },
      py::arg("config"), py::arg("out_dir") = std::nullopt,
      "Run the full pipeline from a config JSON string; returns metrics "
      "JSON (and writes the run directory when out_dir is given).");

  m.def(
      "load_states",
      [](const std::string& path) {
        const StateSet set = load_states(path);
        py::list refs;
        for (std::size_t i = 0; i < set.refs.size(); ++i)
          refs.append(py::make_tuple(set.refs[i].subject,
                                     set.refs[i].traversal, set.refs[i].k));
        return py::make_tuple(set.states, refs, set.positions,
                              set.normalized);
      },
      py::arg("path"),
      "Read a states.bin file; returns (states, refs, positions, "
      "normalized).");
}
