#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "vibroloc/readout.hpp"
#include "vibroloc/subspace.hpp"

namespace vibroloc {

// Snapshot of every choice that affects what a trained model computes, stored
// alongside the matrices so a bundle is reproducible on its own.
struct PipelineSettings {
  double t_w_s = 0.12;
  int pca_dim = 0;                      // D actually used by the readout
  std::optional<double> eta_target;     // set when D was chosen from eta
  double epsilon = 0.0;
  bool rms_normalize = true;
  bool centering = false;
  bool penalize_bias = true;
  std::string vectorization = "column_major";
  double sample_rate_hz = 1024.0;
  std::vector<std::string> sensor_ids;
};

struct ModelBundle {
  PcaModel pca;
  ReadoutModel readout;
  PipelineSettings settings;

  // readout input dimension must equal settings.pca_dim, which must not
  // exceed the stored directions. Throws DataError otherwise.
  void validate() const;
};

// Single JSON document with base64-encoded row-major f64 matrices. Round
// trips preserve every matrix bit-exactly. Loading checks the format version
// and the pca/readout dimension consistency; truncated or malformed files
// raise DataError("corrupt model ...").
void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace vibroloc
