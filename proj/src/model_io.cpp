#include "vibroloc/model_io.hpp"

#include <json.hpp>

#include "vibroloc/errors.hpp"
#include "vibroloc/io_util.hpp"

namespace vibroloc {

namespace {
constexpr int kModelVersion = 1;

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = io::encode_matrix(m);
  return j;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& context) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") ||
      !j.contains("data"))
    throw DataError("corrupt model: malformed matrix block for " + context);
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows < 0 || cols < 0)
    throw DataError("corrupt model: negative matrix shape for " + context);
  return io::decode_matrix(j.at("data").get<std::string>(), rows, cols,
                           context);
}
}  // namespace

void ModelBundle::validate() const {
  readout.validate();
  if (settings.pca_dim < 1)
    throw DataError("model bundle: pca_dim must be >= 1");
  if (settings.pca_dim > pca.rank_available())
    throw DataError("model bundle: pca_dim exceeds stored directions");
  if (readout.input_dim != settings.pca_dim)
    throw DataError("model bundle: readout dimension disagrees with pca_dim");
  if (pca.input_dim != pca.directions.rows())
    throw DataError("model bundle: pca input_dim disagrees with directions");
  if (pca.centering && pca.mean.size() != pca.input_dim)
    throw DataError("model bundle: centering mean has wrong length");
  if (settings.vectorization != "column_major")
    throw DataError("model bundle: unknown vectorization scheme");
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
  bundle.validate();
  json j;
  j["format"] = "vibroloc-model";
  j["version"] = kModelVersion;

  json settings;
  settings["t_w_s"] = bundle.settings.t_w_s;
  settings["pca_dim"] = bundle.settings.pca_dim;
  if (bundle.settings.eta_target)
    settings["eta_target"] = *bundle.settings.eta_target;
  settings["epsilon"] = bundle.settings.epsilon;
  settings["rms_normalize"] = bundle.settings.rms_normalize;
  settings["centering"] = bundle.settings.centering;
  settings["penalize_bias"] = bundle.settings.penalize_bias;
  settings["vectorization"] = bundle.settings.vectorization;
  settings["sample_rate_hz"] = bundle.settings.sample_rate_hz;
  settings["sensor_ids"] = bundle.settings.sensor_ids;
  j["settings"] = settings;

  json pca;
  pca["directions"] = matrix_to_json(bundle.pca.directions);
  pca["eigenvalues"] =
      matrix_to_json(Eigen::MatrixXd(bundle.pca.eigenvalues));
  pca["centering"] = bundle.pca.centering;
  if (bundle.pca.centering)
    pca["mean"] = matrix_to_json(Eigen::MatrixXd(bundle.pca.mean));
  pca["input_dim"] = bundle.pca.input_dim;
  j["pca"] = pca;

  json readout;
  readout["weights"] = matrix_to_json(bundle.readout.weights);
  readout["epsilon"] = bundle.readout.epsilon;
  j["readout"] = readout;

  io::write_file(path.string(), j.dump(2) + "\n");
}

ModelBundle load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path.string()));
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt model: ") + e.what());
  }

  try {
    if (j.value("format", "") != "vibroloc-model")
      throw DataError("corrupt model: unrecognized format tag");
    if (j.at("version").get<int>() != kModelVersion)
      throw DataError("corrupt model: unsupported version");

    ModelBundle bundle;
    const json& settings = j.at("settings");
    bundle.settings.t_w_s = settings.at("t_w_s").get<double>();
    bundle.settings.pca_dim = settings.at("pca_dim").get<int>();
    if (settings.contains("eta_target"))
      bundle.settings.eta_target = settings.at("eta_target").get<double>();
    bundle.settings.epsilon = settings.at("epsilon").get<double>();
    bundle.settings.rms_normalize = settings.at("rms_normalize").get<bool>();
    bundle.settings.centering = settings.at("centering").get<bool>();
    bundle.settings.penalize_bias = settings.at("penalize_bias").get<bool>();
    bundle.settings.vectorization =
        settings.at("vectorization").get<std::string>();
    bundle.settings.sample_rate_hz =
        settings.at("sample_rate_hz").get<double>();
    bundle.settings.sensor_ids =
        settings.at("sensor_ids").get<std::vector<std::string>>();

    const json& pca = j.at("pca");
    bundle.pca.directions = matrix_from_json(pca.at("directions"), "pca");
    bundle.pca.eigenvalues =
        matrix_from_json(pca.at("eigenvalues"), "eigenvalues");
    bundle.pca.centering = pca.at("centering").get<bool>();
    if (bundle.pca.centering)
      bundle.pca.mean = matrix_from_json(pca.at("mean"), "mean");
    bundle.pca.input_dim = pca.at("input_dim").get<int>();

    const json& readout = j.at("readout");
    bundle.readout.weights = matrix_from_json(readout.at("weights"), "readout");
    bundle.readout.epsilon = readout.at("epsilon").get<double>();
    bundle.readout.input_dim =
        static_cast<int>(bundle.readout.weights.rows()) - 1;

    bundle.validate();
    return bundle;
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt model: ") + e.what());
  }
}

}  // namespace vibroloc
