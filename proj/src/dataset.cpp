#include "vibroloc/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "vibroloc/errors.hpp"
#include "vibroloc/io_util.hpp"

#include "json.hpp"

namespace vibroloc {

namespace fs = std::filesystem;
using nlohmann::json;

void SensorLayout::validate() const {
  if (sensors.empty()) throw DataError("layout: needs at least one sensor");
  if (!(sample_rate_hz > 0.0))
    throw DataError("layout: sample_rate_hz must be positive");
  std::set<std::string> ids;
  for (const auto& s : sensors) {
    if (s.id.empty()) throw DataError("layout: empty sensor id");
    if (!ids.insert(s.id).second)
      throw DataError("layout: duplicate sensor id '" + s.id + "'");
    if (!std::isfinite(s.x_m) || !std::isfinite(s.y_m))
      throw DataError("layout: non-finite position for sensor '" + s.id + "'");
  }
}

int SensorLayout::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < sensors.size(); ++i)
    if (sensors[i].id == id) return static_cast<int>(i);
  return -1;
}

void WaveformRecord::validate() const {
  layout.validate();
  if (samples.cols() != layout.sensor_count())
    throw DataError("channel mismatch: record has " +
                    std::to_string(samples.cols()) + " columns, layout has " +
                    std::to_string(layout.sensor_count()) + " sensors");
  if (!samples.allFinite()) throw DataError("non-finite sample in record");
}

void LabeledDataset::validate() const {
  record.validate();
  const double t0 = record.start_time_s;
  const double t1 = t0 + record.duration_s();
  std::set<std::tuple<std::string, std::string, int>> seen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& lab = labels[i];
    if (!std::isfinite(lab.x_m) || !std::isfinite(lab.y_m) ||
        !std::isfinite(lab.t_s))
      throw DataError("label " + std::to_string(i) + ": non-finite value");
    if (lab.t_s < t0 || lab.t_s > t1)
      throw DataError("label " + std::to_string(i) +
                      ": timestamp outside record duration");
    if (i > 0 && lab.t_s < labels[i - 1].t_s)
      throw DataError("unsorted labels at index " + std::to_string(i));
    if (!seen.insert({lab.subject, lab.traversal, lab.k}).second)
      throw DataError("duplicate label (" + lab.subject + ", " +
                      lab.traversal + ", " + std::to_string(lab.k) + ")");
  }
}

namespace {

constexpr char kWaveMagic[8] = {'V', 'L', 'W', 'A', 'V', 'E', '0', '1'};
constexpr std::uint32_t kWaveVersion = 1;
constexpr int kManifestVersion = 1;

void check_id_token(const std::string& s, const char* what) {
  if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos)
    throw DataError(std::string(what) + " contains a separator: '" + s + "'");
}

SensorLayout load_layout_csv(const fs::path& path, double sample_rate_hz) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file: " + path.string());
  SensorLayout layout;
  layout.sample_rate_hz = sample_rate_hz;
  std::string line;
  if (!std::getline(in, line) || io::split_csv_line(line) !=
      std::vector<std::string>{"id", "x_m", "y_m"})
    throw DataError(path.string() + ": expected header 'id,x_m,y_m'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 3) throw DataError(path.string() + ": bad row '" + line + "'");
    layout.sensors.push_back({f[0], io::parse_double(f[1], "layout x"),
                              io::parse_double(f[2], "layout y")});
  }
  layout.validate();
  return layout;
}

void save_layout_csv(const SensorLayout& layout, const fs::path& path) {
  std::ostringstream out;
  out << "id,x_m,y_m\n";
  for (const auto& s : layout.sensors) {
    check_id_token(s.id, "sensor id");
    out << s.id << ',' << io::format_double(s.x_m) << ','
        << io::format_double(s.y_m) << '\n';
  }
  io::write_file(path.string(), out.str());
}

std::vector<FootstepLabel> load_labels_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file: " + path.string());
  std::vector<FootstepLabel> labels;
  std::string line;
  if (!std::getline(in, line) ||
      io::split_csv_line(line) !=
          std::vector<std::string>{"k", "t_s", "x_m", "y_m", "subject", "traversal"})
    throw DataError(path.string() +
                    ": expected header 'k,t_s,x_m,y_m,subject,traversal'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 6) throw DataError(path.string() + ": bad row '" + line + "'");
    FootstepLabel lab;
    lab.k = static_cast<int>(io::parse_long(f[0], "label k"));
    lab.t_s = io::parse_double(f[1], "label t_s");
    lab.x_m = io::parse_double(f[2], "label x_m");
    lab.y_m = io::parse_double(f[3], "label y_m");
    lab.subject = f[4];
    lab.traversal = f[5];
    labels.push_back(std::move(lab));
  }
  return labels;
}

void save_labels_csv(const std::vector<FootstepLabel>& labels,
                     const fs::path& path) {
  std::ostringstream out;
  out << "k,t_s,x_m,y_m,subject,traversal\n";
  for (const auto& lab : labels) {
    check_id_token(lab.subject, "subject");
    check_id_token(lab.traversal, "traversal");
    out << lab.k << ',' << io::format_double(lab.t_s) << ','
        << io::format_double(lab.x_m) << ',' << io::format_double(lab.y_m)
        << ',' << lab.subject << ',' << lab.traversal << '\n';
  }
  io::write_file(path.string(), out.str());
}

Eigen::MatrixXd load_waveform_csv(const fs::path& path, int n_sensors,
                                  double sample_rate_hz, double* start_time_s) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file: " + path.string());
  std::vector<double> values;
  std::string line;
  Eigen::Index rows = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (static_cast<int>(f.size()) != n_sensors + 1)
      throw DataError("channel mismatch: " + path.string() + " row has " +
                      std::to_string(f.size() - 1) + " channels, layout has " +
                      std::to_string(n_sensors) + " sensors");
    const double t = io::parse_double(f[0], "waveform time");
    if (first) {
      *start_time_s = t;
      first = false;
    }
    for (int j = 0; j < n_sensors; ++j) {
      const double v = io::parse_double(f[j + 1], "waveform sample");
      if (!std::isfinite(v))
        throw DataError("non-finite sample at row " + std::to_string(rows) +
                        " of " + path.string());
      values.push_back(v);
    }
    ++rows;
  }
  (void)sample_rate_hz;
  Eigen::MatrixXd m(rows, n_sensors);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (int j = 0; j < n_sensors; ++j) m(i, j) = values[i * n_sensors + j];
  return m;
}

void save_waveform_csv(const WaveformRecord& rec, const fs::path& path) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < rec.samples.rows(); ++i) {
    out << io::format_double(rec.time_at(i));
    for (Eigen::Index j = 0; j < rec.samples.cols(); ++j)
      out << ',' << io::format_double(rec.samples(i, j));
    out << '\n';
  }
  io::write_file(path.string(), out.str());
}

// Little-endian binary block: magic, version, N_s, T, f_s, start_time, then
// row-major f64 samples.
void save_waveform_bin(const WaveformRecord& rec, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out.write(kWaveMagic, sizeof(kWaveMagic));
  const std::uint32_t version = kWaveVersion;
  const std::uint32_t n_sensors = static_cast<std::uint32_t>(rec.samples.cols());
  const std::uint64_t n_samples = static_cast<std::uint64_t>(rec.samples.rows());
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&n_sensors), sizeof(n_sensors));
  out.write(reinterpret_cast<const char*>(&n_samples), sizeof(n_samples));
  out.write(reinterpret_cast<const char*>(&rec.layout.sample_rate_hz), sizeof(double));
  out.write(reinterpret_cast<const char*>(&rec.start_time_s), sizeof(double));
  std::vector<double> row(rec.samples.cols());
  for (Eigen::Index i = 0; i < rec.samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < rec.samples.cols(); ++j) row[j] = rec.samples(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Eigen::MatrixXd load_waveform_bin(const fs::path& path, int n_sensors,
                                  double sample_rate_hz, double* start_time_s) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file: " + path.string());
  char magic[8];
  std::uint32_t version = 0, file_sensors = 0;
  std::uint64_t n_samples = 0;
  double fs = 0.0, t0 = 0.0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&file_sensors), sizeof(file_sensors));
  in.read(reinterpret_cast<char*>(&n_samples), sizeof(n_samples));
  in.read(reinterpret_cast<char*>(&fs), sizeof(fs));
  in.read(reinterpret_cast<char*>(&t0), sizeof(t0));
  if (!in || std::memcmp(magic, kWaveMagic, sizeof(magic)) != 0)
    throw DataError("corrupt waveform file: " + path.string());
  if (version != kWaveVersion)
    throw DataError("waveform version mismatch in " + path.string());
  if (static_cast<int>(file_sensors) != n_sensors)
    throw DataError("channel mismatch: " + path.string() + " has " +
                    std::to_string(file_sensors) + " channels, layout has " +
                    std::to_string(n_sensors) + " sensors");
  if (fs != sample_rate_hz)
    throw DataError("sample rate mismatch between manifest and " + path.string());
  *start_time_s = t0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n_samples), n_sensors);
  std::vector<double> row(n_sensors);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw DataError("corrupt waveform file (truncated): " + path.string());
    for (int j = 0; j < n_sensors; ++j) {
      if (!std::isfinite(row[j]))
        throw DataError("non-finite sample at row " + std::to_string(i) +
                        " of " + path.string());
      m(static_cast<Eigen::Index>(i), j) = row[j];
    }
  }
  return m;
}

}  // namespace

LabeledDataset load_dataset(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path))
    throw DataError("missing file: " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(io::read_file(manifest_path.string()));
  } catch (const json::exception& e) {
    throw DataError("bad manifest " + manifest_path.string() + ": " + e.what());
  }
  for (const char* key : {"layout", "waveform", "labels", "format", "version",
                          "sample_rate_hz"})
    if (!manifest.contains(key))
      throw DataError("manifest missing key '" + std::string(key) + "'");
  if (manifest["version"].get<int>() != kManifestVersion)
    throw DataError("manifest version mismatch: expected " +
                    std::to_string(kManifestVersion));
  const std::string format = manifest["format"].get<std::string>();
  if (format != "csv" && format != "bin")
    throw DataError("manifest format must be 'csv' or 'bin'");

  const fs::path dir = manifest_path.parent_path();
  LabeledDataset ds;
  ds.record.layout = load_layout_csv(dir / manifest["layout"].get<std::string>(),
                                     manifest["sample_rate_hz"].get<double>());
  const fs::path wave_path = dir / manifest["waveform"].get<std::string>();
  const int n_sensors = ds.record.layout.sensor_count();
  const double fs_hz = ds.record.layout.sample_rate_hz;
  if (format == "csv")
    ds.record.samples = load_waveform_csv(wave_path, n_sensors, fs_hz,
                                          &ds.record.start_time_s);
  else
    ds.record.samples = load_waveform_bin(wave_path, n_sensors, fs_hz,
                                          &ds.record.start_time_s);
  ds.labels = load_labels_csv(dir / manifest["labels"].get<std::string>());
  ds.validate();
  return ds;
}

fs::path save_dataset(const LabeledDataset& ds, const fs::path& dir,
                      WaveformFormat format) {
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    throw DataError("cannot create directory: " + dir.string());

  const bool csv = format == WaveformFormat::csv;
  const std::string wave_name = csv ? "waveform.csv" : "waveform.bin";
  save_layout_csv(ds.record.layout, dir / "layout.csv");
  save_labels_csv(ds.labels, dir / "labels.csv");
  if (csv)
    save_waveform_csv(ds.record, dir / wave_name);
  else
    save_waveform_bin(ds.record, dir / wave_name);

  json manifest;
  manifest["version"] = kManifestVersion;
  manifest["format"] = csv ? "csv" : "bin";
  manifest["layout"] = "layout.csv";
  manifest["waveform"] = wave_name;
  manifest["labels"] = "labels.csv";
  manifest["sample_rate_hz"] = ds.record.layout.sample_rate_hz;
  const fs::path manifest_path = dir / "manifest.json";
  io::write_file(manifest_path.string(), manifest.dump(2) + "\n");
  return manifest_path;
}

WaveformRecord select_sensors(const WaveformRecord& record,
                              const std::vector<std::string>& ids) {
  if (ids.empty()) throw DataError("sensor selection is empty");
  std::vector<int> cols;
  for (const auto& id : ids) {
    const int idx = record.layout.index_of(id);
    if (idx < 0) throw DataError("unknown sensor id '" + id + "'");
    cols.push_back(idx);
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());

  WaveformRecord out;
  out.start_time_s = record.start_time_s;
  out.layout.sample_rate_hz = record.layout.sample_rate_hz;
  out.samples.resize(record.samples.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.layout.sensors.push_back(record.layout.sensors[cols[j]]);
    out.samples.col(static_cast<Eigen::Index>(j)) = record.samples.col(cols[j]);
  }
  return out;
}

}  // namespace vibroloc
