#include "vibroloc/features.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "vibroloc/errors.hpp"

namespace vibroloc {

WindowConfig WindowConfig::from(double t_w_s, double sample_rate_hz,
                                int sensor_count) {
  if (!(t_w_s > 0.0)) throw ConfigError("window length must be positive");
  if (!(sample_rate_hz > 0.0)) throw ConfigError("sample rate must be positive");
  if (sensor_count < 1) throw ConfigError("need at least one sensor");
  WindowConfig cfg;
  cfg.t_w_s = t_w_s;
  cfg.samples = static_cast<int>(std::floor(t_w_s * sample_rate_hz));
  if (cfg.samples < 1)
    throw ConfigError("window shorter than one sample at this rate");
  cfg.dim = cfg.samples * sensor_count;
  return cfg;
}

namespace {
std::string step_name(const StepRef& ref) {
  if (ref.subject.empty() && ref.traversal.empty())
    return "step k=" + std::to_string(ref.k);
  return "step (" + ref.subject + ", " + ref.traversal + ", k=" +
         std::to_string(ref.k) + ")";
}
}  // namespace

Eigen::MatrixXd extract_window(const WaveformRecord& record, Eigen::Index s_k,
                               const WindowConfig& cfg, const StepRef& ref) {
  const Eigen::Index l = cfg.samples;
  if (s_k < l - 1)
    throw DataError("insufficient history for " + step_name(ref) + ": s_k=" +
                    std::to_string(s_k) + " needs " + std::to_string(l) +
                    " samples");
  if (s_k >= record.samples.rows())
    throw DataError("sample index out of range for " + step_name(ref));
  return record.samples.middleRows(s_k - l + 1, l);
}

ReservoirState vectorize(const Eigen::MatrixXd& window, const StepRef& ref) {
  ReservoirState state;
  state.ref = ref;
  state.normalized = false;
  // Column-major stacking: sensor 1's samples, then sensor 2's, ...
  state.values.resize(window.size());
  Eigen::Index pos = 0;
  for (Eigen::Index j = 0; j < window.cols(); ++j) {
    state.values.segment(pos, window.rows()) = window.col(j);
    pos += window.rows();
  }
  return state;
}

ReservoirState rms_normalize(const ReservoirState& raw) {
  const double r = rms(raw.values);
  if (!(r > 0.0))
    throw DataError("degenerate window for " + step_name(raw.ref) +
                    ": all-zero state");
  ReservoirState out;
  out.ref = raw.ref;
  out.normalized = true;
  out.values = raw.values / r;
  return out;
}

namespace {

constexpr char kStateMagic[8] = {'V', 'L', 'S', 'T', 'A', 'T', 'E', '1'};
constexpr std::uint32_t kStateVersion = 1;

void write_string(std::ofstream& out, const std::string& s) {
  const auto len = static_cast<std::uint32_t>(s.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in, const std::string& path) {
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 20))
    throw DataError("corrupt state file: " + path);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("corrupt state file (truncated): " + path);
  return s;
}

}  // namespace

void save_states(const StateSet& set, const std::filesystem::path& path) {
  const auto n = set.states.rows();
  const auto d = set.states.cols();
  if (static_cast<Eigen::Index>(set.refs.size()) != n ||
      static_cast<Eigen::Index>(set.times.size()) != n ||
      set.positions.rows() != n || set.positions.cols() != 2)
    throw DataError("state set fields disagree on row count");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out.write(kStateMagic, sizeof(kStateMagic));
  const std::uint32_t version = kStateVersion;
  const std::uint8_t normalized = set.normalized ? 1 : 0;
  const auto dim = static_cast<std::uint32_t>(d);
  const auto rows = static_cast<std::uint64_t>(n);
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&normalized), sizeof(normalized));
  out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));

  std::vector<double> row(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    write_string(out, set.refs[static_cast<std::size_t>(i)].subject);
    write_string(out, set.refs[static_cast<std::size_t>(i)].traversal);
    const std::int32_t k = set.refs[static_cast<std::size_t>(i)].k;
    out.write(reinterpret_cast<const char*>(&k), sizeof(k));
    const double t = set.times[static_cast<std::size_t>(i)];
    out.write(reinterpret_cast<const char*>(&t), sizeof(t));
    const double x = set.positions(i, 0), y = set.positions(i, 1);
    out.write(reinterpret_cast<const char*>(&x), sizeof(x));
    out.write(reinterpret_cast<const char*>(&y), sizeof(y));
    for (Eigen::Index j = 0; j < d; ++j)
      row[static_cast<std::size_t>(j)] = set.states(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

StateSet load_states(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file: " + path.string());
  char magic[8];
  std::uint32_t version = 0, dim = 0;
  std::uint8_t normalized = 0;
  std::uint64_t rows = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&normalized), sizeof(normalized));
  in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  if (!in || std::memcmp(magic, kStateMagic, sizeof(magic)) != 0)
    throw DataError("corrupt state file: " + path.string());
  if (version != kStateVersion)
    throw DataError("state file version mismatch in " + path.string());

  StateSet set;
  set.normalized = normalized != 0;
  set.states.resize(static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(dim));
  set.positions.resize(static_cast<Eigen::Index>(rows), 2);
  set.refs.resize(rows);
  set.times.resize(rows);

  std::vector<double> row(dim);
  for (std::uint64_t i = 0; i < rows; ++i) {
    StepRef& ref = set.refs[i];
    ref.subject = read_string(in, path.string());
    ref.traversal = read_string(in, path.string());
    std::int32_t k = 0;
    double t = 0, x = 0, y = 0;
    in.read(reinterpret_cast<char*>(&k), sizeof(k));
    in.read(reinterpret_cast<char*>(&t), sizeof(t));
    in.read(reinterpret_cast<char*>(&x), sizeof(x));
    in.read(reinterpret_cast<char*>(&y), sizeof(y));
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in)
      throw DataError("corrupt state file (truncated): " + path.string());
    ref.k = k;
    set.times[i] = t;
    set.positions(static_cast<Eigen::Index>(i), 0) = x;
    set.positions(static_cast<Eigen::Index>(i), 1) = y;
    for (std::uint32_t j = 0; j < dim; ++j)
      set.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          row[j];
  }
  return set;
}

}  // namespace vibroloc
