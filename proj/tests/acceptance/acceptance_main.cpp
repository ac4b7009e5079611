// Acceptance gates for the localization pipeline. Each numbered criterion
// prints exactly one PASS/FAIL line; the process exits nonzero if any gate
// fails. Every oracle here is computed independently of the library code it
// checks (explicit inverses, explicit eigendecompositions, hand-rolled
// filter arithmetic), and every randomized check is seeded.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vibroloc/detect.hpp"
#include "vibroloc/eval.hpp"
#include "vibroloc/features.hpp"
#include "vibroloc/pipeline.hpp"
#include "vibroloc/readout.hpp"
#include "vibroloc/subspace.hpp"
#include "vibroloc/synth.hpp"
#include "vibroloc/tracking.hpp"

using namespace vibroloc;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void gate(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%2d] %s  %s  (%s)\n", id, pass ? "PASS" : "FAIL", name,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream out;
  out << std::setprecision(prec) << v;
  return out.str();
}

// ---------------------------------------------------------------------------
// 1. Ridge readout against the explicit normal-equation solution.

void check_ridge() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(42);
  std::normal_distribution<double> dist;
  std::uniform_int_distribution<int> n_dist(10, 40);
  std::uniform_int_distribution<int> d_dist(1, 12);
  std::uniform_real_distribution<double> log_eps(-8.0, -2.0);

  double worst = 0.0;
  for (int it = 0; it < 200; ++it) {
    const int N = n_dist(gen);
    const int D = std::min(d_dist(gen), N - 6);
    Eigen::MatrixXd Z(N, D), P(N, 2);
    for (Eigen::Index i = 0; i < Z.size(); ++i) Z.data()[i] = dist(gen);
    for (Eigen::Index i = 0; i < P.size(); ++i) P.data()[i] = dist(gen);
    const bool penalize = (it % 2 == 0);
    const double eps = std::pow(10.0, log_eps(gen));

    const TrainingSet ts = assemble_training(Z, P);
    const ReadoutModel model = train_ridge(ts, eps, penalize);

    Eigen::MatrixXd gram = ts.design.transpose() * ts.design;
    gram.diagonal().array() += eps;
    if (!penalize) gram(D, D) -= eps;
    const Eigen::MatrixXd oracle =
        gram.inverse() * (ts.design.transpose() * ts.positions);

    const double dev = (model.weights - oracle).cwiseAbs().maxCoeff() /
                       (1.0 + oracle.cwiseAbs().maxCoeff());
    worst = std::max(worst, dev);
  }
  const double dt = elapsed_s(t0);
  gate(1, "ridge matches explicit normal equations (200 cases)",
       worst <= 1e-8 && dt < 5.0,
       "max rel dev " + fmt(worst, 2) + ", " + fmt(dt, 2) + " s");
}

// ---------------------------------------------------------------------------
// 2. PCA against an explicit covariance eigendecomposition.

void check_pca() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(43);
  std::normal_distribution<double> dist;

  double worst_val = 0.0, worst_vec = 0.0, worst_eta = 0.0;
  bool monotone = true;
  for (int it = 0; it < 100; ++it) {
    const int d = 2 + static_cast<int>(gen() % 19);  // 2..20
    const int N = d + 15;                            // <= 35 <= 50
    const bool centering = (it % 2 == 1);

    // Anisotropic columns keep the spectrum well separated, so the
    // eigenvector comparison is well conditioned.
    Eigen::MatrixXd X(N, d);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = dist(gen);
    for (int j = 0; j < d; ++j) X.col(j) *= std::pow(2.0, -0.5 * j);

    const PcaModel fit = fit_pca(X, centering);

    Eigen::MatrixXd Xc = X;
    if (centering) Xc.rowwise() -= X.colwise().mean();
    const Eigen::MatrixXd C =
        Xc.transpose() * Xc / static_cast<double>(N - 1);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    const Eigen::VectorXd lam = es.eigenvalues();  // ascending
    const double lam_max = lam(d - 1);

    const int r = fit.rank_available();
    for (int i = 0; i < r; ++i) {
      const double ours = fit.eigenvalues[i];
      const double ref = lam(d - 1 - i);
      worst_val = std::max(worst_val, std::abs(ours - ref) / lam_max);

      const double gap_lo = (d - 1 - i > 0) ? ref - lam(d - 2 - i) : ref;
      const double gap_hi = (i > 0) ? lam(d - i) - ref : lam_max;
      if (std::min(gap_lo, gap_hi) > 1e-6 * lam_max) {
        const double dot = std::abs(
            fit.directions.col(i).dot(es.eigenvectors().col(d - 1 - i)));
        worst_vec = std::max(worst_vec, std::abs(1.0 - dot));
      }
    }

    double prev = 0.0;
    for (int D = 1; D <= r; ++D) {
      const double eta = variance_retained(fit, D);
      if (eta < prev) monotone = false;
      prev = eta;
    }
    worst_eta = std::max(worst_eta, std::abs(variance_retained(fit, r) - 1.0));
  }
  const double dt = elapsed_s(t0);
  gate(2, "pca matches covariance eigendecomposition (100 cases)",
       worst_val <= 1e-8 && worst_vec <= 1e-8 && monotone &&
           worst_eta <= 1e-12 && dt < 5.0,
       "max value dev " + fmt(worst_val, 2) + ", vector dev " +
           fmt(worst_vec, 2) + ", |eta(r)-1| " + fmt(worst_eta, 2) + ", " +
           fmt(dt, 2) + " s");
}

// ---------------------------------------------------------------------------
// 3. Kalman filter: hand-computed steps, then noisy-track improvement.

void check_kalman() {
  KfConfig cfg;
  cfg.q = 0.04;
  cfg.r = 0.5;
  cfg.initial_position_var = 2.0;
  cfg.initial_velocity_var = 0.5;

  Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
  F(0, 2) = F(1, 3) = 1.0;
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = H(1, 1) = 1.0;

  Eigen::Vector4d x;
  x << 1.0, -0.3, 0.0, 0.0;
  Eigen::Matrix4d P = Eigen::Vector4d(2.0, 2.0, 0.5, 0.5).asDiagonal();

  KfState state = kf_init(Eigen::Vector2d(1.0, -0.3), cfg);
  double worst = (state.mean - x).cwiseAbs().maxCoeff();
  worst = std::max(worst, (state.covariance - P).cwiseAbs().maxCoeff());

  const Eigen::Vector2d zs[] = {{1.45, -0.25}, {2.1, -0.4}};
  for (const Eigen::Vector2d& z : zs) {
    const Eigen::Vector4d xp = F * x;
    const Eigen::Matrix4d Pp =
        F * P * F.transpose() + cfg.q * Eigen::Matrix4d::Identity();
    const Eigen::Matrix2d S =
        H * Pp * H.transpose() + cfg.r * Eigen::Matrix2d::Identity();
    const Eigen::Matrix<double, 4, 2> K = Pp * H.transpose() * S.inverse();
    x = xp + K * (z - H * xp);
    const Eigen::Matrix4d Pu = (Eigen::Matrix4d::Identity() - K * H) * Pp;
    P = 0.5 * (Pu + Pu.transpose());

    state = kf_step(state, z, cfg);
    worst = std::max(worst, (state.mean - x).cwiseAbs().maxCoeff());
    worst = std::max(worst, (state.covariance - P).cwiseAbs().maxCoeff());
  }

  // 100 seeded constant-velocity tracks with sigma = 0.5 m measurement
  // noise: filtering must beat the raw measurements nearly always.
  KfConfig track_cfg;
  track_cfg.q = 0.02;
  track_cfg.r = 0.25;
  track_cfg.initial_position_var = 0.25;
  track_cfg.initial_velocity_var = 1.0;

  int improved = 0;
  for (int t = 0; t < 100; ++t) {
    std::mt19937_64 gen(1000 + t);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::normal_distribution<double> jitter(0.0, 0.05);

    std::vector<Eigen::Vector2d> truth, meas;
    Eigen::Vector2d pos(0.4, 1.5), vel(0.62, 0.0);
    for (int k = 0; k < 27; ++k) {
      truth.push_back(pos);
      meas.push_back(pos + Eigen::Vector2d(noise(gen), noise(gen)));
      pos += vel + Eigen::Vector2d(jitter(gen), jitter(gen));
    }
    const auto filtered = filter_track(meas, track_cfg);
    double sse_raw = 0.0, sse_filt = 0.0;
    for (int k = 0; k < 27; ++k) {
      sse_raw += (meas[k] - truth[k]).squaredNorm();
      sse_filt += (filtered[k] - truth[k]).squaredNorm();
    }
    if (sse_filt < sse_raw) ++improved;
  }

  gate(3, "kalman matches hand arithmetic; filtering beats raw tracks",
       worst <= 1e-10 && improved >= 95,
       "max dev " + fmt(worst, 2) + ", improved " + std::to_string(improved) +
           "/100 tracks");
}

// ---------------------------------------------------------------------------
// 4. Detection on synthetic pulse schedules.

void check_detection() {
  const double fs = 1024.0;
  const int half_width = 20;  // samples; ~39 ms triangular pulses
  std::mt19937_64 gen(44);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);

  int total_true = 0, matched = 0, extras = 0;
  double worst_dt = 0.0;
  for (int sched = 0; sched < 20; ++sched) {
    const int K = 3 + static_cast<int>(gen() % 6);
    std::vector<double> times;
    double t = 0.5 + 0.3 * uni(gen);
    for (int k = 0; k < K; ++k) {
      times.push_back(t);
      t += 0.35 + 0.4 * uni(gen);
    }

    WaveformRecord rec;
    rec.layout.sample_rate_hz = fs;
    rec.layout.sensors = {{"p", 0.0, 0.0}};
    const Eigen::Index n = static_cast<Eigen::Index>((t + 0.5) * fs);
    rec.samples.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) rec.samples(i, 0) = noise(gen);
    for (double tk : times) {
      // Peak amplitude >= 0.8 against sigma 0.05: peak SNR >= 24 dB.
      const double amp = 0.8 + 0.6 * uni(gen);
      const Eigen::Index c = static_cast<Eigen::Index>(std::lround(tk * fs));
      for (int o = -half_width; o <= half_width; ++o)
        rec.samples(c + o, 0) +=
            amp * (1.0 - std::abs(o) / static_cast<double>(half_width));
    }

    const EventList events = detect_record(rec, DetectionConfig{});
    total_true += K;
    if (static_cast<int>(events.size()) != K)
      extras += std::abs(static_cast<int>(events.size()) - K);
    const std::size_t m = std::min(events.size(), times.size());
    for (std::size_t k = 0; k < m; ++k) {
      const double dt =
          std::abs(static_cast<double>(events[k].sample) / fs - times[k]);
      worst_dt = std::max(worst_dt, dt);
      if (dt <= 0.010) ++matched;
    }
  }

  // Two pulses 100 ms apart must merge under the 200 ms separation rule,
  // keeping the larger one; shrinking the rule splits them again.
  WaveformRecord pair;
  pair.layout.sample_rate_hz = fs;
  pair.layout.sensors = {{"p", 0.0, 0.0}};
  pair.samples = Eigen::MatrixXd::Zero(4096, 1);
  for (Eigen::Index i = 0; i < pair.samples.rows(); ++i)
    pair.samples(i, 0) = noise(gen);
  for (int o = -half_width; o <= half_width; ++o) {
    const double tri = 1.0 - std::abs(o) / static_cast<double>(half_width);
    pair.samples(2048 + o, 0) += 1.0 * tri;   // t = 2.0 s
    pair.samples(2150 + o, 0) += 0.7 * tri;   // ~100 ms later
  }
  DetectionConfig merge_cfg;
  const EventList merged = detect_record(pair, merge_cfg);
  const bool merge_ok =
      merged.size() == 1 &&
      std::abs(static_cast<double>(merged[0].sample) / fs - 2.0) <= 0.010;
  merge_cfg.min_separation_s = 0.05;
  const bool split_ok = detect_record(pair, merge_cfg).size() == 2;

  gate(4, "detection: exact recall/precision and timing on pulse trains",
       matched == total_true && extras == 0 && worst_dt <= 0.010 && merge_ok &&
           split_ok,
       std::to_string(matched) + "/" + std::to_string(total_true) +
           " pulses, max |dt| " + fmt(worst_dt * 1e3, 2) + " ms, merge " +
           (merge_ok && split_ok ? "ok" : "wrong"));
}

// ---------------------------------------------------------------------------
// 5. Amplitude invariance after RMS normalization.

void check_normalization_invariance(const Campaign& campaign,
                                    const ExperimentConfig& base_cfg) {
  // Two walkers striking identical positions at identical times, differing
  // only in impulse scale, on a noiseless floor.
  const FloorModel floor = build_floor(FloorConfig{});
  const SensorLayout layout = default_corridor_layout(42);
  const TraversalPlan plan = default_plan("S1", 1);
  GaitProfile light = default_gait("S1");
  light.impulse_jitter = 0.0;
  light.placement_jitter = 0.0;
  light.timing_jitter_s = 0.0;
  GaitProfile heavy = light;
  heavy.impulse_mean *= 1.6;

  const LabeledDataset a = simulate_traversal(floor, plan, light, layout, 0.0, 42);
  const LabeledDataset b = simulate_traversal(floor, plan, heavy, layout, 0.0, 42);

  bool positions_match = a.labels.size() == b.labels.size();
  for (std::size_t i = 0; positions_match && i < a.labels.size(); ++i)
    positions_match = a.labels[i].x_m == b.labels[i].x_m &&
                      a.labels[i].y_m == b.labels[i].y_m &&
                      a.labels[i].t_s == b.labels[i].t_s;

  const EventList ev_a = detect_record(a.record, DetectionConfig{});
  const EventList ev_b = detect_record(b.record, DetectionConfig{});
  bool events_match = ev_a.size() == ev_b.size() && !ev_a.empty();
  for (std::size_t i = 0; events_match && i < ev_a.size(); ++i)
    events_match = ev_a[i].sample == ev_b[i].sample;

  double worst_window = 0.0;
  if (events_match) {
    const WindowConfig wc = WindowConfig::from(
        base_cfg.t_w_s, layout.sample_rate_hz, layout.sensor_count());
    for (const Event& e : ev_a) {
      const ReservoirState ra =
          rms_normalize(vectorize(extract_window(a.record, e.sample, wc)));
      const ReservoirState rb =
          rms_normalize(vectorize(extract_window(b.record, e.sample, wc)));
      worst_window =
          std::max(worst_window, (ra.values - rb.values).cwiseAbs().maxCoeff());
    }
  }

  // Globally rescaling every waveform must leave predictions unchanged.
  std::vector<LabeledDataset> scaled = campaign.datasets;
  for (LabeledDataset& ds : scaled) ds.record.samples *= 3.7;
  const ExperimentReport r0 = run_pipeline(campaign.datasets, base_cfg);
  const ExperimentReport r1 = run_pipeline(scaled, base_cfg);
  double worst_pred = 0.0;
  bool aligned = r0.test_predictions.size() == r1.test_predictions.size();
  if (aligned)
    for (std::size_t i = 0; i < r0.test_predictions.size(); ++i)
      worst_pred = std::max(
          worst_pred, (r0.test_predictions[i].predicted -
                       r1.test_predictions[i].predicted)
                          .cwiseAbs()
                          .maxCoeff());

  gate(5, "rms normalization removes amplitude scale",
       positions_match && events_match && worst_window <= 1e-9 && aligned &&
           worst_pred <= 1e-9,
       "window dev " + fmt(worst_window, 2) + ", prediction dev " +
           fmt(worst_pred, 2) + " over x3.7 rescale");
}

// ---------------------------------------------------------------------------

int main_impl() {
  std::printf("acceptance: vibration footstep localization\n");

  check_ridge();
  check_pca();
  check_kalman();
  check_detection();

  auto t_synth = Clock::now();
  const Campaign campaign = default_campaign(42);
  std::printf(" --  campaign: %zu traversals, %d sensors, synthesized in %.1f s\n",
              campaign.datasets.size(), campaign.layout.sensor_count(),
              elapsed_s(t_synth));
  std::fflush(stdout);

  ExperimentConfig cfg6;
  cfg6.train = {{"S1", "Tr1"}, {"S1", "Tr2"}, {"S1", "Tr3"}};
  cfg6.test = {{"S1", "Tr6"}};

  check_normalization_invariance(campaign, cfg6);

  // 6. Same-subject generalization to a held-out traversal.
  const auto t6 = Clock::now();
  const ExperimentReport r6 = run_pipeline(campaign.datasets, cfg6);
  const double dt6 = elapsed_s(t6);
  gate(6, "held-out traversal: rmse_x <= 0.62 m, total <= 1.0 m",
       r6.test.raw.x <= 0.62 && r6.test.raw.total <= 1.0 && dt6 < 60.0,
       "rmse_x " + fmt(r6.test.raw.x) + ", total " + fmt(r6.test.raw.total) +
           ", " + fmt(dt6, 2) + " s");

  // 7. Cross-subject transfer, with and without RMS normalization.
  ExperimentConfig cfg7 = cfg6;
  cfg7.test = {{"S2", "Tr1"}, {"S2", "Tr2"}, {"S2", "Tr3"}};
  const ExperimentReport r7 = run_pipeline(campaign.datasets, cfg7);
  ExperimentConfig cfg7u = cfg7;
  cfg7u.rms_normalize = false;
  const ExperimentReport r7u = run_pipeline(campaign.datasets, cfg7u);
  gate(7, "cross-subject: normalization helps, degradation bounded",
       r7.test.raw.total < r7u.test.raw.total &&
           r7.test.raw.total <= 1.5 * r6.test.raw.total,
       "normalized " + fmt(r7.test.raw.total) + " vs raw-scale " +
           fmt(r7u.test.raw.total) + ", bound " +
           fmt(1.5 * r6.test.raw.total));

  // 8. Sensor-count sweep: one sensor is much worse than six; adding five
  // more changes little.
  ExperimentConfig cfg8 = cfg6;
  cfg8.test = {{"S1", "Tr4"}, {"S1", "Tr5"}, {"S1", "Tr6"}};
  cfg8.detect_all_sensors = true;
  const auto rows8 =
      sweep_sensor_count(campaign.datasets, cfg8, {1, 6, 11}, 32, 42);
  const double m1 = rows8[0].mean.total, m6 = rows8[1].mean.total,
               m11 = rows8[2].mean.total;
  const double plateau = std::abs(m11 - m6) / m6;
  gate(8, "sensor sweep: 1 sensor worse than 6, 6 to 11 within 20%",
       m1 > m6 && plateau <= 0.20,
       "mean rmse " + fmt(m1) + " / " + fmt(m6) + " / " + fmt(m11) +
           ", plateau change " + fmt(100.0 * plateau, 2) + "%");

  // 9. Training-size sweep: more traversals never hurt beyond noise.
  ExperimentConfig cfg9 = cfg8;
  cfg9.detect_all_sensors = false;
  cfg9.train = {{"S1", "Tr1"}, {"S1", "Tr2"}, {"S1", "Tr3"},
                {"S2", "Tr1"}, {"S2", "Tr2"}, {"S2", "Tr3"}};
  const auto rows9 = sweep_training_size(campaign.datasets, cfg9,
                                         {1, 2, 3, 4, 5, 6}, 16, 42);
  bool monotone = true;
  for (std::size_t i = 1; i < rows9.size(); ++i) {
    const double pooled = std::sqrt(0.5 * (rows9[i - 1].stddev.total *
                                               rows9[i - 1].stddev.total +
                                           rows9[i].stddev.total *
                                               rows9[i].stddev.total));
    if (rows9[i].mean.total > rows9[i - 1].mean.total + pooled)
      monotone = false;
  }
  std::string curve;
  for (const SweepRow& row : rows9)
    curve += (curve.empty() ? "" : " ") + fmt(row.mean.total);
  gate(9, "training-size sweep: rmse improves with more traversals",
       rows9.back().mean.total <= rows9.front().mean.total && monotone,
       "mean rmse " + curve);

  // 10. Longitudinal information dominates: per-sensor Fisher separation and
  // per-axis confusion over every localized footstep.
  double min_jx = std::numeric_limits<double>::infinity(), max_jy = 0.0;
  for (const SensorFisher& f : r6.fisher) {
    min_jx = std::min(min_jx, f.j_x);
    max_jy = std::max(max_jy, f.j_y);
  }
  std::vector<Prediction> pooled = r6.train_predictions;
  pooled.insert(pooled.end(), r6.test_predictions.begin(),
                r6.test_predictions.end());
  double lo_x = 1e30, hi_x = -1e30, lo_y = 1e30, hi_y = -1e30;
  for (const Prediction& p : pooled) {
    lo_x = std::min(lo_x, p.truth.x());
    hi_x = std::max(hi_x, p.truth.x());
    lo_y = std::min(lo_y, p.truth.y());
    hi_y = std::max(hi_y, p.truth.y());
  }
  const BinSpec bx = make_bins(BinAxis::x, lo_x, hi_x, 1.0);
  const BinSpec by = make_bins(BinAxis::y, lo_y, hi_y, 0.15);
  const double diag_x = diagonal_mass(confusion_matrix(pooled, bx));
  const double diag_y = diagonal_mass(confusion_matrix(pooled, by));
  gate(10, "x carries the signal: fisher and confusion dominance",
       min_jx > max_jy && diag_x > 0.6 && diag_x > diag_y,
       "min Jx " + fmt(min_jx) + " vs max Jy " + fmt(max_jy) + ", diag " +
           fmt(diag_x) + " vs " + fmt(diag_y));

  // 11. RMSE decomposition is exact.
  double worst_decomp = 0.0;
  for (const RmseTriple& m : {r6.train.raw, r6.test.raw, r7.test.raw})
    worst_decomp = std::max(
        worst_decomp, std::abs(m.total * m.total - m.x * m.x - m.y * m.y));
  gate(11, "rmse_total^2 == rmse_x^2 + rmse_y^2", worst_decomp <= 1e-12,
       "max |total^2-x^2-y^2| " + fmt(worst_decomp, 2));

  // 12. Full determinism: re-synthesizing and re-running the experiment
  // reproduces the written report artifacts byte for byte.
  const Campaign again = default_campaign(42);
  const ExperimentReport r6b = run_pipeline(again.datasets, cfg6);
  const auto base = std::filesystem::temp_directory_path();
  const auto dir_a = base / "vibroloc_accept_a", dir_b = base / "vibroloc_accept_b";
  write_report(r6, dir_a);
  write_report(r6b, dir_b);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  const bool metrics_same =
      slurp(dir_a / "metrics.json") == slurp(dir_b / "metrics.json") &&
      !slurp(dir_a / "metrics.json").empty();
  const bool preds_same =
      slurp(dir_a / "predictions.csv") == slurp(dir_b / "predictions.csv") &&
      !slurp(dir_a / "predictions.csv").empty();
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
  gate(12, "identical seeds reproduce reports byte for byte",
       metrics_same && preds_same,
       std::string("metrics ") + (metrics_same ? "equal" : "differ") +
           ", predictions " + (preds_same ? "equal" : "differ"));

  std::printf("%d/12 criteria passed\n", 12 - g_failures);
  return g_failures == 0 ? 0 : 1;
}

}  // namespace

int main() {
  try {
    return main_impl();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
}
