#pragma once

// Monte Carlo driver, metric aggregation (ROC / RMSE), the four-target
// heatmap scenario, and CSV export.

#include "ddpol/channel.hpp"
#include "ddpol/core.hpp"
#include "ddpol/estimation.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ddpol {

struct RunConfig {
  SystemKind system = SystemKind::zak;
  DetectionMode polarization = DetectionMode::dual;
  std::vector<double> snr_db = {0.0, 10.0, 20.0};
  int trials = 2000;  // per SNR point; each trial runs both hypotheses
  std::uint64_t master_seed = 0x5eed2026ULL;
  ZakParams params{31, 37, 31.0 / 930000.0, 30000.0};
  GdaftParams gdaft{1, 1, 1};
  int zc_root_h = 101;
  int zc_root_v = 107;
  int oversample = 2;  // sample rate multiple for phase-coded / FMCW frames
  double pfa = 1e-6;
  int guard_k = 2;
  int guard_l = 2;
  // Covers every bin the target draw can round to: tau in [0, tau_p/4) spans
  // delay bins [0, M/4], nu in +-nu_p/8 spans Doppler bins [-ceil(N/8), +].
  SupportBox roi{0, 8, -5, 5};
  int sinc_half_width = 256;
  int threads = 0;  // 0 = hardware concurrency
  std::string out_dir = ".";
};

// Parses a JSON object; absent keys keep the defaults above. Unknown keys are
// rejected so config typos fail loudly.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);
void validate_config(const RunConfig& cfg);

struct TrialRecord {
  int trial = 0;
  double snr_db = 0.0;
  bool target_present = false;
  // Drawn geometry; the detection statistic is read at the nearest bin for
  // both hypotheses (common-random-numbers pairing).
  double tau_true_s = 0.0;
  double nu_true_hz = 0.0;
  Mat2c gain_true;  // zero matrix when target absent
  DetectionOutcome outcome;
  ParamEstimate estimate;
};

// For each (SNR, trial): draws scene and noise from streams derived from
// (master seed, SNR index, trial), synthesizes frames, runs the configured
// pipeline under both hypotheses with a shared noise realization, and records
// outcomes. Record order is SNR-major, then trial, then hypothesis
// (absent before present), independent of thread count.
std::vector<TrialRecord> run_monte_carlo(const RunConfig& cfg);

struct RocPoint {
  double false_alarm_rate = 0.0;
  double detection_rate = 0.0;
};
struct RocCurve {
  std::vector<RocPoint> points;  // threshold sweep, monotone nondecreasing
  double auc = 0.0;              // Mann-Whitney with tie correction
};

// Positive population: statistic_present of target-present records. Negative
// population: statistic_floor of every record. Throws when the records cover
// only one hypothesis.
RocCurve roc_curve(const std::vector<TrialRecord>& records);

struct RmseRow {
  double snr_db = 0.0;
  int present_trials = 0;
  int detected = 0;
  double miss_rate = 0.0;
  double delay_rmse_bins = 0.0;    // units of 1/B; NaN when nothing detected
  double doppler_rmse_bins = 0.0;  // units of 1/T
};

// Per-SNR rows in first-seen order; misses are excluded from the RMSE and
// reported through miss_rate. params supplies the bin widths 1/B and 1/T.
std::vector<RmseRow> rmse_curves(const std::vector<TrialRecord>& records,
                                 const ZakParams& params);

// Four on-grid targets: two co-polarized (HH 0.7) and two cross-polarized
// (HV = VH 0.3 and 0.95), VV quiet. Chosen so the sequential-FMCW pairing
// ambiguity lands inside the ROI.
SceneSpec heatmap_demo_scene(const ZakParams& params);

struct HeatmapPeak {
  int k = 0;
  int l = 0;
  double energy = 0.0;
  bool matches_target = false;  // within Chebyshev distance 1 of a true bin
};
struct HeatmapSystemReport {
  SystemKind system = SystemKind::zak;
  std::array<std::vector<HeatmapPeak>, 4> peaks;  // hh, hv, vh, vv
  int targets_found = 0;  // targets seen in >=1 surface where they have gain
  int false_peaks = 0;    // peaks matching no target of their surface
};
struct HeatmapReport {
  std::vector<HeatmapSystemReport> systems;  // zak, phase_coded, fmcw
};

// Runs one noisy frame per system through its pipeline, counts local maxima
// above the CFAR threshold inside the ROI, classifies them against the scene,
// and (when out_dir is nonempty) writes <system>_<surface>.csv energy
// matrices (M rows x N columns).
HeatmapReport heatmap_scenario(const RunConfig& cfg, const SceneSpec& scene, double snr_db);

// Fixed 14-column schema, one row per record:
// trial,snr_db,hypothesis,tau_true_s,nu_true_hz,stat_present,stat_floor,
// detected,k_hat,l_hat,w_hh,w_hv,w_vh,w_vv
void write_records_csv(const std::string& path, const std::vector<TrialRecord>& records);
void write_roc_csv(const std::string& path, const RocCurve& roc);
void write_rmse_csv(const std::string& path, const std::vector<RmseRow>& rows);
void write_surface_energy_csv(const std::string& path, const DDSurface& surface);
void write_surface_complex_csv(const std::string& path, const DDSurface& surface);
void write_frame_csv(const std::string& path, const ComplexFrame& frame);

}  // namespace ddpol
