#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ddpol/channel.hpp"
#include "ddpol/core.hpp"
#include "ddpol/estimation.hpp"
#include "ddpol/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using ddpol::cplx;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

bool records_identical(const std::vector<ddpol::TrialRecord>& a,
                       const std::vector<ddpol::TrialRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const ddpol::TrialRecord& x = a[i];
    const ddpol::TrialRecord& y = b[i];
    if (x.trial != y.trial || x.snr_db != y.snr_db || x.target_present != y.target_present) {
      return false;
    }
    if (x.tau_true_s != y.tau_true_s || x.nu_true_hz != y.nu_true_hz) return false;
    if (x.outcome.statistic_present != y.outcome.statistic_present) return false;
    if (x.outcome.statistic_floor != y.outcome.statistic_floor) return false;
    if (x.estimate.detected != y.estimate.detected) return false;
    if (x.estimate.detected &&
        (x.estimate.k_hat != y.estimate.k_hat || x.estimate.l_hat != y.estimate.l_hat)) {
      return false;
    }
  }
  return true;
}

ddpol::TrialRecord make_record(double snr, bool present, double stat_present, double stat_floor) {
  ddpol::TrialRecord r;
  r.snr_db = snr;
  r.target_present = present;
  r.outcome.statistic_present = stat_present;
  r.outcome.statistic_floor = stat_floor;
  return r;
}

}  // namespace

TEST_CASE("config JSON: round trip preserves every field") {
  ddpol::RunConfig cfg;
  cfg.system = ddpol::SystemKind::fmcw;
  cfg.polarization = ddpol::DetectionMode::uni;
  cfg.snr_db = {-5.0, 2.5};
  cfg.trials = 17;
  cfg.master_seed = 0xabcdef0123456789ULL;
  cfg.zc_root_h = 7;
  cfg.zc_root_v = 11;
  cfg.oversample = 4;
  cfg.pfa = 1e-3;
  cfg.guard_k = 1;
  cfg.guard_l = 3;
  cfg.roi = {1, 7, -4, 4};
  cfg.sinc_half_width = 64;
  cfg.threads = 2;
  cfg.out_dir = "/tmp/somewhere";

  const ddpol::RunConfig back = ddpol::config_from_json(ddpol::config_to_json(cfg));
  CHECK(back.system == cfg.system);
  CHECK(back.polarization == cfg.polarization);
  CHECK(back.snr_db == cfg.snr_db);
  CHECK(back.trials == cfg.trials);
  CHECK(back.master_seed == cfg.master_seed);
  CHECK(back.params.m == cfg.params.m);
  CHECK(back.params.n == cfg.params.n);
  CHECK(back.params.delay_period_s == cfg.params.delay_period_s);
  CHECK(back.params.doppler_period_hz == cfg.params.doppler_period_hz);
  CHECK(back.gdaft.a == cfg.gdaft.a);
  CHECK(back.zc_root_h == cfg.zc_root_h);
  CHECK(back.zc_root_v == cfg.zc_root_v);
  CHECK(back.oversample == cfg.oversample);
  CHECK(back.pfa == cfg.pfa);
  CHECK(back.guard_k == cfg.guard_k);
  CHECK(back.guard_l == cfg.guard_l);
  CHECK(back.roi.k_min == cfg.roi.k_min);
  CHECK(back.roi.k_max == cfg.roi.k_max);
  CHECK(back.roi.l_min == cfg.roi.l_min);
  CHECK(back.roi.l_max == cfg.roi.l_max);
  CHECK(back.sinc_half_width == cfg.sinc_half_width);
  CHECK(back.threads == cfg.threads);
  CHECK(back.out_dir == cfg.out_dir);
}

TEST_CASE("config JSON: typos and bad values fail loudly") {
  CHECK_THROWS(ddpol::config_from_json(R"({"sytem": "zak"})"));
  CHECK_THROWS(ddpol::config_from_json(R"({"grid": {"mm": 31}})"));
  CHECK_THROWS(ddpol::config_from_json(R"({"system": "chirp"})"));
  CHECK_THROWS(ddpol::config_from_json(R"({"polarization": "both"})"));
  CHECK_THROWS(ddpol::config_from_json(R"({"trials": 0})"));
  CHECK_THROWS(ddpol::config_from_json(R"({"snr_db": []})"));
  CHECK_THROWS(ddpol::config_from_json(R"({"pfa": 1.5})"));
  CHECK_THROWS(ddpol::config_from_json(R"({"oversample": 3})"));
  CHECK_THROWS(ddpol::config_from_json(R"({"zc_root_h": 101, "zc_root_v": 101})"));
  CHECK_THROWS(ddpol::config_from_json(R"({"roi": {"k_min": 9, "k_max": 3}})"));
  CHECK_THROWS(ddpol::config_from_json("[1, 2]"));
  // Defaults alone are valid.
  CHECK_NOTHROW(ddpol::config_from_json("{}"));
}

TEST_CASE("monte carlo: record layout is SNR-major with absent before present") {
  ddpol::RunConfig cfg;
  cfg.system = ddpol::SystemKind::zak;
  cfg.snr_db = {0.0, 20.0};
  cfg.trials = 3;
  cfg.threads = 1;
  const auto records = ddpol::run_monte_carlo(cfg);
  REQUIRE(records.size() == 2 * 3 * 2);

  for (std::size_t i = 0; i < records.size(); ++i) {
    const ddpol::TrialRecord& r = records[i];
    CHECK(r.snr_db == (i < 6 ? 0.0 : 20.0));
    CHECK(r.trial == static_cast<int>((i / 2) % 3));
    CHECK(r.target_present == (i % 2 == 1));
  }
  // Paired hypotheses share the drawn geometry.
  for (std::size_t i = 0; i + 1 < records.size(); i += 2) {
    CHECK(records[i].tau_true_s == records[i + 1].tau_true_s);
    CHECK(records[i].nu_true_hz == records[i + 1].nu_true_hz);
  }
}

TEST_CASE("monte carlo: reruns and thread counts do not change the records") {
  ddpol::RunConfig cfg;
  cfg.system = ddpol::SystemKind::phase_coded;
  cfg.snr_db = {10.0};
  cfg.trials = 6;
  cfg.threads = 1;
  const auto a = ddpol::run_monte_carlo(cfg);
  const auto b = ddpol::run_monte_carlo(cfg);
  CHECK(records_identical(a, b));

  cfg.threads = 3;
  const auto c = ddpol::run_monte_carlo(cfg);
  CHECK(records_identical(a, c));
}

TEST_CASE("monte carlo: zak dual separates cleanly at 20 dB") {
  ddpol::RunConfig cfg;
  cfg.system = ddpol::SystemKind::zak;
  cfg.polarization = ddpol::DetectionMode::dual;
  cfg.snr_db = {20.0};
  cfg.trials = 200;
  cfg.threads = 1;
  const auto records = ddpol::run_monte_carlo(cfg);

  double min_present = 1e9;
  double max_floor = 0.0;
  for (const ddpol::TrialRecord& r : records) {
    if (r.target_present) min_present = std::min(min_present, r.outcome.statistic_present);
    max_floor = std::max(max_floor, r.outcome.statistic_floor);
  }
  CHECK(min_present > max_floor);
  CHECK(ddpol::roc_curve(records).auc == doctest::Approx(1.0));

  // Every present trial is detected and lands within a bin of the truth.
  const auto rows = ddpol::rmse_curves(records, cfg.params);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].present_trials == 200);
  CHECK(rows[0].miss_rate <= 0.01);
  CHECK(rows[0].delay_rmse_bins < 1.0);
  CHECK(rows[0].doppler_rmse_bins < 1.0);
}

TEST_CASE("monte carlo: sequential FMCW single-pol collapses at -20 dB") {
  ddpol::RunConfig cfg;
  cfg.system = ddpol::SystemKind::fmcw;
  cfg.polarization = ddpol::DetectionMode::uni;
  cfg.snr_db = {-20.0};
  cfg.trials = 200;
  cfg.master_seed = 24860;
  cfg.threads = 1;
  const auto records = ddpol::run_monte_carlo(cfg);
  const double auc = ddpol::roc_curve(records).auc;
  CHECK(auc < 0.7);   // measured 0.51: statistic is chance-level here
  CHECK(auc > 0.3);   // ... but not inverted
}

TEST_CASE("roc_curve: analytic populations") {
  // Perfectly separated.
  std::vector<ddpol::TrialRecord> sep;
  for (int i = 0; i < 40; ++i) {
    sep.push_back(make_record(0.0, i % 2 == 1, 1.0 + 0.01 * i, 0.1 + 0.001 * i));
  }
  const auto roc_sep = ddpol::roc_curve(sep);
  CHECK(roc_sep.auc == doctest::Approx(1.0));

  // Identical populations: every statistic ties, average-rank AUC is 1/2.
  std::vector<ddpol::TrialRecord> tied;
  for (int i = 0; i < 40; ++i) tied.push_back(make_record(0.0, i % 2 == 1, 0.5, 0.5));
  CHECK(ddpol::roc_curve(tied).auc == doctest::Approx(0.5));

  // The curve is a monotone staircase from (0,0) to (1,1).
  std::vector<ddpol::TrialRecord> mixed;
  ddpol::RandomStream rng(0xabc1);
  for (int i = 0; i < 60; ++i) {
    mixed.push_back(make_record(0.0, i % 2 == 1, rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.0)));
  }
  const auto roc = ddpol::roc_curve(mixed);
  REQUIRE(roc.points.size() >= 2);
  CHECK(roc.points.front().false_alarm_rate == doctest::Approx(0.0));
  CHECK(roc.points.back().false_alarm_rate == doctest::Approx(1.0));
  CHECK(roc.points.back().detection_rate == doctest::Approx(1.0));
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    CHECK(roc.points[i].false_alarm_rate >= roc.points[i - 1].false_alarm_rate);
    CHECK(roc.points[i].detection_rate >= roc.points[i - 1].detection_rate);
  }

  // Single-hypothesis input has no ROC.
  std::vector<ddpol::TrialRecord> only_absent;
  for (int i = 0; i < 10; ++i) only_absent.push_back(make_record(0.0, false, 0.5, 0.5));
  CHECK_THROWS_AS(ddpol::roc_curve(only_absent), std::invalid_argument);
  CHECK_THROWS_AS(ddpol::roc_curve({}), std::invalid_argument);
}

TEST_CASE("rmse_curves: bin conversion and miss accounting") {
  const ddpol::ZakParams params = ddpol::validate_params(31, 37, 31.0 / 930000.0, 30000.0);
  const double bin_tau = 1.0 / params.bandwidth_hz();
  const double bin_nu = 1.0 / params.frame_duration_s();

  std::vector<ddpol::TrialRecord> records;
  // Absent records carry no estimation burden.
  records.push_back(make_record(0.0, false, 0.0, 0.0));
  // Present, detected one delay bin high and exactly on Doppler.
  ddpol::TrialRecord hit = make_record(0.0, true, 1.0, 0.1);
  hit.tau_true_s = 3.0 * bin_tau;
  hit.nu_true_hz = -2.0 * bin_nu;
  hit.estimate.detected = true;
  hit.estimate.k_hat = 4.0;
  hit.estimate.l_hat = -2.0;
  records.push_back(hit);
  // Present but missed.
  ddpol::TrialRecord miss = make_record(0.0, true, 0.2, 0.1);
  miss.tau_true_s = bin_tau;
  records.push_back(miss);

  const auto rows = ddpol::rmse_curves(records, params);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].present_trials == 2);
  CHECK(rows[0].detected == 1);
  CHECK(rows[0].miss_rate == doctest::Approx(0.5));
  CHECK(rows[0].delay_rmse_bins == doctest::Approx(1.0));
  CHECK(rows[0].doppler_rmse_bins == doctest::Approx(0.0));

  // All misses: RMSE undefined, miss rate 1.
  std::vector<ddpol::TrialRecord> missed;
  ddpol::TrialRecord m = make_record(10.0, true, 0.0, 0.0);
  missed.push_back(m);
  const auto rows2 = ddpol::rmse_curves(missed, params);
  REQUIRE(rows2.size() == 1);
  CHECK(rows2[0].miss_rate == doctest::Approx(1.0));
  CHECK(std::isnan(rows2[0].delay_rmse_bins));
  CHECK(std::isnan(rows2[0].doppler_rmse_bins));

  // Rows come out in first-seen SNR order.
  std::vector<ddpol::TrialRecord> two_snrs;
  two_snrs.push_back(make_record(20.0, true, 1.0, 0.1));
  two_snrs.push_back(make_record(0.0, true, 1.0, 0.1));
  const auto rows3 = ddpol::rmse_curves(two_snrs, params);
  REQUIRE(rows3.size() == 2);
  CHECK(rows3[0].snr_db == 20.0);
  CHECK(rows3[1].snr_db == 0.0);
}

TEST_CASE("heatmap demo scene: four targets with the documented polarimetry") {
  const ddpol::ZakParams params = ddpol::validate_params(31, 37, 31.0 / 930000.0, 30000.0);
  const ddpol::SceneSpec scene = ddpol::heatmap_demo_scene(params);
  REQUIRE(scene.paths.size() == 4);

  int co_pol = 0;
  int cross_pol = 0;
  for (const ddpol::PolPath& p : scene.paths) {
    // On-grid by construction.
    const double k = p.delay_s * params.bandwidth_hz();
    const double l = p.doppler_hz * params.frame_duration_s();
    CHECK(k == doctest::Approx(std::round(k)));
    CHECK(l == doctest::Approx(std::round(l)));
    CHECK(std::abs(p.gain.vv) == 0.0);
    if (std::abs(p.gain.hh) > 0.0) {
      ++co_pol;
      CHECK(std::abs(p.gain.hv) == 0.0);
    } else {
      ++cross_pol;
      CHECK(std::abs(p.gain.hv) == doctest::Approx(std::abs(p.gain.vh)));
    }
  }
  CHECK(co_pol == 2);
  CHECK(cross_pol == 2);
}

TEST_CASE("heatmap scenario: pulsone and phase-coded surfaces are clean, FMCW ghosts") {
  ddpol::RunConfig cfg;
  cfg.out_dir.clear();  // no CSV side effects
  const ddpol::SceneSpec scene = ddpol::heatmap_demo_scene(cfg.params);
  const ddpol::HeatmapReport report = ddpol::heatmap_scenario(cfg, scene, 20.0);
  REQUIRE(report.systems.size() == 3);

  const ddpol::HeatmapSystemReport& zak = report.systems[0];
  CHECK(zak.system == ddpol::SystemKind::zak);
  CHECK(zak.targets_found == 4);
  CHECK(zak.false_peaks == 0);
  CHECK(zak.peaks[0].size() == 2);  // hh
  CHECK(zak.peaks[1].size() == 2);  // hv
  CHECK(zak.peaks[2].size() == 2);  // vh
  CHECK(zak.peaks[3].empty());      // vv quiet

  const ddpol::HeatmapSystemReport& pc = report.systems[1];
  CHECK(pc.system == ddpol::SystemKind::phase_coded);
  CHECK(pc.targets_found == 4);
  CHECK(pc.false_peaks == 0);

  const ddpol::HeatmapSystemReport& fmcw = report.systems[2];
  CHECK(fmcw.system == ddpol::SystemKind::fmcw);
  CHECK(fmcw.false_peaks >= 1);  // up/down pairing ambiguity
}

TEST_CASE("heatmap scenario: empty scene yields no peaks anywhere") {
  ddpol::RunConfig cfg;
  cfg.out_dir.clear();
  ddpol::SceneSpec empty;
  const ddpol::HeatmapReport report = ddpol::heatmap_scenario(cfg, empty, 20.0);
  for (const ddpol::HeatmapSystemReport& sys : report.systems) {
    CHECK(sys.targets_found == 0);
    CHECK(sys.false_peaks == 0);
    for (const auto& surface_peaks : sys.peaks) CHECK(surface_peaks.empty());
  }
}

TEST_CASE("records CSV: schema, hypothesis flags, and value fidelity") {
  ddpol::RunConfig cfg;
  cfg.snr_db = {0.0};
  cfg.trials = 2;
  cfg.threads = 1;
  const auto records = ddpol::run_monte_carlo(cfg);

  const std::string path = "/tmp/ddpol_test_records.csv";
  ddpol::write_records_csv(path, records);
  const auto lines = lines_of(slurp(path));
  REQUIRE(lines.size() == records.size() + 1);
  CHECK(lines[0] ==
        "trial,snr_db,hypothesis,tau_true_s,nu_true_hz,stat_present,stat_floor,"
        "detected,k_hat,l_hat,w_hh,w_hv,w_vh,w_vv");

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto fields = [&] {
      std::vector<std::string> f;
      std::istringstream in(lines[i + 1]);
      std::string tok;
      while (std::getline(in, tok, ',')) f.push_back(tok);
      return f;
    }();
    REQUIRE(fields.size() == 14);
    CHECK(fields[2] == (records[i].target_present ? "1" : "0"));
    // %.17g survives a strtod round trip bit-exactly.
    CHECK(std::strtod(fields[5].c_str(), nullptr) == records[i].outcome.statistic_present);
    if (!records[i].estimate.detected) {
      CHECK(fields[8] == "nan");
      CHECK(fields[9] == "nan");
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("roc / rmse / surface CSV writers emit the documented shapes") {
  std::vector<ddpol::TrialRecord> records;
  for (int i = 0; i < 20; ++i) {
    records.push_back(make_record(0.0, i % 2 == 1, 1.0 + i * (i % 2), 0.2 + 0.01 * i));
  }
  const auto roc = ddpol::roc_curve(records);
  const std::string roc_path = "/tmp/ddpol_test_roc.csv";
  ddpol::write_roc_csv(roc_path, roc);
  auto roc_lines = lines_of(slurp(roc_path));
  REQUIRE(roc_lines.size() == roc.points.size() + 1);
  CHECK(roc_lines[0] == "false_alarm_rate,detection_rate");
  std::remove(roc_path.c_str());

  const ddpol::ZakParams params = ddpol::validate_params(31, 37, 31.0 / 930000.0, 30000.0);
  const auto rows = ddpol::rmse_curves(records, params);
  const std::string rmse_path = "/tmp/ddpol_test_rmse.csv";
  ddpol::write_rmse_csv(rmse_path, rows);
  auto rmse_lines = lines_of(slurp(rmse_path));
  REQUIRE(rmse_lines.size() == rows.size() + 1);
  CHECK(rmse_lines[0] ==
        "snr_db,present_trials,detected,miss_rate,delay_rmse_bins,doppler_rmse_bins");
  std::remove(rmse_path.c_str());

  ddpol::DDSurface surf(3, 5);
  surf.at(1, 0) = cplx(3.0, 4.0);
  const std::string energy_path = "/tmp/ddpol_test_energy.csv";
  ddpol::write_surface_energy_csv(energy_path, surf);
  auto energy_lines = lines_of(slurp(energy_path));
  REQUIRE(energy_lines.size() == 3);  // one row per delay bin, no header
  {
    std::istringstream in(energy_lines[1]);
    std::string tok;
    std::vector<std::string> f;
    while (std::getline(in, tok, ',')) f.push_back(tok);
    REQUIRE(f.size() == 5);
    CHECK(std::strtod(f[2].c_str(), nullptr) == doctest::Approx(25.0));  // |3+4j|^2 at l=0
  }
  std::remove(energy_path.c_str());

  ddpol::ComplexFrame frame;
  frame.sample_rate_hz = 930000.0;
  frame.samples = {cplx(1.0, -2.0), cplx(0.5, 0.25)};
  const std::string frame_path = "/tmp/ddpol_test_frame.csv";
  ddpol::write_frame_csv(frame_path, frame);
  auto frame_lines = lines_of(slurp(frame_path));
  REQUIRE(frame_lines.size() == 3);
  CHECK(frame_lines[0] == "n,re,im");
  CHECK(frame_lines[1] == "0,1,-2");
  std::remove(frame_path.c_str());
}
