// ddpol: delay-Doppler polarimetry toolkit.
//
// Subcommands:
//   waveform    emit one transmit frame as CSV
//   ambiguity   emit a cross-ambiguity surface on the read grid as CSV
//   crystallize check a support box against a carrier's self-ambiguity
//   heatmap     four-target scenario across the three systems
//   montecarlo  detection / estimation sweep with CSV outputs
//   selftest    fast oracle equivalence checks

#include "ddpol/ambiguity.hpp"
#include "ddpol/channel.hpp"
#include "ddpol/estimation.hpp"
#include "ddpol/harness.hpp"
#include "ddpol/waveform.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace ddpol;

std::string join(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir + "/" + name;
}

std::string trim_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

RunConfig resolve_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_config(path);
}

// Frame factory shared by the waveform / ambiguity / crystallize subcommands.
// Critically sampled kinds (pulsone, spread) ignore the oversample factor.
ComplexFrame build_frame(const RunConfig& cfg, const std::string& kind, int k0, int l0) {
  if (kind == "pulsone") return pulsone(cfg.params, k0, l0);
  if (kind == "spread") return spread_carrier(cfg.params, cfg.gdaft, k0, l0);
  if (kind == "zc_h" || kind == "zc_v") {
    const int root = kind == "zc_h" ? cfg.zc_root_h : cfg.zc_root_v;
    return zadoff_chu(cfg.params.grid_size(), root, cfg.params.bandwidth_hz());
  }
  if (kind == "phase_coded_h" || kind == "phase_coded_v") {
    const int root = kind == "phase_coded_h" ? cfg.zc_root_h : cfg.zc_root_v;
    return phase_coded_frame(cfg.params, zadoff_chu(cfg.params.grid_size(), root),
                             cfg.oversample);
  }
  if (kind == "fmcw_up") return fmcw_frame(cfg.params, cfg.oversample).up;
  if (kind == "fmcw_down") return fmcw_frame(cfg.params, cfg.oversample).down;
  throw CLI::ValidationError("kind", "unknown waveform kind '" + kind + "'");
}

int frame_oversample(const RunConfig& cfg, const std::string& kind) {
  if (kind == "pulsone" || kind == "spread" || kind == "zc_h" || kind == "zc_v") return 1;
  return cfg.oversample;
}

const std::vector<std::string> kKinds = {"pulsone",       "spread",        "zc_h",
                                         "zc_v",          "phase_coded_h", "phase_coded_v",
                                         "fmcw_up",       "fmcw_down"};

int run_waveform(const RunConfig& cfg, const std::string& kind, int k0, int l0,
                 const std::string& out) {
  const ComplexFrame frame = build_frame(cfg, kind, k0, l0);
  write_frame_csv(out, frame);
  std::printf("%s: %zu samples at %g Hz, energy %.6f -> %s\n", kind.c_str(), frame.size(),
              frame.sample_rate_hz, frame.energy(), out.c_str());
  return 0;
}

int run_ambiguity(const RunConfig& cfg, const std::string& sig_kind, const std::string& ref_kind,
                  int k0, int l0, bool energy, const std::string& out) {
  const ComplexFrame sig = build_frame(cfg, sig_kind, k0, l0);
  const ComplexFrame ref = build_frame(cfg, ref_kind, 0, 0);
  if (sig.size() != ref.size()) {
    throw CLI::ValidationError("ambiguity", "'" + sig_kind + "' and '" + ref_kind +
                                                "' frames have different lengths");
  }
  const int os = frame_oversample(cfg, ref_kind);

  DDSurface surface(cfg.params.m, cfg.params.n);
  std::vector<int> delays(static_cast<std::size_t>(cfg.params.m));
  for (int k = 0; k < cfg.params.m; ++k) delays[static_cast<std::size_t>(k)] = os * k;
  std::vector<int> dopplers;
  for (int l = surface.doppler_min(); l <= surface.doppler_max(); ++l) dopplers.push_back(l);
  const std::vector<cvec> rows = cross_ambiguity_direct(sig, ref, delays, dopplers);
  for (int k = 0; k < cfg.params.m; ++k) {
    for (std::size_t li = 0; li < dopplers.size(); ++li) {
      surface.at(k, dopplers[li]) = rows[static_cast<std::size_t>(k)][li];
    }
  }

  if (energy) {
    write_surface_energy_csv(out, surface);
  } else {
    write_surface_complex_csv(out, surface);
  }
  std::printf("A_{%s,%s} on the %dx%d read grid -> %s\n", sig_kind.c_str(), ref_kind.c_str(),
              cfg.params.m, cfg.params.n, out.c_str());
  return 0;
}

int run_crystallize(const RunConfig& cfg, const std::string& kind, const SupportBox& box,
                    double tol) {
  if (frame_oversample(cfg, kind) != 1) {
    throw CLI::ValidationError("kind", "crystallize expects a critically sampled carrier");
  }
  const ComplexFrame frame = build_frame(cfg, kind, 0, 0);
  const SupportSet support = self_ambiguity_support(frame, tol);
  const CrystallizationResult res = crystallization_check(support, box);
  std::printf("%s self-ambiguity: %zu unimodular points on Z_%d x Z_%d\n", kind.c_str(),
              support.points.size(), support.modulus, support.modulus);
  if (res.crystallized) {
    std::printf("box [%d,%d]x[%d,%d]: crystallized\n", box.k_min, box.k_max, box.l_min,
                box.l_max);
    return 0;
  }
  std::printf("box [%d,%d]x[%d,%d]: NOT crystallized, translates of (%d,%d) and (%d,%d) overlap\n",
              box.k_min, box.k_max, box.l_min, box.l_max, res.offender_a.first,
              res.offender_a.second, res.offender_b.first, res.offender_b.second);
  return 1;
}

int run_heatmap(RunConfig cfg, const std::string& scene_path, double snr_db,
                const std::string& out) {
  if (!out.empty()) cfg.out_dir = out;
  if (!cfg.out_dir.empty() && cfg.out_dir != ".") {
    std::filesystem::create_directories(cfg.out_dir);
  }
  SceneSpec scene;
  if (scene_path.empty()) {
    scene = heatmap_demo_scene(cfg.params);
  } else {
    std::ifstream in(scene_path, std::ios::binary);
    if (!in) throw CLI::ValidationError("--scene", "cannot open '" + scene_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    scene = scene_from_json(buf.str());
  }

  const HeatmapReport report = heatmap_scenario(cfg, scene, snr_db);
  static const char* names[] = {"zak", "phase_coded", "fmcw"};
  for (std::size_t i = 0; i < report.systems.size(); ++i) {
    const HeatmapSystemReport& sys = report.systems[i];
    std::printf("%-11s peaks hh=%zu hv=%zu vh=%zu vv=%zu, targets %d/%zu, false peaks %d\n",
                names[i], sys.peaks[0].size(), sys.peaks[1].size(), sys.peaks[2].size(),
                sys.peaks[3].size(), sys.targets_found, scene.paths.size(), sys.false_peaks);
  }
  std::printf("surfaces written to %s\n", cfg.out_dir.empty() ? "(skipped)" : cfg.out_dir.c_str());
  return 0;
}

int run_montecarlo(const std::string& config_path, std::uint64_t seed, bool seed_set, int trials,
                   int threads, bool threads_set, const std::string& out) {
  RunConfig cfg = resolve_config(config_path);
  if (seed_set) cfg.master_seed = seed;
  if (trials > 0) cfg.trials = trials;
  if (threads_set) cfg.threads = threads;
  if (!out.empty()) cfg.out_dir = out;
  if (!cfg.out_dir.empty() && cfg.out_dir != ".") {
    std::filesystem::create_directories(cfg.out_dir);
  }

  const std::vector<TrialRecord> records = run_monte_carlo(cfg);
  write_records_csv(join(cfg.out_dir, "records.csv"), records);

  std::string summary = "metric,value\n";
  const RocCurve pooled = roc_curve(records);
  write_roc_csv(join(cfg.out_dir, "roc_pooled.csv"), pooled);
  summary += "auc_pooled," + std::to_string(pooled.auc) + "\n";
  std::printf("pooled AUC %.4f over %zu records\n", pooled.auc, records.size());

  for (double snr : cfg.snr_db) {
    std::vector<TrialRecord> slice;
    for (const TrialRecord& r : records) {
      if (r.snr_db == snr) slice.push_back(r);
    }
    const RocCurve roc = roc_curve(slice);
    const std::string tag = trim_number(snr);
    write_roc_csv(join(cfg.out_dir, "roc_snr_" + tag + ".csv"), roc);
    summary += "auc_snr_" + tag + "," + std::to_string(roc.auc) + "\n";
    std::printf("  snr %+6.1f dB: AUC %.4f\n", snr, roc.auc);
  }

  const std::vector<RmseRow> rmse = rmse_curves(records, cfg.params);
  write_rmse_csv(join(cfg.out_dir, "rmse.csv"), rmse);
  for (const RmseRow& row : rmse) {
    std::printf("  snr %+6.1f dB: miss %.3f, delay rmse %.3f, doppler rmse %.3f bins\n",
                row.snr_db, row.miss_rate, row.delay_rmse_bins, row.doppler_rmse_bins);
  }

  std::ofstream(join(cfg.out_dir, "summary.csv"), std::ios::binary) << summary;
  std::ofstream(join(cfg.out_dir, "config.json"), std::ios::binary) << config_to_json(cfg);
  return 0;
}

struct SelfTest {
  int failures = 0;
  void check(const std::string& name, bool ok, const std::string& detail = "") {
    if (ok) {
      std::printf("ok   %s\n", name.c_str());
    } else {
      ++failures;
      std::printf("FAIL %s%s%s\n", name.c_str(), detail.empty() ? "" : ": ",
                  detail.c_str());
    }
  }
};

int run_selftest() {
  SelfTest t;

  {
    // Spread carrier against the transform route, every grid point of a toy grid.
    const ZakParams params{3, 5, 3.0 / 930000.0, 30000.0};
    const GdaftParams g{1, 1, 1};
    double worst = 0.0;
    for (int k0 = 0; k0 < params.m; ++k0) {
      for (int l0 = 0; l0 < params.n; ++l0) {
        const ComplexFrame direct = spread_carrier(params, g, k0, l0);
        const ComplexFrame via_transform = gdaft_direct(params, g, pulsone(params, k0, l0));
        for (int n = 0; n < params.grid_size(); ++n) {
          worst = std::max(worst, std::abs(direct.samples[static_cast<std::size_t>(n)] -
                                           via_transform.samples[static_cast<std::size_t>(n)]));
        }
      }
    }
    t.check("spread carrier closed form matches transform route", worst <= 1e-9,
            "worst " + std::to_string(worst));
  }

  const ZakParams params{31, 37, 31.0 / 930000.0, 30000.0};
  const int len = params.grid_size();

  {
    // Fast ambiguity path against the direct sum on random frames.
    RandomStream rng(0xfeedULL);
    ComplexFrame a, b;
    a.sample_rate_hz = b.sample_rate_hz = params.bandwidth_hz();
    for (int i = 0; i < len; ++i) {
      a.samples.push_back(rng.complex_normal());
      b.samples.push_back(rng.complex_normal());
    }
    Dft dft(len);
    const std::vector<int> delays = {0, 5, 17};
    const std::vector<cvec> fast = cross_ambiguity_fast(a, b, delays, dft);
    double worst = 0.0;
    for (std::size_t di = 0; di < delays.size(); ++di) {
      for (int l : {0, 1, 600, len - 3}) {
        const cplx ref = cross_ambiguity_point(a, b, delays[di], l);
        worst = std::max(worst, std::abs(fast[di][static_cast<std::size_t>(l)] - ref));
      }
    }
    t.check("fast ambiguity path matches direct sums", worst <= 1e-9,
            "worst " + std::to_string(worst));
  }

  {
    // Pulsone self-ambiguity support is the (M,N) period lattice.
    const SupportSet support = self_ambiguity_support(pulsone(params, 0, 0), 1e-6);
    bool lattice = support.points.size() == static_cast<std::size_t>(len);
    for (const auto& [k, l] : support.points) {
      lattice = lattice && k % params.m == 0 && l % params.n == 0;
    }
    t.check("pulsone self-ambiguity support is the period lattice", lattice,
            std::to_string(support.points.size()) + " points");
  }

  {
    // Mutual unbiasedness spot check: |A| = 1/sqrt(MN) at random bins.
    const ComplexFrame p = pulsone(params, 0, 0);
    const ComplexFrame c = spread_carrier(params, GdaftParams{1, 1, 1}, 0, 0);
    RandomStream rng(0xbead5ULL);
    double worst = 0.0;
    for (int i = 0; i < 64; ++i) {
      const int k = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(len));
      const int l = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(len));
      const double mag = std::abs(cross_ambiguity_point(c, p, k, l));
      worst = std::max(worst, std::abs(mag * std::sqrt(static_cast<double>(len)) - 1.0));
    }
    t.check("spread carrier is unbiased under the pulsone filter", worst <= 1e-9,
            "worst " + std::to_string(worst));
  }

  {
    // Noise calibration: a 0 dB draw against unit reference energy carries
    // frame energy near 1.
    RandomStream rng(0xca11b8ULL);
    const double var = noise_variance(0.0, 1.0, params.bandwidth_hz(), params);
    double energy = 0.0;
    for (int i = 0; i < len; ++i) energy += std::norm(std::sqrt(var) * rng.complex_normal());
    t.check("0 dB noise draw carries unit in-band energy", std::abs(energy - 1.0) < 0.15,
            "energy " + std::to_string(energy));
  }

  {
    DDSurface flat(params.m, params.n);
    for (cplx& v : flat.values) v = cplx{1.0, 0.0};
    DDSurface single(params.m, params.n);
    single.at(3, 2) = cplx{2.5, 0.0};
    DDSurface two(params.m, params.n);
    two.at(1, 0) = cplx{1.0, 0.0};
    two.at(2, 0) = cplx{0.0, 1.0};
    const double expect_two = 1.0 - 1.0 / std::log2(static_cast<double>(len));
    const bool ok = std::abs(entropy_weight(flat)) <= 1e-12 &&
                    std::abs(entropy_weight(single) - 1.0) <= 1e-12 &&
                    std::abs(entropy_weight(two) - expect_two) <= 1e-12;
    t.check("entropy weight analytic cases", ok);
  }

  if (t.failures == 0) {
    std::printf("selftest: all checks passed\n");
    return 0;
  }
  std::printf("selftest: %d check(s) FAILED\n", t.failures);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delay-Doppler polarimetry toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);

  auto* wave = app.add_subcommand("waveform", "emit one transmit frame as CSV");
  std::string wave_kind = "pulsone";
  int wave_k0 = 0, wave_l0 = 0;
  std::string wave_out = "frame.csv";
  wave->add_option("--kind", wave_kind, "waveform kind")->check(CLI::IsMember(kKinds));
  wave->add_option("--k0", wave_k0, "delay grid index of the carrier");
  wave->add_option("--l0", wave_l0, "Doppler grid index of the carrier");
  wave->add_option("--out", wave_out, "output CSV path");

  auto* ambig = app.add_subcommand("ambiguity", "emit a cross-ambiguity surface as CSV");
  std::string ambig_sig = "pulsone", ambig_ref = "pulsone";
  int ambig_k0 = 0, ambig_l0 = 0;
  bool ambig_energy = false;
  std::string ambig_out = "ambiguity.csv";
  ambig->add_option("--sig", ambig_sig, "received-side waveform kind")->check(CLI::IsMember(kKinds));
  ambig->add_option("--ref", ambig_ref, "reference waveform kind")->check(CLI::IsMember(kKinds));
  ambig->add_option("--k0", ambig_k0, "delay index applied to the received side");
  ambig->add_option("--l0", ambig_l0, "Doppler index applied to the received side");
  ambig->add_flag("--energy", ambig_energy, "write energy instead of re/im pairs");
  ambig->add_option("--out", ambig_out, "output CSV path");

  auto* cryst = app.add_subcommand("crystallize", "check a box against a carrier's support");
  std::string cryst_kind = "pulsone";
  SupportBox cryst_box{0, 7, -4, 4};
  double cryst_tol = 1e-6;
  cryst->add_option("--kind", cryst_kind, "carrier kind")->check(CLI::IsMember(kKinds));
  cryst->add_option("--k-min", cryst_box.k_min, "box delay minimum");
  cryst->add_option("--k-max", cryst_box.k_max, "box delay maximum");
  cryst->add_option("--l-min", cryst_box.l_min, "box Doppler minimum");
  cryst->add_option("--l-max", cryst_box.l_max, "box Doppler maximum");
  cryst->add_option("--tol", cryst_tol, "unimodularity tolerance");

  auto* heat = app.add_subcommand("heatmap", "four-target scenario across the three systems");
  std::string heat_scene;
  double heat_snr = 20.0;
  std::string heat_out;
  heat->add_option("--scene", heat_scene, "scene JSON path (default: built-in four targets)");
  heat->add_option("--snr", heat_snr, "SNR in dB");
  heat->add_option("--out", heat_out, "output directory for the surface CSVs");

  auto* mc = app.add_subcommand("montecarlo", "detection / estimation sweep with CSV outputs");
  std::uint64_t mc_seed = 0;
  int mc_trials = 0;
  int mc_threads = 0;
  std::string mc_out;
  auto* mc_seed_opt = mc->add_option("--seed", mc_seed, "master seed override");
  mc->add_option("--trials", mc_trials, "trials per SNR override");
  auto* mc_threads_opt = mc->add_option("--threads", mc_threads, "worker thread override");
  mc->add_option("--out", mc_out, "output directory override");

  auto* self = app.add_subcommand("selftest", "fast oracle equivalence checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (wave->parsed()) {
      return run_waveform(resolve_config(config_path), wave_kind, wave_k0, wave_l0, wave_out);
    }
    if (ambig->parsed()) {
      return run_ambiguity(resolve_config(config_path), ambig_sig, ambig_ref, ambig_k0, ambig_l0,
                           ambig_energy, ambig_out);
    }
    if (cryst->parsed()) {
      return run_crystallize(resolve_config(config_path), cryst_kind, cryst_box, cryst_tol);
    }
    if (heat->parsed()) {
      return run_heatmap(resolve_config(config_path), heat_scene, heat_snr, heat_out);
    }
    if (mc->parsed()) {
      return run_montecarlo(config_path, mc_seed, !mc_seed_opt->empty(), mc_trials, mc_threads,
                            !mc_threads_opt->empty(), mc_out);
    }
    if (self->parsed()) return run_selftest();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
