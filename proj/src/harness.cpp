#include "ddpol/harness.hpp"

#include "ddpol/ambiguity.hpp"
#include "ddpol/waveform.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ddpol {

namespace {

using nlohmann::json;

const char* system_name(SystemKind s) {
  switch (s) {
    case SystemKind::zak: return "zak";
    case SystemKind::phase_coded: return "phase_coded";
    case SystemKind::fmcw: return "fmcw";
  }
  return "?";
}

SystemKind system_from_name(const std::string& s) {
  if (s == "zak") return SystemKind::zak;
  if (s == "phase_coded") return SystemKind::phase_coded;
  if (s == "fmcw") return SystemKind::fmcw;
  throw std::invalid_argument("unknown system '" + s + "'");
}

const char* polarization_name(DetectionMode m) {
  return m == DetectionMode::uni ? "uni" : "dual";
}

DetectionMode polarization_from_name(const std::string& s) {
  if (s == "uni") return DetectionMode::uni;
  if (s == "dual") return DetectionMode::dual;
  throw std::invalid_argument("unknown polarization '" + s + "'");
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const char* scope) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) {
      throw std::invalid_argument(std::string("unknown config key '") + item.key() + "' in " +
                                  scope);
    }
  }
}

// Order-independent per-stream seeds: fold each index into a splitmix64 step.
std::uint64_t fold_seed(std::uint64_t state, std::uint64_t v) {
  state += 0x9E3779B97F4A7C15ULL * (v + 0x9E3779B97F4A7C15ULL);
  return splitmix64(state);
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  return fold_seed(fold_seed(fold_seed(master, a), b), c);
}

ComplexFrame zero_frame_like(const ComplexFrame& ref) {
  ComplexFrame z;
  z.sample_rate_hz = ref.sample_rate_hz;
  z.samples.assign(ref.samples.size(), cplx{0.0, 0.0});
  return z;
}

// Transmit-side frames for one configuration; trial-independent.
struct TxSet {
  // zak / phase_coded simultaneous frames (xv zeroed in uni mode).
  ComplexFrame xh;
  ComplexFrame xv;
  // fmcw composite [up|down]/sqrt(2) frame, transmitted per slot.
  ComplexFrame composite;
};

TxSet make_tx(const RunConfig& cfg) {
  TxSet tx;
  const bool dual = cfg.polarization == DetectionMode::dual;
  switch (cfg.system) {
    case SystemKind::zak: {
      tx.xh = pulsone(cfg.params, 0, 0);
      tx.xv = dual ? spread_carrier(cfg.params, cfg.gdaft, 0, 0) : zero_frame_like(tx.xh);
      break;
    }
    case SystemKind::phase_coded: {
      const int len = cfg.params.grid_size();
      tx.xh = phase_coded_frame(cfg.params, zadoff_chu(len, cfg.zc_root_h), cfg.oversample);
      tx.xv = dual ? phase_coded_frame(cfg.params, zadoff_chu(len, cfg.zc_root_v), cfg.oversample)
                   : zero_frame_like(tx.xh);
      break;
    }
    case SystemKind::fmcw: {
      const FmcwPair pair = fmcw_frame(cfg.params, cfg.oversample);
      const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
      tx.composite.sample_rate_hz = pair.up.sample_rate_hz;
      tx.composite.samples.reserve(pair.up.size() * 2);
      for (const cplx& s : pair.up.samples) tx.composite.samples.push_back(s * inv_sqrt2);
      for (const cplx& s : pair.down.samples) tx.composite.samples.push_back(s * inv_sqrt2);
      break;
    }
  }
  return tx;
}

cvec draw_noise(std::size_t len, double amp, RandomStream& rng) {
  cvec w(len);
  for (cplx& s : w) s = amp * rng.complex_normal();
  return w;
}

ComplexFrame with_noise(const ComplexFrame& y, const cvec& w) {
  ComplexFrame out = y;
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += w[i];
  return out;
}

ComplexFrame noise_only(const cvec& w, double rate) {
  ComplexFrame out;
  out.sample_rate_hz = rate;
  out.samples = w;
  return out;
}

void analyze(const RunConfig& cfg, const PolChannelEstimate& est, int k_bin, int l_bin,
             TrialRecord& rec) {
  rec.outcome = detection_statistic(est, k_bin, l_bin, cfg.polarization);
  const std::array<SurfacePeak, 4> peaks =
      threshold_and_peak(est, cfg.roi, cfg.guard_k, cfg.guard_l, cfg.pfa);
  std::array<double, 4> weights{};
  for (std::size_t s = 0; s < 4; ++s) weights[s] = entropy_weight(est.surfaces[s]);
  rec.estimate = fuse_estimates(peaks, weights);
}

// Both hypotheses of one trial; noise realization is shared (CRN pairing).
void run_trial(const RunConfig& cfg, const TxSet& tx, const PulseShape& shape,
               std::size_t snr_index, int trial, TrialRecord& absent, TrialRecord& present) {
  const double snr_db = cfg.snr_db[snr_index];
  RandomStream scene_rng(stream_seed(cfg.master_seed, snr_index, static_cast<std::uint64_t>(trial), 0));
  RandomStream noise_rng(stream_seed(cfg.master_seed, snr_index, static_cast<std::uint64_t>(trial), 1));

  const auto [tau, nu] = draw_target_geometry(scene_rng, cfg.params);
  const Mat2c gain = draw_polar_response(scene_rng);
  SceneSpec scene;
  scene.paths.push_back(PolPath{tau, nu, gain});

  const int k_bin = static_cast<int>(std::lround(tau * cfg.params.bandwidth_hz()));
  const int l_bin = static_cast<int>(std::lround(nu * cfg.params.frame_duration_s()));

  for (TrialRecord* rec : {&absent, &present}) {
    rec->trial = trial;
    rec->snr_db = snr_db;
    rec->tau_true_s = tau;
    rec->nu_true_hz = nu;
  }
  absent.target_present = false;
  present.target_present = true;
  present.gain_true = gain;

  const bool uni = cfg.polarization == DetectionMode::uni;
  if (cfg.system == SystemKind::fmcw) {
    const double rate = tx.composite.sample_rate_hz;
    const double amp = std::sqrt(noise_variance(snr_db, 1.0, rate, cfg.params));
    const ComplexFrame zero = zero_frame_like(tx.composite);
    // Noise draw order: slot-1 H, then (dual only) slot-1 V, slot-2 H, slot-2 V.
    const cvec w1h = draw_noise(zero.size(), amp, noise_rng);
    const cvec w1v = uni ? cvec() : draw_noise(zero.size(), amp, noise_rng);
    const cvec w2h = uni ? cvec() : draw_noise(zero.size(), amp, noise_rng);
    const cvec w2v = uni ? cvec() : draw_noise(zero.size(), amp, noise_rng);

    const PolFramePair slot1 = apply_pol_channel(zero, tx.composite, scene, cfg.params, shape);
    const PolFramePair slot2 =
        uni ? PolFramePair{zero, zero} : apply_pol_channel(tx.composite, zero, scene, cfg.params, shape);

    PolFramePair p1{uni ? zero : with_noise(slot1.v, w1v), with_noise(slot1.h, w1h)};
    PolFramePair p2{uni ? zero : with_noise(slot2.v, w2v),
                    uni ? zero : with_noise(slot2.h, w2h)};
    PolFramePair a1{uni ? zero : noise_only(w1v, rate), noise_only(w1h, rate)};
    PolFramePair a2{uni ? zero : noise_only(w2v, rate), uni ? zero : noise_only(w2h, rate)};

    analyze(cfg, estimate_pol_channels_fmcw(a1, a2, cfg.params), k_bin, l_bin, absent);
    analyze(cfg, estimate_pol_channels_fmcw(p1, p2, cfg.params), k_bin, l_bin, present);
    return;
  }

  const double rate = tx.xh.sample_rate_hz;
  const double amp = std::sqrt(noise_variance(snr_db, 1.0, rate, cfg.params));
  // Noise draw order: H frame, then (dual only) V frame.
  const cvec wh = draw_noise(tx.xh.size(), amp, noise_rng);
  const cvec wv = uni ? cvec() : draw_noise(tx.xh.size(), amp, noise_rng);
  const ComplexFrame zero = zero_frame_like(tx.xh);

  const PolFramePair clean = apply_pol_channel(tx.xv, tx.xh, scene, cfg.params, shape);
  const ComplexFrame yh = with_noise(clean.h, wh);
  const ComplexFrame yv = uni ? zero : with_noise(clean.v, wv);
  const ComplexFrame ah = noise_only(wh, rate);
  const ComplexFrame av = uni ? zero : noise_only(wv, rate);

  const auto estimate = cfg.system == SystemKind::zak ? estimate_pol_channels_zak
                                                      : estimate_pol_channels_phase_coded;
  analyze(cfg, estimate(av, ah, tx.xv, tx.xh, cfg.params), k_bin, l_bin, absent);
  analyze(cfg, estimate(yv, yh, tx.xv, tx.xh, cfg.params), k_bin, l_bin, present);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace

void validate_config(const RunConfig& cfg) {
  validate_params(cfg.params.m, cfg.params.n, cfg.params.delay_period_s,
                  cfg.params.doppler_period_hz);
  validate_gdaft(cfg.gdaft.a, cfg.gdaft.b, cfg.gdaft.c, cfg.params.grid_size());
  if (cfg.trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (cfg.snr_db.empty()) throw std::invalid_argument("snr_db list must be nonempty");
  if (cfg.oversample < 2 || cfg.oversample % 2 != 0) {
    throw std::invalid_argument("oversample must be even and at least 2");
  }
  const int grid = cfg.params.grid_size();
  if (cfg.zc_root_h == cfg.zc_root_v) {
    throw std::invalid_argument("phase-coded ports need distinct Zadoff-Chu roots");
  }
  for (int root : {cfg.zc_root_h, cfg.zc_root_v}) {
    if (root < 1 || root >= grid || std::gcd(root, grid) != 1) {
      throw std::invalid_argument("Zadoff-Chu roots must lie in [1, MN) and be coprime with MN");
    }
  }
  if (!(cfg.pfa > 0.0 && cfg.pfa < 1.0)) throw std::invalid_argument("pfa must lie in (0, 1)");
  if (cfg.guard_k < 0 || cfg.guard_l < 0) {
    throw std::invalid_argument("guard widths must be nonnegative");
  }
  if (cfg.sinc_half_width < 8) throw std::invalid_argument("sinc_half_width must be at least 8");
  if (cfg.threads < 0) throw std::invalid_argument("threads must be nonnegative");
  if (cfg.roi.k_min < 0 || cfg.roi.k_max >= cfg.params.m || cfg.roi.k_min > cfg.roi.k_max ||
      cfg.roi.l_min < -(cfg.params.n / 2) || cfg.roi.l_max > cfg.params.n / 2 ||
      cfg.roi.l_min > cfg.roi.l_max) {
    throw std::invalid_argument("roi must be a nonempty box inside the fundamental domain");
  }
}

RunConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  reject_unknown_keys(j,
                      {"system", "polarization", "snr_db", "trials", "master_seed", "grid",
                       "gdaft", "zc_root_h", "zc_root_v", "oversample", "pfa", "guard_k",
                       "guard_l", "roi", "sinc_half_width", "threads", "out_dir"},
                      "config");
  RunConfig cfg;
  if (j.contains("system")) cfg.system = system_from_name(j.at("system").get<std::string>());
  if (j.contains("polarization")) {
    cfg.polarization = polarization_from_name(j.at("polarization").get<std::string>());
  }
  if (j.contains("snr_db")) cfg.snr_db = j.at("snr_db").get<std::vector<double>>();
  if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
  if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    reject_unknown_keys(g, {"m", "n", "delay_period_s", "doppler_period_hz"}, "grid");
    if (g.contains("m")) cfg.params.m = g.at("m").get<int>();
    if (g.contains("n")) cfg.params.n = g.at("n").get<int>();
    if (g.contains("delay_period_s")) cfg.params.delay_period_s = g.at("delay_period_s").get<double>();
    if (g.contains("doppler_period_hz")) {
      cfg.params.doppler_period_hz = g.at("doppler_period_hz").get<double>();
    }
  }
  if (j.contains("gdaft")) {
    const json& g = j.at("gdaft");
    reject_unknown_keys(g, {"a", "b", "c"}, "gdaft");
    if (g.contains("a")) cfg.gdaft.a = g.at("a").get<long long>();
    if (g.contains("b")) cfg.gdaft.b = g.at("b").get<long long>();
    if (g.contains("c")) cfg.gdaft.c = g.at("c").get<long long>();
  }
  if (j.contains("zc_root_h")) cfg.zc_root_h = j.at("zc_root_h").get<int>();
  if (j.contains("zc_root_v")) cfg.zc_root_v = j.at("zc_root_v").get<int>();
  if (j.contains("oversample")) cfg.oversample = j.at("oversample").get<int>();
  if (j.contains("pfa")) cfg.pfa = j.at("pfa").get<double>();
  if (j.contains("guard_k")) cfg.guard_k = j.at("guard_k").get<int>();
  if (j.contains("guard_l")) cfg.guard_l = j.at("guard_l").get<int>();
  if (j.contains("roi")) {
    const json& r = j.at("roi");
    reject_unknown_keys(r, {"k_min", "k_max", "l_min", "l_max"}, "roi");
    if (r.contains("k_min")) cfg.roi.k_min = r.at("k_min").get<int>();
    if (r.contains("k_max")) cfg.roi.k_max = r.at("k_max").get<int>();
    if (r.contains("l_min")) cfg.roi.l_min = r.at("l_min").get<int>();
    if (r.contains("l_max")) cfg.roi.l_max = r.at("l_max").get<int>();
  }
  if (j.contains("sinc_half_width")) cfg.sinc_half_width = j.at("sinc_half_width").get<int>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string config_to_json(const RunConfig& cfg) {
  json j;
  j["system"] = system_name(cfg.system);
  j["polarization"] = polarization_name(cfg.polarization);
  j["snr_db"] = cfg.snr_db;
  j["trials"] = cfg.trials;
  j["master_seed"] = cfg.master_seed;
  j["grid"] = {{"m", cfg.params.m},
               {"n", cfg.params.n},
               {"delay_period_s", cfg.params.delay_period_s},
               {"doppler_period_hz", cfg.params.doppler_period_hz}};
  j["gdaft"] = {{"a", cfg.gdaft.a}, {"b", cfg.gdaft.b}, {"c", cfg.gdaft.c}};
  j["zc_root_h"] = cfg.zc_root_h;
  j["zc_root_v"] = cfg.zc_root_v;
  j["oversample"] = cfg.oversample;
  j["pfa"] = cfg.pfa;
  j["guard_k"] = cfg.guard_k;
  j["guard_l"] = cfg.guard_l;
  j["roi"] = {{"k_min", cfg.roi.k_min},
              {"k_max", cfg.roi.k_max},
              {"l_min", cfg.roi.l_min},
              {"l_max", cfg.roi.l_max}};
  j["sinc_half_width"] = cfg.sinc_half_width;
  j["threads"] = cfg.threads;
  j["out_dir"] = cfg.out_dir;
  return j.dump(2) + "\n";
}

std::vector<TrialRecord> run_monte_carlo(const RunConfig& cfg) {
  validate_config(cfg);
  const TxSet tx = make_tx(cfg);
  PulseShape shape;
  shape.half_width = cfg.sinc_half_width;

  std::vector<TrialRecord> records(cfg.snr_db.size() * static_cast<std::size_t>(cfg.trials) * 2);
  const unsigned hw = std::thread::hardware_concurrency();
  const int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(hw > 0 ? hw : 1);

  // Per-trial records land in preassigned slots, so chunking cannot affect
  // output order.
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&](int first, int last) {
    try {
      for (int t = first; t < last; ++t) {
        for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
          const std::size_t base = (si * static_cast<std::size_t>(cfg.trials) +
                                    static_cast<std::size_t>(t)) *
                                   2;
          run_trial(cfg, tx, shape, si, t, records[base], records[base + 1]);
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (threads <= 1) {
    worker(0, cfg.trials);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (cfg.trials + threads - 1) / threads;
    for (int i = 0; i < threads; ++i) {
      const int first = i * chunk;
      const int last = std::min(cfg.trials, first + chunk);
      if (first >= last) break;
      pool.emplace_back(worker, first, last);
    }
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

RocCurve roc_curve(const std::vector<TrialRecord>& records) {
  std::vector<double> positives;
  std::vector<double> negatives;
  bool saw_present = false;
  bool saw_absent = false;
  for (const TrialRecord& r : records) {
    (r.target_present ? saw_present : saw_absent) = true;
    if (r.target_present) positives.push_back(r.outcome.statistic_present);
    negatives.push_back(r.outcome.statistic_floor);
  }
  if (!saw_present || !saw_absent) {
    throw std::invalid_argument("ROC needs records from both hypotheses");
  }

  // Mann-Whitney AUC with average ranks on ties.
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  all.reserve(positives.size() + negatives.size());
  for (double s : positives) all.push_back({s, true});
  for (double s : negatives) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t q = i; q < j; ++q) {
      if (all[q].positive) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(positives.size());
  const double nn = static_cast<double>(negatives.size());

  RocCurve roc;
  roc.auc = (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);

  // Threshold sweep from +inf down through every distinct score.
  std::sort(positives.begin(), positives.end(), std::greater<double>());
  std::sort(negatives.begin(), negatives.end(), std::greater<double>());
  roc.points.push_back({0.0, 0.0});
  std::size_t ip = 0;
  std::size_t in = 0;
  while (ip < positives.size() || in < negatives.size()) {
    const double t = std::max(ip < positives.size() ? positives[ip] : -std::numeric_limits<double>::infinity(),
                              in < negatives.size() ? negatives[in] : -std::numeric_limits<double>::infinity());
    while (ip < positives.size() && positives[ip] >= t) ++ip;
    while (in < negatives.size() && negatives[in] >= t) ++in;
    roc.points.push_back({static_cast<double>(in) / nn, static_cast<double>(ip) / np});
  }
  return roc;
}

std::vector<RmseRow> rmse_curves(const std::vector<TrialRecord>& records,
                                 const ZakParams& params) {
  const double b = params.bandwidth_hz();
  const double t = params.frame_duration_s();
  std::vector<RmseRow> rows;
  std::vector<double> sq_delay;
  std::vector<double> sq_doppler;
  const auto index_for = [&](double snr) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].snr_db == snr) return i;
    }
    rows.push_back(RmseRow{snr, 0, 0, 0.0, 0.0, 0.0});
    sq_delay.push_back(0.0);
    sq_doppler.push_back(0.0);
    return rows.size() - 1;
  };

  for (const TrialRecord& r : records) {
    if (!r.target_present) continue;
    const std::size_t i = index_for(r.snr_db);
    ++rows[i].present_trials;
    if (!r.estimate.detected) continue;
    ++rows[i].detected;
    const double dk = r.estimate.k_hat - r.tau_true_s * b;
    const double dl = r.estimate.l_hat - r.nu_true_hz * t;
    sq_delay[i] += dk * dk;
    sq_doppler[i] += dl * dl;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    RmseRow& row = rows[i];
    row.miss_rate = 1.0 - static_cast<double>(row.detected) / row.present_trials;
    row.delay_rmse_bins = row.detected > 0 ? std::sqrt(sq_delay[i] / row.detected) : nan;
    row.doppler_rmse_bins = row.detected > 0 ? std::sqrt(sq_doppler[i] / row.detected) : nan;
  }
  return rows;
}

SceneSpec heatmap_demo_scene(const ZakParams& params) {
  const double b = params.bandwidth_hz();
  const double t = params.frame_duration_s();
  const auto at = [&](int k, int l, cplx hh, cplx hv, cplx vv) {
    PolPath p;
    p.delay_s = k / b;
    p.doppler_hz = l / t;
    p.gain.hh = hh;
    p.gain.hv = hv;
    p.gain.vh = hv;
    p.gain.vv = vv;
    return p;
  };
  SceneSpec scene;
  scene.paths.push_back(at(1, 2, 0.7, 0.0, 0.0));
  scene.paths.push_back(at(5, -2, 0.7, 0.0, 0.0));
  scene.paths.push_back(at(3, 3, 0.0, 0.3, 0.0));
  scene.paths.push_back(at(6, -3, 0.0, 0.95, 0.0));
  return scene;
}

namespace {

// Heatmap noise streams live apart from the Monte Carlo ones.
constexpr std::uint64_t kHeatmapTag = 0x68656174ULL;

// Local maxima above the CFAR threshold inside the ROI. Ties across a plateau
// count once: the lexicographically smallest bin wins. Neighbor comparisons
// clamp at the domain edge rather than wrapping.
std::vector<HeatmapPeak> collect_peaks(const DDSurface& surf, const RunConfig& cfg) {
  const double threshold = cfar_threshold(surf, cfg.roi, cfg.guard_k, cfg.guard_l, cfg.pfa);
  std::vector<HeatmapPeak> peaks;
  for (int k = cfg.roi.k_min; k <= cfg.roi.k_max; ++k) {
    for (int l = cfg.roi.l_min; l <= cfg.roi.l_max; ++l) {
      const double e = std::norm(surf.at(k, l));
      if (e <= threshold) continue;
      bool is_peak = true;
      for (int dk = -1; dk <= 1 && is_peak; ++dk) {
        for (int dl = -1; dl <= 1; ++dl) {
          if (dk == 0 && dl == 0) continue;
          const int nk = k + dk;
          const int nl = l + dl;
          if (nk < 0 || nk >= surf.m || nl < surf.doppler_min() || nl > surf.doppler_max()) {
            continue;
          }
          const double ne = std::norm(surf.at(nk, nl));
          if (ne > e || (ne == e && (nk < k || (nk == k && nl < l)))) {
            is_peak = false;
            break;
          }
        }
      }
      if (is_peak) peaks.push_back(HeatmapPeak{k, l, e, false});
    }
  }
  return peaks;
}

}  // namespace

HeatmapReport heatmap_scenario(const RunConfig& cfg, const SceneSpec& scene, double snr_db) {
  validate_config(cfg);
  PulseShape shape;
  shape.half_width = cfg.sinc_half_width;

  // A target counts toward surface (j,i) only where its gain entry is nonzero.
  struct Truth {
    int k;
    int l;
    std::array<bool, 4> lit;
  };
  std::vector<Truth> truth;
  for (const PolPath& p : scene.paths) {
    Truth t;
    t.k = static_cast<int>(std::lround(p.delay_s * cfg.params.bandwidth_hz()));
    t.l = static_cast<int>(std::lround(p.doppler_hz * cfg.params.frame_duration_s()));
    for (int rx = 0; rx < 2; ++rx) {
      for (int tx = 0; tx < 2; ++tx) {
        t.lit[PolChannelEstimate::index(static_cast<Pol>(rx), static_cast<Pol>(tx))] =
            std::abs(p.gain.entry(static_cast<Pol>(rx), static_cast<Pol>(tx))) > 0.0;
      }
    }
    truth.push_back(t);
  }

  static const char* surface_names[4] = {"hh", "hv", "vh", "vv"};
  const SystemKind systems[3] = {SystemKind::zak, SystemKind::phase_coded, SystemKind::fmcw};

  HeatmapReport report;
  for (std::size_t si = 0; si < 3; ++si) {
    RunConfig sys_cfg = cfg;
    sys_cfg.system = systems[si];
    sys_cfg.polarization = DetectionMode::dual;
    const TxSet tx = make_tx(sys_cfg);
    RandomStream noise_rng(stream_seed(cfg.master_seed, kHeatmapTag, si, 0));

    PolChannelEstimate est;
    if (sys_cfg.system == SystemKind::fmcw) {
      const double rate = tx.composite.sample_rate_hz;
      const double amp = std::sqrt(noise_variance(snr_db, 1.0, rate, cfg.params));
      const ComplexFrame zero = zero_frame_like(tx.composite);
      const cvec w1h = draw_noise(zero.size(), amp, noise_rng);
      const cvec w1v = draw_noise(zero.size(), amp, noise_rng);
      const cvec w2h = draw_noise(zero.size(), amp, noise_rng);
      const cvec w2v = draw_noise(zero.size(), amp, noise_rng);
      const PolFramePair slot1 = apply_pol_channel(zero, tx.composite, scene, cfg.params, shape);
      const PolFramePair slot2 = apply_pol_channel(tx.composite, zero, scene, cfg.params, shape);
      const PolFramePair y1{with_noise(slot1.v, w1v), with_noise(slot1.h, w1h)};
      const PolFramePair y2{with_noise(slot2.v, w2v), with_noise(slot2.h, w2h)};
      est = estimate_pol_channels_fmcw(y1, y2, cfg.params);
    } else {
      const double rate = tx.xh.sample_rate_hz;
      const double amp = std::sqrt(noise_variance(snr_db, 1.0, rate, cfg.params));
      const cvec wh = draw_noise(tx.xh.size(), amp, noise_rng);
      const cvec wv = draw_noise(tx.xh.size(), amp, noise_rng);
      const PolFramePair clean = apply_pol_channel(tx.xv, tx.xh, scene, cfg.params, shape);
      const ComplexFrame yh = with_noise(clean.h, wh);
      const ComplexFrame yv = with_noise(clean.v, wv);
      est = sys_cfg.system == SystemKind::zak
                ? estimate_pol_channels_zak(yv, yh, tx.xv, tx.xh, cfg.params)
                : estimate_pol_channels_phase_coded(yv, yh, tx.xv, tx.xh, cfg.params);
    }

    HeatmapSystemReport sys;
    sys.system = sys_cfg.system;
    std::vector<bool> found(truth.size(), false);
    for (std::size_t s = 0; s < 4; ++s) {
      sys.peaks[s] = collect_peaks(est.surfaces[s], sys_cfg);
      for (HeatmapPeak& peak : sys.peaks[s]) {
        for (std::size_t ti = 0; ti < truth.size(); ++ti) {
          if (!truth[ti].lit[s]) continue;
          const int cheb = std::max(std::abs(peak.k - truth[ti].k), std::abs(peak.l - truth[ti].l));
          if (cheb <= 1) {
            peak.matches_target = true;
            found[ti] = true;
          }
        }
        if (!peak.matches_target) ++sys.false_peaks;
      }
      if (!cfg.out_dir.empty()) {
        const std::string path = cfg.out_dir + "/" + system_name(sys_cfg.system) + "_" +
                                 surface_names[s] + ".csv";
        write_surface_energy_csv(path, est.surfaces[s]);
      }
    }
    for (std::size_t ti = 0; ti < truth.size(); ++ti) {
      if (found[ti]) ++sys.targets_found;
    }
    report.systems.push_back(sys);
  }
  return report;
}

void write_records_csv(const std::string& path, const std::vector<TrialRecord>& records) {
  std::string out =
      "trial,snr_db,hypothesis,tau_true_s,nu_true_hz,stat_present,stat_floor,"
      "detected,k_hat,l_hat,w_hh,w_hv,w_vh,w_vv\n";
  for (const TrialRecord& r : records) {
    out += std::to_string(r.trial);
    out += ',';
    out += format_double(r.snr_db);
    out += ',';
    out += r.target_present ? '1' : '0';
    out += ',';
    out += format_double(r.tau_true_s);
    out += ',';
    out += format_double(r.nu_true_hz);
    out += ',';
    out += format_double(r.outcome.statistic_present);
    out += ',';
    out += format_double(r.outcome.statistic_floor);
    out += ',';
    out += r.estimate.detected ? '1' : '0';
    out += ',';
    out += format_double(r.estimate.k_hat);
    out += ',';
    out += format_double(r.estimate.l_hat);
    for (double w : r.estimate.weights) {
      out += ',';
      out += format_double(w);
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_roc_csv(const std::string& path, const RocCurve& roc) {
  std::string out = "false_alarm_rate,detection_rate\n";
  for (const RocPoint& p : roc.points) {
    out += format_double(p.false_alarm_rate);
    out += ',';
    out += format_double(p.detection_rate);
    out += '\n';
  }
  write_text(path, out);
}

void write_rmse_csv(const std::string& path, const std::vector<RmseRow>& rows) {
  std::string out = "snr_db,present_trials,detected,miss_rate,delay_rmse_bins,doppler_rmse_bins\n";
  for (const RmseRow& r : rows) {
    out += format_double(r.snr_db);
    out += ',';
    out += std::to_string(r.present_trials);
    out += ',';
    out += std::to_string(r.detected);
    out += ',';
    out += format_double(r.miss_rate);
    out += ',';
    out += format_double(r.delay_rmse_bins);
    out += ',';
    out += format_double(r.doppler_rmse_bins);
    out += '\n';
  }
  write_text(path, out);
}

void write_surface_energy_csv(const std::string& path, const DDSurface& surface) {
  std::string out;
  for (int k = 0; k < surface.m; ++k) {
    for (int l = surface.doppler_min(); l <= surface.doppler_max(); ++l) {
      if (l != surface.doppler_min()) out += ',';
      out += format_double(std::norm(surface.at(k, l)));
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_surface_complex_csv(const std::string& path, const DDSurface& surface) {
  std::string out;
  for (int k = 0; k < surface.m; ++k) {
    for (int l = surface.doppler_min(); l <= surface.doppler_max(); ++l) {
      if (l != surface.doppler_min()) out += ',';
      const cplx v = surface.at(k, l);
      out += format_double(v.real());
      out += ',';
      out += format_double(v.imag());
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_frame_csv(const std::string& path, const ComplexFrame& frame) {
  std::string out = "n,re,im\n";
  for (std::size_t i = 0; i < frame.samples.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(frame.samples[i].real());
    out += ',';
    out += format_double(frame.samples[i].imag());
    out += '\n';
  }
  write_text(path, out);
}

}  // namespace ddpol
