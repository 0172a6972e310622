#include "ddpol/estimation.hpp"

#include "ddpol/ambiguity.hpp"
#include "ddpol/waveform.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ddpol {

namespace {

int mod_int(long long v, int den) {
  long long r = v % den;
  if (r < 0) r += den;
  return static_cast<int>(r);
}

void check_rx_pair(const ComplexFrame& yv, const ComplexFrame& yh, const ComplexFrame& xv,
                   const ComplexFrame& xh) {
  if (yv.size() != yh.size() || yv.size() != xv.size() || yv.size() != xh.size() ||
      yv.empty()) {
    throw std::invalid_argument("estimator frames must share a nonzero length");
  }
  if (yv.sample_rate_hz != yh.sample_rate_hz || xv.sample_rate_hz != xh.sample_rate_hz ||
      yv.sample_rate_hz != xv.sample_rate_hz) {
    throw std::invalid_argument("estimator frames must share a sample rate");
  }
}

// Doppler hypothesis on the 2/T grid nearest to surface bin l, half-away-
// from-zero on the odd bins.
int nearest_hypothesis(int l) {
  return l >= 0 ? (l + 1) / 2 : -((1 - l) / 2);
}

// sum_s y[(d + offset + s) mod L] conj(ref[s]) tw[(2m s) mod L] for the
// chirp-half correlations; ref is one half (length L/2), offset selects which
// half of the composite frame it occupies.
struct HalfCorrelator {
  const cvec* y = nullptr;
  int len = 0;
  int half = 0;
  cvec tw;  // exp(-j2pi r / L)

  std::vector<double> ur, ui, twr, twi;

  HalfCorrelator(const cvec& y_, int len_) : y(&y_), len(len_), half(len_ / 2) {
    tw.resize(static_cast<std::size_t>(len));
    for (int r = 0; r < len; ++r) tw[static_cast<std::size_t>(r)] = std::polar(1.0, -kTwoPi * r / len);
    ur.resize(static_cast<std::size_t>(half));
    ui.resize(static_cast<std::size_t>(half));
    twr.resize(static_cast<std::size_t>(half));
    twi.resize(static_cast<std::size_t>(half));
  }

  void load_lag(const cvec& ref, int offset, int d) {
    for (int s = 0; s < half; ++s) {
      const int n = mod_int(static_cast<long long>(d) + offset + s, len);
      const cplx v = (*y)[static_cast<std::size_t>(n)] * std::conj(ref[static_cast<std::size_t>(s)]);
      ur[static_cast<std::size_t>(s)] = v.real();
      ui[static_cast<std::size_t>(s)] = v.imag();
    }
  }

  cplx at_hypothesis(int m) {
    const int stepint = mod_int(2LL * m, len);
    int idx = 0;
    for (int s = 0; s < half; ++s) {
      twr[static_cast<std::size_t>(s)] = tw[static_cast<std::size_t>(idx)].real();
      twi[static_cast<std::size_t>(s)] = tw[static_cast<std::size_t>(idx)].imag();
      idx += stepint;
      if (idx >= len) idx -= len;
    }
    double accr = 0.0;
    double acci = 0.0;
    for (int s = 0; s < half; ++s) {
      const std::size_t si = static_cast<std::size_t>(s);
      accr += ur[si] * twr[si] - ui[si] * twi[si];
      acci += ur[si] * twi[si] + ui[si] * twr[si];
    }
    return {accr, acci};
  }
};

}  // namespace

PolChannelEstimate estimate_pol_channels_zak(const ComplexFrame& yv, const ComplexFrame& yh,
                                             const ComplexFrame& xv, const ComplexFrame& xh,
                                             const ZakParams& params) {
  check_rx_pair(yv, yh, xv, xh);
  const int len = params.grid_size();
  if (static_cast<int>(yv.size()) != len) {
    throw std::invalid_argument("Zak estimator expects critically sampled frames (MN samples)");
  }

  PolChannelEstimate est;
  est.system = SystemKind::zak;
  est.frames_used = 1;

  Dft dft(len);
  std::vector<int> delays(static_cast<std::size_t>(params.m));
  for (int k = 0; k < params.m; ++k) delays[static_cast<std::size_t>(k)] = k;

  const ComplexFrame* rx[2] = {&yh, &yv};
  const ComplexFrame* tx[2] = {&xh, &xv};
  for (Pol j : {Pol::h, Pol::v}) {
    for (Pol i : {Pol::h, Pol::v}) {
      DDSurface& surf = est.surface(j, i);
      surf = DDSurface(params.m, params.n);
      // All-zero frames (uni mode) yield all-zero surfaces for free.
      if (rx[static_cast<int>(j)]->energy() == 0.0 || tx[static_cast<int>(i)]->energy() == 0.0) {
        continue;
      }
      const std::vector<cvec> rows =
          cross_ambiguity_fast(*rx[static_cast<int>(j)], *tx[static_cast<int>(i)], delays, dft);
      for (int k = 0; k < params.m; ++k) {
        for (int l = surf.doppler_min(); l <= surf.doppler_max(); ++l) {
          surf.at(k, l) = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(mod_int(l, len))];
        }
      }
    }
  }
  return est;
}

PolChannelEstimate estimate_pol_channels_phase_coded(const ComplexFrame& yv,
                                                     const ComplexFrame& yh,
                                                     const ComplexFrame& xv,
                                                     const ComplexFrame& xh,
                                                     const ZakParams& params) {
  check_rx_pair(yv, yh, xv, xh);
  const int grid = params.grid_size();
  const int len = static_cast<int>(yv.size());
  const int os = len / grid;
  if (os < 1 || os * grid != len) {
    throw std::invalid_argument("frame length must be an integer multiple of the grid size");
  }

  PolChannelEstimate est;
  est.system = SystemKind::phase_coded;
  est.frames_used = 1;

  std::vector<int> delays(static_cast<std::size_t>(params.m));
  for (int k = 0; k < params.m; ++k) delays[static_cast<std::size_t>(k)] = os * k;
  std::vector<int> dopplers(static_cast<std::size_t>(params.n));
  const int l_min = -(params.n / 2);
  for (int i = 0; i < params.n; ++i) dopplers[static_cast<std::size_t>(i)] = l_min + i;

  const ComplexFrame* rx[2] = {&yh, &yv};
  const ComplexFrame* tx[2] = {&xh, &xv};
  for (Pol j : {Pol::h, Pol::v}) {
    for (Pol i : {Pol::h, Pol::v}) {
      DDSurface& surf = est.surface(j, i);
      surf = DDSurface(params.m, params.n);
      if (rx[static_cast<int>(j)]->energy() == 0.0 || tx[static_cast<int>(i)]->energy() == 0.0) {
        continue;
      }
      const std::vector<cvec> rows =
          cross_ambiguity_direct(*rx[static_cast<int>(j)], *tx[static_cast<int>(i)], delays, dopplers);
      for (int k = 0; k < params.m; ++k) {
        for (int li = 0; li < params.n; ++li) {
          surf.at(k, l_min + li) = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(li)];
        }
      }
    }
  }
  return est;
}

PolChannelEstimate estimate_pol_channels_fmcw(const PolFramePair& rx_slot_h,
                                              const PolFramePair& rx_slot_v,
                                              const ZakParams& params) {
  const int grid = params.grid_size();
  const int len = static_cast<int>(rx_slot_h.v.size());
  if (len == 0 || rx_slot_h.h.size() != rx_slot_h.v.size() ||
      rx_slot_v.v.size() != rx_slot_h.v.size() || rx_slot_v.h.size() != rx_slot_h.v.size()) {
    throw std::invalid_argument("FMCW estimator needs four equal-length received frames");
  }
  const int os = len / grid;
  if (os < 2 || os % 2 != 0 || os * grid != len) {
    throw std::invalid_argument("FMCW frames must be an even oversample multiple of the grid");
  }

  const FmcwPair ref = fmcw_frame(params, os);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  cvec up(ref.up.samples.size());
  cvec down(ref.down.samples.size());
  for (std::size_t i = 0; i < up.size(); ++i) up[i] = ref.up.samples[i] * inv_sqrt2;
  for (std::size_t i = 0; i < down.size(); ++i) down[i] = ref.down.samples[i] * inv_sqrt2;
  const int half = len / 2;

  PolChannelEstimate est;
  est.system = SystemKind::fmcw;
  est.frames_used = 2;

  const int m_max = nearest_hypothesis(params.n / 2);
  const int m_count = 2 * m_max + 1;

  // Slot 1 received on both polarizations while H transmits, slot 2 while V
  // transmits: slot 1 fills the (., H) column, slot 2 the (., V) column.
  struct Job {
    const ComplexFrame* y;
    Pol rx;
    Pol tx;
  };
  const Job jobs[4] = {{&rx_slot_h.h, Pol::h, Pol::h},
                       {&rx_slot_h.v, Pol::v, Pol::h},
                       {&rx_slot_v.h, Pol::h, Pol::v},
                       {&rx_slot_v.v, Pol::v, Pol::v}};

  std::vector<cplx> up_resp(static_cast<std::size_t>(params.m) * m_count);
  std::vector<cplx> down_resp(static_cast<std::size_t>(params.m) * m_count);
  for (const Job& job : jobs) {
    DDSurface& surf = est.surface(job.rx, job.tx);
    surf = DDSurface(params.m, params.n);
    if (job.y->energy() == 0.0) continue;
    HalfCorrelator corr(job.y->samples, len);
    for (int k = 0; k < params.m; ++k) {
      const int d = os * k;
      corr.load_lag(up, 0, d);
      for (int mi = 0; mi < m_count; ++mi) {
        up_resp[static_cast<std::size_t>(k) * m_count + mi] = corr.at_hypothesis(mi - m_max);
      }
      corr.load_lag(down, half, d);
      for (int mi = 0; mi < m_count; ++mi) {
        down_resp[static_cast<std::size_t>(k) * m_count + mi] = corr.at_hypothesis(mi - m_max);
      }
    }

    for (int k = 0; k < params.m; ++k) {
      for (int l = surf.doppler_min(); l <= surf.doppler_max(); ++l) {
        const int mi = nearest_hypothesis(l) + m_max;
        const cplx vu = up_resp[static_cast<std::size_t>(k) * m_count + mi];
        const cplx vd = down_resp[static_cast<std::size_t>(k) * m_count + mi];
        // Intersecting the two ridges: the weaker half bounds the evidence
        // that a target sits at this bin; factor 2 undoes the half-energy
        // references.
        surf.at(k, l) = 2.0 * (std::abs(vu) <= std::abs(vd) ? vu : vd);
      }
    }
  }
  return est;
}

DetectionOutcome detection_statistic(const PolChannelEstimate& est, int k_bin, int l_bin,
                                     DetectionMode mode) {
  const DDSurface& ref = est.surfaces[0];
  if (k_bin < 0 || k_bin >= ref.m || l_bin < ref.doppler_min() || l_bin > ref.doppler_max()) {
    throw std::invalid_argument("detection bin outside the fundamental domain");
  }

  DetectionOutcome out;
  const std::size_t bins = ref.values.size();
  for (std::size_t s = 0; s < 4; ++s) {
    const DDSurface& surf = est.surfaces[s];
    const double at_bin = std::abs(surf.at(k_bin, l_bin));
    const double rest = surf.total_energy() - at_bin * at_bin;
    out.surface_present[s] = at_bin;
    out.surface_floor[s] = std::sqrt(std::max(0.0, rest) / static_cast<double>(bins - 1));
  }

  if (mode == DetectionMode::uni) {
    const std::size_t hh = PolChannelEstimate::index(Pol::h, Pol::h);
    out.statistic_present = out.surface_present[hh];
    out.statistic_floor = out.surface_floor[hh];
  } else {
    double best = 0.0;
    double pooled = 0.0;
    for (std::size_t s = 0; s < 4; ++s) {
      best = std::max(best, out.surface_present[s]);
      pooled += out.surface_floor[s] * out.surface_floor[s];
    }
    out.statistic_present = best;
    out.statistic_floor = std::sqrt(pooled / 4.0);
  }
  return out;
}

double cfar_threshold(const DDSurface& surface, const SupportBox& roi, int guard_k,
                      int guard_l, double pfa) {
  const int m = surface.m;
  const int n = surface.n;
  if (roi.k_min > roi.k_max || roi.l_min > roi.l_max || roi.k_min < 0 || roi.k_max >= m ||
      roi.l_min < surface.doppler_min() || roi.l_max > surface.doppler_max()) {
    throw std::invalid_argument("ROI must be a nonempty box inside the fundamental domain");
  }
  if (guard_k < 0 || guard_l < 0) throw std::invalid_argument("guard widths must be nonnegative");
  if (!(pfa > 0.0 && pfa < 1.0)) throw std::invalid_argument("pfa must lie in (0, 1)");

  // Guard-extended ROI membership on the torus.
  const int k_lo = roi.k_min - guard_k;
  const int k_span = roi.k_max + guard_k - k_lo;
  const int l_lo = roi.l_min - guard_l;
  const int l_span = roi.l_max + guard_l - l_lo;
  if (k_span >= m - 1 && l_span >= n - 1) {
    throw std::invalid_argument("guard-extended ROI leaves no noise-estimation bins");
  }

  double noise_sum = 0.0;
  long long noise_count = 0;
  for (int k = 0; k < m; ++k) {
    const int dk = ((k - k_lo) % m + m) % m;
    for (int l = surface.doppler_min(); l <= surface.doppler_max(); ++l) {
      const int dl = ((l - l_lo) % n + n) % n;
      if (dk <= k_span && dl <= l_span) continue;
      noise_sum += std::norm(surface.at(k, l));
      ++noise_count;
    }
  }
  if (noise_count == 0) {
    throw std::invalid_argument("guard-extended ROI leaves no noise-estimation bins");
  }
  return std::log(1.0 / pfa) * noise_sum / static_cast<double>(noise_count);
}

std::array<SurfacePeak, 4> threshold_and_peak(const PolChannelEstimate& est,
                                              const SupportBox& roi, int guard_k, int guard_l,
                                              double pfa) {
  std::array<SurfacePeak, 4> peaks{};
  for (std::size_t s = 0; s < 4; ++s) {
    const DDSurface& surf = est.surfaces[s];
    const double threshold = cfar_threshold(surf, roi, guard_k, guard_l, pfa);

    SurfacePeak& peak = peaks[s];
    for (int k = roi.k_min; k <= roi.k_max; ++k) {
      for (int l = roi.l_min; l <= roi.l_max; ++l) {
        const double e = std::norm(surf.at(k, l));
        if (e > threshold && (!peak.found || e > peak.energy)) {
          peak.found = true;
          peak.k = k;
          peak.l = l;
          peak.energy = e;
        }
      }
    }
  }
  return peaks;
}

double entropy_weight(const DDSurface& surface) {
  const double total = surface.total_energy();
  if (!(total > 0.0)) return 0.0;
  double entropy = 0.0;
  for (const cplx& v : surface.values) {
    const double p = std::norm(v) / total;
    if (p > 0.0) entropy -= p * std::log2(p);
  }
  const double cells = static_cast<double>(surface.values.size());
  const double w = 1.0 - entropy / std::log2(cells);
  return std::min(1.0, std::max(0.0, w));
}

ParamEstimate fuse_estimates(const std::array<SurfacePeak, 4>& peaks,
                             const std::array<double, 4>& weights) {
  ParamEstimate out;
  out.raw = peaks;
  out.weights = weights;
  double wsum = 0.0;
  double k_acc = 0.0;
  double l_acc = 0.0;
  for (std::size_t s = 0; s < 4; ++s) {
    if (!peaks[s].found) continue;
    wsum += weights[s];
    k_acc += weights[s] * peaks[s].k;
    l_acc += weights[s] * peaks[s].l;
  }
  if (wsum > 0.0) {
    out.detected = true;
    out.k_hat = k_acc / wsum;
    out.l_hat = l_acc / wsum;
  } else {
    out.detected = false;
    out.k_hat = std::numeric_limits<double>::quiet_NaN();
    out.l_hat = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace ddpol
