#pragma once

// The three receiver pipelines (Zak-OTFS pulsone/spread-carrier, phase-coded
// Zadoff-Chu, sequential up/down FMCW), plus detection statistics, CFAR-style
// thresholding with peak picking, and entropy-weighted fusion.

#include "ddpol/channel.hpp"
#include "ddpol/core.hpp"

#include <array>

namespace ddpol {

enum class SystemKind { zak, phase_coded, fmcw };

// Four estimated surfaces indexed by (receive, transmit) polarization.
struct PolChannelEstimate {
  SystemKind system = SystemKind::zak;
  int frames_used = 1;  // 2 for the sequential FMCW scheme
  std::array<DDSurface, 4> surfaces;  // hh, hv, vh, vv

  static std::size_t index(Pol rx, Pol tx) {
    return static_cast<std::size_t>(rx) * 2 + static_cast<std::size_t>(tx);
  }
  DDSurface& surface(Pol rx, Pol tx) { return surfaces[index(rx, tx)]; }
  const DDSurface& surface(Pol rx, Pol tx) const { return surfaces[index(rx, tx)]; }
};

// Simultaneous dual-pol Zak-OTFS: pulsone on H, spread carrier on V. Surfaces
// are the cross-ambiguities of each received frame against each transmit
// frame (fast path), subsampled to the fundamental M x N domain. Doppler bin
// l of the surface is full-frame DFT bin (l mod MN).
PolChannelEstimate estimate_pol_channels_zak(const ComplexFrame& yv, const ComplexFrame& yh,
                                             const ComplexFrame& xv, const ComplexFrame& xh,
                                             const ZakParams& params);

// Simultaneous dual-pol phase-coded frames at f_s = oversample*B: direct
// cross-correlation at delay lags oversample*k and the N centered Doppler
// bins of the oversampled frame grid.
PolChannelEstimate estimate_pol_channels_phase_coded(const ComplexFrame& yv,
                                                     const ComplexFrame& yh,
                                                     const ComplexFrame& xv,
                                                     const ComplexFrame& xh,
                                                     const ZakParams& params);

// Sequential FMCW: slot 1 transmits the up/down chirp frame on H, slot 2 the
// same frame on V. Each received frame is correlated against the up half and
// the down half separately with Doppler hypotheses on the 2/T grid (the
// half-frame resolution); a surface bin (k, l) takes the smaller-magnitude of
// the two half responses at its nearest hypothesis, which intersects the up
// and down ridges and reproduces ghost intersections for multi-target scenes.
PolChannelEstimate estimate_pol_channels_fmcw(const PolFramePair& rx_slot_h,
                                              const PolFramePair& rx_slot_v,
                                              const ZakParams& params);

enum class DetectionMode { uni, dual };

struct DetectionOutcome {
  double statistic_present = 0.0;            // fused |estimate| at the queried bin
  double statistic_floor = 0.0;              // fused RMS over every other bin
  std::array<double, 4> surface_present{};   // per-surface |estimate| at the bin
  std::array<double, 4> surface_floor{};     // per-surface RMS elsewhere
};

// uni uses the (H,H) surface alone; dual fuses with max over surfaces for the
// bin value and a pooled RMS for the floor.
DetectionOutcome detection_statistic(const PolChannelEstimate& est, int k_bin, int l_bin,
                                     DetectionMode mode);

struct SurfacePeak {
  bool found = false;
  int k = 0;
  int l = 0;
  double energy = 0.0;
};

struct ParamEstimate {
  std::array<SurfacePeak, 4> raw{};
  std::array<double, 4> weights{};
  bool detected = false;
  double k_hat = 0.0;  // real-valued after weighted fusion; meaningful iff detected
  double l_hat = 0.0;
};

// CFAR-style threshold for one surface: mean energy over the bins outside
// the guard-extended ROI (wrap-aware), scaled by ln(1/pfa). Throws when the
// guard-extended ROI covers the whole domain.
double cfar_threshold(const DDSurface& surface, const SupportBox& roi, int guard_k,
                      int guard_l, double pfa);

// Per surface: threshold via cfar_threshold, peak = first strict argmax of
// energy inside the ROI among bins above threshold.
std::array<SurfacePeak, 4> threshold_and_peak(const PolChannelEstimate& est,
                                              const SupportBox& roi, int guard_k, int guard_l,
                                              double pfa);

// 1 - H(|surface|^2 distribution)/log2(MN), clamped to [0,1]; all-zero -> 0.
double entropy_weight(const DDSurface& surface);

// Convex combination of the found peaks under the given weights; surfaces
// without a peak contribute nothing, and detected = (total active weight > 0).
ParamEstimate fuse_estimates(const std::array<SurfacePeak, 4>& peaks,
                             const std::array<double, 4>& weights);

}  // namespace ddpol
