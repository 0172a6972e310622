#pragma once

// Transmit waveform synthesis: Zak-domain pulsones and their chirp-transform
// spread carriers, plus the phase-coded and FMCW baseline frames.

#include "ddpol/core.hpp"

namespace ddpol {

// M x N grid of data/pilot symbols, delay-major, raw Doppler index in [0, n).
struct SymbolArray {
  int m = 0;
  int n = 0;
  cvec x;

  SymbolArray() = default;
  SymbolArray(int m_, int n_) : m(m_), n(n_), x(static_cast<std::size_t>(m_) * n_) {}
  cplx& at(int k0, int l0) { return x[static_cast<std::size_t>(k0) * n + l0]; }
  const cplx& at(int k0, int l0) const { return x[static_cast<std::size_t>(k0) * n + l0]; }
};

// Unit-norm pulsone anchored at delay bin k0, Doppler bin l0: an impulse train
// with period M carrying a Doppler phase ramp,
//   p[n] = (1/sqrt(N)) sum_d exp(j2pi d l0 / N) delta[n - k0 - dM].
// Sampled at the critical rate B over one frame of M*N samples.
ComplexFrame pulsone(const ZakParams& params, int k0, int l0);

// Linear mounting of a full symbol grid onto the pulsone basis (the inverse
// discrete Zak transform). Unit-energy X gives a unit-energy frame.
ComplexFrame mount_symbols(const ZakParams& params, const SymbolArray& symbols);

// Quadratic-kernel transform, O((MN)^2) reference implementation:
//   (F_g x)[n] = (1/sqrt(MN)) sum_m exp(j2pi(A n^2 + B n m + C m^2)/MN) x[m].
// Unitary when the coefficients are coprime to MN.
ComplexFrame gdaft_direct(const ZakParams& params, const GdaftParams& g, const ComplexFrame& x);

// Closed form of gdaft_direct applied to pulsone(k0, l0): a single chirp whose
// inner Gauss sum collapses to a Jacobi-symbol sign, a quartic-root unit, and a
// quadratic phase with the modular inverse of 4CM mod N. Requires gcd(4CM, N)=1.
ComplexFrame spread_carrier(const ZakParams& params, const GdaftParams& g, int k0, int l0);

// Zadoff-Chu sequence z[n] = exp(-j pi u n (n+1) / L) for odd L, gcd(u, L) = 1,
// normalized to unit energy. Sample rate is the chip rate (1.0 when abstract).
ComplexFrame zadoff_chu(int length, int root, double chip_rate_hz = 1.0);

// Rectangular-chip frame: each code chip held for `oversample` samples at
// rate oversample * B. Energy of the output equals the energy of the code.
ComplexFrame phase_coded_frame(const ZakParams& params, const ComplexFrame& code, int oversample);

struct FmcwPair {
  ComplexFrame up;
  ComplexFrame down;
};

// Sequential up/down linear chirps, each sweeping bandwidth B over T/2 at rate
// oversample * B (oversample even, >= 2). The down half is the conjugate
// slope. Each half is unit-normalized.
FmcwPair fmcw_frame(const ZakParams& params, int oversample);

}  // namespace ddpol
