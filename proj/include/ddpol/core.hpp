#pragma once

// Core parameter sets, grid types, and the modular arithmetic used by the
// closed-form spread-carrier construction.

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace ddpol {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

// ============================================================================
// Delay-Doppler grid parameters
// ============================================================================

// A critically sampled frame has M*N samples: M delay bins of width 1/B per
// delay period tau_p, N Doppler bins of width 1/T per Doppler period nu_p.
struct ZakParams {
  int m = 0;                      // delay bins per period
  int n = 0;                      // Doppler bins per period, odd
  double delay_period_s = 0.0;    // tau_p
  double doppler_period_hz = 0.0; // nu_p = 1/tau_p

  int grid_size() const { return m * n; }
  double bandwidth_hz() const { return static_cast<double>(m) / delay_period_s; }
  double frame_duration_s() const { return static_cast<double>(n) / doppler_period_hz; }
  // B*T restated so it is exact in integer arithmetic: (M/tau_p)(N/nu_p) with
  // tau_p*nu_p = 1 collapses to M*N.
  double time_bandwidth() const { return static_cast<double>(m) * static_cast<double>(n); }
};

// Checks m, n positive, n odd, and tau_p * nu_p = 1 within 1e-12.
// Throws std::invalid_argument otherwise.
ZakParams validate_params(int m, int n, double delay_period_s, double doppler_period_hz);

// Chirp coefficients (A, B, C) of the quadratic kernel exp(j2pi(An^2+Bnm+Cm^2)/MN).
struct GdaftParams {
  long long a = 1;
  long long b = 1;
  long long c = 1;
};

// Requires each coefficient in [1, mn) and coprime to mn.
GdaftParams validate_gdaft(long long a, long long b, long long c, long long mn);

// ============================================================================
// Polarimetric types
// ============================================================================

enum class Pol { h = 0, v = 1 };

// 2x2 complex scattering matrix, row = receive polarization, col = transmit.
struct Mat2c {
  cplx hh{0.0, 0.0};
  cplx hv{0.0, 0.0};
  cplx vh{0.0, 0.0};
  cplx vv{0.0, 0.0};

  cplx entry(Pol rx, Pol tx) const {
    if (rx == Pol::h) return tx == Pol::h ? hh : hv;
    return tx == Pol::h ? vh : vv;
  }
};

// One propagation path: geometry plus its scattering matrix.
struct PolPath {
  double delay_s = 0.0;
  double doppler_hz = 0.0;
  Mat2c gain;
};

// ============================================================================
// Sampled frames and delay-Doppler surfaces
// ============================================================================

struct ComplexFrame {
  cvec samples;
  double sample_rate_hz = 0.0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double energy() const;
};

// Dense surface over the fundamental domain: delay bins k in [0, m), Doppler
// bins l in [-(n/2), n/2] with n odd. Stored delay-major.
struct DDSurface {
  int m = 0;
  int n = 0;
  cvec values;

  DDSurface() = default;
  DDSurface(int m_, int n_) : m(m_), n(n_), values(static_cast<std::size_t>(m_) * n_) {}

  int doppler_min() const { return -(n / 2); }
  int doppler_max() const { return n / 2; }
  std::size_t index(int k, int l) const {
    return static_cast<std::size_t>(k) * n + static_cast<std::size_t>(l + n / 2);
  }
  cplx& at(int k, int l) { return values[index(k, l)]; }
  const cplx& at(int k, int l) const { return values[index(k, l)]; }
  double total_energy() const;
};

// Axis-aligned box of delay-Doppler bins, bounds inclusive.
struct SupportBox {
  int k_min = 0;
  int k_max = 0;
  int l_min = 0;
  int l_max = 0;

  bool contains(int k, int l) const {
    return k >= k_min && k <= k_max && l >= l_min && l <= l_max;
  }
};

// Set of (k, l) points on the discrete torus Z_modulus x Z_modulus.
struct SupportSet {
  std::vector<std::pair<int, int>> points;
  int modulus = 0;
};

// ============================================================================
// Modular arithmetic
// ============================================================================

// Inverse of a modulo n (n > 0, gcd(a, n) = 1), result in [0, n).
long long mod_inverse(long long a, long long n);

// Jacobi symbol (a/n) for odd positive n; 0 when gcd(a, n) > 1.
int jacobi_symbol(long long a, long long n);

// Gauss-sum normalizer: 1 for n = 1 mod 4, j for n = 3 mod 4. n must be odd.
cplx epsilon_n(long long n);

// ============================================================================
// Deterministic random helpers
// ============================================================================

// splitmix64 step; used to derive independent per-trial seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Hand-rolled draws so output bits never depend on the standard library's
// distribution implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }
  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // +1 or -1 equiprobably.
  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }
  // Circularly symmetric complex Gaussian with E|w|^2 = 1.
  cplx complex_normal();

 private:
  std::uint64_t state_;
};

}  // namespace ddpol
