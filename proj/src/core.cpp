#include "ddpol/core.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ddpol {

ZakParams validate_params(int m, int n, double delay_period_s, double doppler_period_hz) {
  if (m < 1 || n < 1) {
    throw std::invalid_argument("grid dimensions must be positive");
  }
  if (n % 2 == 0) {
    throw std::invalid_argument(
        "Doppler bin count must be odd (even N has no Gauss-sum normalizer)");
  }
  if (!(delay_period_s > 0.0) || !(doppler_period_hz > 0.0)) {
    throw std::invalid_argument("periods must be positive");
  }
  const double product = delay_period_s * doppler_period_hz;
  if (std::abs(product - 1.0) > 1e-12) {
    throw std::invalid_argument("delay and Doppler periods must satisfy tau_p*nu_p = 1, got " +
                                std::to_string(product));
  }
  ZakParams p;
  p.m = m;
  p.n = n;
  p.delay_period_s = delay_period_s;
  p.doppler_period_hz = doppler_period_hz;
  return p;
}

GdaftParams validate_gdaft(long long a, long long b, long long c, long long mn) {
  if (mn < 2) {
    throw std::invalid_argument("grid size must be at least 2");
  }
  for (long long coef : {a, b, c}) {
    if (coef < 1 || coef >= mn) {
      throw std::invalid_argument("chirp coefficients must lie in [1, MN)");
    }
    if (std::gcd(coef, mn) != 1) {
      throw std::invalid_argument("chirp coefficient " + std::to_string(coef) +
                                  " shares a factor with MN = " + std::to_string(mn));
    }
  }
  return GdaftParams{a, b, c};
}

double ComplexFrame::energy() const {
  double e = 0.0;
  for (const cplx& s : samples) e += std::norm(s);
  return e;
}

double DDSurface::total_energy() const {
  double e = 0.0;
  for (const cplx& v : values) e += std::norm(v);
  return e;
}

long long mod_inverse(long long a, long long n) {
  if (n <= 0) {
    throw std::invalid_argument("modulus must be positive");
  }
  a %= n;
  if (a < 0) a += n;
  // Extended Euclid on (a, n); t tracks the Bezout coefficient of a.
  long long r0 = n, r1 = a;
  long long t0 = 0, t1 = 1;
  while (r1 != 0) {
    const long long q = r0 / r1;
    r0 -= q * r1;
    std::swap(r0, r1);
    t0 -= q * t1;
    std::swap(t0, t1);
  }
  if (r0 != 1) {
    throw std::invalid_argument("no inverse: gcd(" + std::to_string(a) + ", " +
                                std::to_string(n) + ") = " + std::to_string(r0));
  }
  return t0 < 0 ? t0 + n : t0;
}

int jacobi_symbol(long long a, long long n) {
  if (n <= 0 || n % 2 == 0) {
    throw std::invalid_argument("Jacobi symbol requires odd positive n");
  }
  a %= n;
  if (a < 0) a += n;
  int sign = 1;
  while (a != 0) {
    while (a % 2 == 0) {
      a /= 2;
      const long long r = n % 8;
      if (r == 3 || r == 5) sign = -sign;
    }
    std::swap(a, n);
    if (a % 4 == 3 && n % 4 == 3) sign = -sign;
    a %= n;
  }
  return n == 1 ? sign : 0;
}

cplx epsilon_n(long long n) {
  if (n <= 0 || n % 2 == 0) {
    throw std::invalid_argument("Gauss-sum normalizer requires odd positive n");
  }
  return (n % 4 == 1) ? cplx{1.0, 0.0} : cplx{0.0, 1.0};
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

cplx RandomStream::complex_normal() {
  // Rayleigh magnitude + uniform phase; E|w|^2 = E[-ln u] = 1.
  double u = uniform01();
  if (u <= 0.0) u = 0x1.0p-53;
  const double mag = std::sqrt(-std::log(u));
  const double phase = kTwoPi * uniform01();
  return cplx{mag * std::cos(phase), mag * std::sin(phase)};
}

}  // namespace ddpol
