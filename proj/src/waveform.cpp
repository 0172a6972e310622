#include "ddpol/waveform.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ddpol {

namespace {

// Roots of unity exp(j2pi r / den) for r in [0, den). All waveform phases are
// integer residues, so building them from a table keeps phases exact to one ulp
// instead of accumulating large floating-point arguments.
cvec twiddle_table(int den) {
  cvec tw(static_cast<std::size_t>(den));
  for (int r = 0; r < den; ++r) {
    const double ang = kTwoPi * static_cast<double>(r) / static_cast<double>(den);
    tw[static_cast<std::size_t>(r)] = cplx{std::cos(ang), std::sin(ang)};
  }
  return tw;
}

long long mod_ll(long long v, long long den) {
  v %= den;
  return v < 0 ? v + den : v;
}

void check_frame_matches_grid(const ZakParams& params, const ComplexFrame& x) {
  if (static_cast<long long>(x.size()) != params.grid_size()) {
    throw std::invalid_argument("frame length " + std::to_string(x.size()) +
                                " does not match grid size " + std::to_string(params.grid_size()));
  }
}

}  // namespace

ComplexFrame pulsone(const ZakParams& params, int k0, int l0) {
  if (k0 < 0 || k0 >= params.m || l0 < 0 || l0 >= params.n) {
    throw std::invalid_argument("pulsone anchor outside the fundamental domain");
  }
  const int m = params.m;
  const int n = params.n;
  const cvec tw = twiddle_table(n);
  ComplexFrame frame;
  frame.sample_rate_hz = params.bandwidth_hz();
  frame.samples.assign(static_cast<std::size_t>(m) * n, cplx{0.0, 0.0});
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int d = 0; d < n; ++d) {
    const std::size_t idx = static_cast<std::size_t>(k0 + d * m);
    frame.samples[idx] = scale * tw[static_cast<std::size_t>((d * l0) % n)];
  }
  return frame;
}

ComplexFrame mount_symbols(const ZakParams& params, const SymbolArray& symbols) {
  if (symbols.m != params.m || symbols.n != params.n) {
    throw std::invalid_argument("symbol grid does not match parameters");
  }
  const int m = params.m;
  const int n = params.n;
  const cvec tw = twiddle_table(n);
  ComplexFrame frame;
  frame.sample_rate_hz = params.bandwidth_hz();
  frame.samples.assign(static_cast<std::size_t>(m) * n, cplx{0.0, 0.0});
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k0 = 0; k0 < m; ++k0) {
    for (int d = 0; d < n; ++d) {
      cplx acc{0.0, 0.0};
      for (int l0 = 0; l0 < n; ++l0) {
        acc += symbols.at(k0, l0) * tw[static_cast<std::size_t>((d * l0) % n)];
      }
      frame.samples[static_cast<std::size_t>(k0 + d * m)] = scale * acc;
    }
  }
  return frame;
}

ComplexFrame gdaft_direct(const ZakParams& params, const GdaftParams& g, const ComplexFrame& x) {
  check_frame_matches_grid(params, x);
  const long long len = params.grid_size();
  validate_gdaft(g.a, g.b, g.c, len);
  const cvec tw = twiddle_table(static_cast<int>(len));
  ComplexFrame out;
  out.sample_rate_hz = x.sample_rate_hz;
  out.samples.assign(static_cast<std::size_t>(len), cplx{0.0, 0.0});
  const double scale = 1.0 / std::sqrt(static_cast<double>(len));
  const long long two_c = mod_ll(2 * g.c, len);
  for (long long n = 0; n < len; ++n) {
    // Exponent A n^2 + B n m + C m^2 advanced incrementally in m: the first
    // difference is B n + C(2m + 1), the second difference is 2C.
    long long idx = mod_ll(g.a * mod_ll(n * n, len), len);
    long long diff = mod_ll(g.b * n + g.c, len);
    cplx acc{0.0, 0.0};
    for (long long m = 0; m < len; ++m) {
      acc += x.samples[static_cast<std::size_t>(m)] * tw[static_cast<std::size_t>(idx)];
      idx += diff;
      if (idx >= len) idx -= len;
      diff += two_c;
      if (diff >= len) diff -= len;
    }
    out.samples[static_cast<std::size_t>(n)] = scale * acc;
  }
  return out;
}

ComplexFrame spread_carrier(const ZakParams& params, const GdaftParams& g, int k0, int l0) {
  if (k0 < 0 || k0 >= params.m || l0 < 0 || l0 >= params.n) {
    throw std::invalid_argument("carrier anchor outside the fundamental domain");
  }
  const long long len = params.grid_size();
  validate_gdaft(g.a, g.b, g.c, len);
  const long long n_mod = params.n;
  const long long four_cm = mod_ll(4 * g.c * params.m, n_mod);
  if (std::gcd(four_cm, n_mod) != 1) {
    throw std::invalid_argument("4CM shares a factor with N; the Gauss sum does not collapse");
  }
  const long long q = mod_inverse(four_cm, n_mod);
  const cplx unit = epsilon_n(n_mod) *
                    static_cast<double>(jacobi_symbol(mod_ll(g.c * params.m, n_mod), n_mod));

  const cvec tw_len = twiddle_table(static_cast<int>(len));
  const cvec tw_n = twiddle_table(params.n);
  ComplexFrame frame;
  frame.sample_rate_hz = params.bandwidth_hz();
  frame.samples.assign(static_cast<std::size_t>(len), cplx{0.0, 0.0});
  const double scale = 1.0 / std::sqrt(static_cast<double>(len));
  const long long quad_k0 = mod_ll(g.c * k0 % len * k0, len);
  for (long long n = 0; n < len; ++n) {
    const long long quad =
        mod_ll(g.a * mod_ll(n * n, len) + g.b * n % len * k0 + quad_k0, len);
    const long long b_res = mod_ll(g.b * n + l0 + 2 * g.c * k0, n_mod);
    const long long gauss = mod_ll(q * mod_ll(b_res * b_res, n_mod), n_mod);
    // exp(-j2pi gauss / N) = conj of the forward twiddle.
    frame.samples[static_cast<std::size_t>(n)] =
        scale * unit * tw_len[static_cast<std::size_t>(quad)] *
        std::conj(tw_n[static_cast<std::size_t>(gauss)]);
  }
  return frame;
}

ComplexFrame zadoff_chu(int length, int root, double chip_rate_hz) {
  if (length < 1 || length % 2 == 0) {
    throw std::invalid_argument("code length must be odd and positive");
  }
  if (std::gcd(static_cast<long long>(root), static_cast<long long>(length)) != 1) {
    throw std::invalid_argument("root " + std::to_string(root) +
                                " shares a factor with length " + std::to_string(length));
  }
  // For odd L, u n (n+1) / L over 2L-th roots reduces to L-th roots since
  // n(n+1) is even; keep the residue in units of 1/(2L) and use a 2L table.
  const cvec tw = twiddle_table(2 * length);
  ComplexFrame code;
  code.sample_rate_hz = chip_rate_hz;
  code.samples.assign(static_cast<std::size_t>(length), cplx{0.0, 0.0});
  const double scale = 1.0 / std::sqrt(static_cast<double>(length));
  for (long long n = 0; n < length; ++n) {
    const long long r = mod_ll(static_cast<long long>(root) * n % (2 * length) * (n + 1),
                               2 * length);
    code.samples[static_cast<std::size_t>(n)] = scale * std::conj(tw[static_cast<std::size_t>(r)]);
  }
  return code;
}

ComplexFrame phase_coded_frame(const ZakParams& params, const ComplexFrame& code, int oversample) {
  if (oversample < 1) {
    throw std::invalid_argument("oversample must be positive");
  }
  if (static_cast<long long>(code.size()) != params.grid_size()) {
    throw std::invalid_argument("code length must equal the grid size (one chip per bin)");
  }
  ComplexFrame frame;
  frame.sample_rate_hz = static_cast<double>(oversample) * params.bandwidth_hz();
  frame.samples.resize(code.size() * static_cast<std::size_t>(oversample));
  const double scale = 1.0 / std::sqrt(static_cast<double>(oversample));
  std::size_t w = 0;
  for (const cplx& chip : code.samples) {
    for (int r = 0; r < oversample; ++r) frame.samples[w++] = scale * chip;
  }
  return frame;
}

FmcwPair fmcw_frame(const ZakParams& params, int oversample) {
  if (oversample < 2 || oversample % 2 != 0) {
    throw std::invalid_argument("chirp oversample must be even and at least 2");
  }
  // Slope kappa = B/(T/2). At t = n/fs with fs = oversample*B the quadratic
  // phase pi*kappa*t^2 is 2pi n^2 / (oversample^2 * MN): an exact residue.
  const long long len = params.grid_size();
  const long long den = static_cast<long long>(oversample) * oversample * len;
  const long long half = static_cast<long long>(oversample) * len / 2;
  const double fs = static_cast<double>(oversample) * params.bandwidth_hz();
  const double scale = 1.0 / std::sqrt(static_cast<double>(half));
  FmcwPair pair;
  pair.up.sample_rate_hz = fs;
  pair.down.sample_rate_hz = fs;
  pair.up.samples.resize(static_cast<std::size_t>(half));
  pair.down.samples.resize(static_cast<std::size_t>(half));
  for (long long n = 0; n < half; ++n) {
    const long long r = mod_ll(n % den * n, den);
    const double ang = kTwoPi * static_cast<double>(r) / static_cast<double>(den);
    const cplx u = scale * cplx{std::cos(ang), std::sin(ang)};
    pair.up.samples[static_cast<std::size_t>(n)] = u;
    pair.down.samples[static_cast<std::size_t>(n)] = std::conj(u);
  }
  return pair;
}

}  // namespace ddpol
