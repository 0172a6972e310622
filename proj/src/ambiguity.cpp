#include "ddpol/ambiguity.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <unordered_set>

namespace ddpol {

namespace {

// FFTW's planner mutates global state; execution does not.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int mod_int(long long v, int den) {
  long long r = v % den;
  if (r < 0) r += den;
  return static_cast<int>(r);
}

// tw[r] = exp(sign * j * 2pi * r / den), r = 0..den-1.
cvec phase_table(int den, int sign) {
  cvec tw(static_cast<std::size_t>(den));
  for (int r = 0; r < den; ++r) {
    tw[static_cast<std::size_t>(r)] = std::polar(1.0, sign * kTwoPi * r / den);
  }
  return tw;
}

void check_pair(const ComplexFrame& y, const ComplexFrame& x) {
  if (y.size() == 0 || y.size() != x.size()) {
    throw std::invalid_argument("cross-ambiguity needs two frames of equal nonzero length");
  }
  if (y.sample_rate_hz != x.sample_rate_hz) {
    throw std::invalid_argument("cross-ambiguity frames must share a sample rate");
  }
}

// u[n] = y[(k + n)_L] conj(x[n]), the lag product at delay k, split into
// re/im planes so the per-doppler dot products vectorize.
void lag_product(const cvec& y, const cvec& x, int k, std::vector<double>& ur,
                 std::vector<double>& ui) {
  const int len = static_cast<int>(x.size());
  for (int s = 0; s < len; ++s) {
    int n = k + s;
    if (n >= len) n -= len;
    const cplx v = y[static_cast<std::size_t>(n)] * std::conj(x[static_cast<std::size_t>(s)]);
    ur[static_cast<std::size_t>(s)] = v.real();
    ui[static_cast<std::size_t>(s)] = v.imag();
  }
}

}  // namespace

struct Dft::Impl {
  fftw_plan plan = nullptr;
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;
};

Dft::Dft(int length) : len_(length), impl_(std::make_unique<Impl>()) {
  if (length < 1) throw std::invalid_argument("DFT length must be positive");
  impl_->in = fftw_alloc_complex(static_cast<std::size_t>(length));
  impl_->out = fftw_alloc_complex(static_cast<std::size_t>(length));
  if (impl_->in == nullptr || impl_->out == nullptr) {
    fftw_free(impl_->in);
    fftw_free(impl_->out);
    throw std::bad_alloc();
  }
  // FFTW_ESTIMATE keeps planning deterministic (no timing-dependent choices),
  // which the run-to-run reproducibility contract relies on.
  std::lock_guard<std::mutex> lock(planner_mutex());
  impl_->plan = fftw_plan_dft_1d(length, impl_->in, impl_->out, FFTW_FORWARD, FFTW_ESTIMATE);
  if (impl_->plan == nullptr) {
    fftw_free(impl_->in);
    fftw_free(impl_->out);
    throw std::runtime_error("FFTW plan creation failed");
  }
}

Dft::~Dft() {
  if (impl_) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (impl_->plan != nullptr) fftw_destroy_plan(impl_->plan);
    fftw_free(impl_->in);
    fftw_free(impl_->out);
  }
}

void Dft::forward(const cplx* in, cplx* out) {
  static_assert(sizeof(cplx) == sizeof(fftw_complex));
  std::memcpy(impl_->in, in, sizeof(cplx) * static_cast<std::size_t>(len_));
  fftw_execute(impl_->plan);
  std::memcpy(static_cast<void*>(out), impl_->out, sizeof(cplx) * static_cast<std::size_t>(len_));
}

std::vector<cvec> cross_ambiguity_direct(const ComplexFrame& y, const ComplexFrame& x,
                                         const std::vector<int>& delays,
                                         const std::vector<int>& dopplers) {
  check_pair(y, x);
  const int len = static_cast<int>(x.size());
  const cvec tw = phase_table(len, -1);

  // All lag products up front so each Doppler twiddle row is built once and
  // swept across every delay (the baseline estimators hit this with full
  // delay x Doppler grids).
  std::vector<std::vector<double>> ur(delays.size(), std::vector<double>(static_cast<std::size_t>(len)));
  std::vector<std::vector<double>> ui(delays.size(), std::vector<double>(static_cast<std::size_t>(len)));
  for (std::size_t kd = 0; kd < delays.size(); ++kd) {
    lag_product(y.samples, x.samples, mod_int(delays[kd], len), ur[kd], ui[kd]);
  }

  std::vector<double> twr(static_cast<std::size_t>(len));
  std::vector<double> twi(static_cast<std::size_t>(len));
  std::vector<cvec> out(delays.size(), cvec(dopplers.size()));
  for (std::size_t ld = 0; ld < dopplers.size(); ++ld) {
    const int l = mod_int(dopplers[ld], len);
    // exp(-j2pi l s / L) walked by residue so the table stays exact.
    int idx = 0;
    for (int s = 0; s < len; ++s) {
      twr[static_cast<std::size_t>(s)] = tw[static_cast<std::size_t>(idx)].real();
      twi[static_cast<std::size_t>(s)] = tw[static_cast<std::size_t>(idx)].imag();
      idx += l;
      if (idx >= len) idx -= len;
    }
    for (std::size_t kd = 0; kd < delays.size(); ++kd) {
      const double* vr = ur[kd].data();
      const double* vi = ui[kd].data();
      double accr = 0.0;
      double acci = 0.0;
      for (int s = 0; s < len; ++s) {
        const std::size_t si = static_cast<std::size_t>(s);
        accr += vr[si] * twr[si] - vi[si] * twi[si];
        acci += vr[si] * twi[si] + vi[si] * twr[si];
      }
      out[kd][ld] = cplx(accr, acci);
    }
  }
  return out;
}

cplx cross_ambiguity_point(const ComplexFrame& y, const ComplexFrame& x, int k, int l) {
  return cross_ambiguity_direct(y, x, {k}, {l})[0][0];
}

std::vector<cvec> cross_ambiguity_fast(const ComplexFrame& y, const ComplexFrame& x,
                                       const std::vector<int>& delays, Dft& dft) {
  check_pair(y, x);
  const int len = static_cast<int>(x.size());
  if (dft.length() != len) {
    throw std::invalid_argument("DFT plan length does not match the frame length");
  }
  const cvec tw = phase_table(len, +1);

  cvec u(static_cast<std::size_t>(len));
  std::vector<cvec> out(delays.size(), cvec(static_cast<std::size_t>(len)));
  for (std::size_t kd = 0; kd < delays.size(); ++kd) {
    const int k = mod_int(delays[kd], len);
    // u[n] = y[n] conj(x[(n - k)_L]): same lag product, indexed from y's side.
    for (int n = 0; n < len; ++n) {
      int s = n - k;
      if (s < 0) s += len;
      u[static_cast<std::size_t>(n)] =
          y.samples[static_cast<std::size_t>(n)] * std::conj(x.samples[static_cast<std::size_t>(s)]);
    }
    cvec& row = out[kd];
    dft.forward(u.data(), row.data());
    // A[k, l] = exp(+j2pi l k / L) * DFT_l(u).
    int idx = 0;
    for (int l = 0; l < len; ++l) {
      row[static_cast<std::size_t>(l)] *= tw[static_cast<std::size_t>(idx)];
      idx += k;
      if (idx >= len) idx -= len;
    }
  }
  return out;
}

std::vector<cvec> twisted_convolve(const std::vector<cvec>& a, const std::vector<cvec>& b,
                                   int phase_den) {
  const int len = static_cast<int>(a.size());
  if (len == 0 || b.size() != a.size()) {
    throw std::invalid_argument("twisted convolution needs two surfaces of equal nonzero size");
  }
  for (int k = 0; k < len; ++k) {
    if (static_cast<int>(a[static_cast<std::size_t>(k)].size()) != len ||
        static_cast<int>(b[static_cast<std::size_t>(k)].size()) != len) {
      throw std::invalid_argument("twisted convolution surfaces must be square");
    }
  }
  if (phase_den < 1) throw std::invalid_argument("twisted convolution phase denominator must be positive");

  const cvec tw = phase_table(phase_den, +1);
  std::vector<cvec> out(static_cast<std::size_t>(len), cvec(static_cast<std::size_t>(len)));
  for (int k = 0; k < len; ++k) {
    for (int l = 0; l < len; ++l) {
      cplx acc(0.0, 0.0);
      for (int kp = 0; kp < len; ++kp) {
        const int dk = mod_int(k - kp, len);
        const cvec& arow = a[static_cast<std::size_t>(kp)];
        const cvec& brow = b[static_cast<std::size_t>(dk)];
        for (int lp = 0; lp < len; ++lp) {
          const cplx av = arow[static_cast<std::size_t>(lp)];
          if (av == cplx(0.0, 0.0)) continue;
          const int dl = mod_int(l - lp, len);
          const int ph = mod_int(static_cast<long long>(lp) * dk, phase_den);
          acc += av * brow[static_cast<std::size_t>(dl)] * tw[static_cast<std::size_t>(ph)];
        }
      }
      out[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = acc;
    }
  }
  return out;
}

SupportSet self_ambiguity_support(const ComplexFrame& x, double tol) {
  const int len = static_cast<int>(x.size());
  if (len == 0) throw std::invalid_argument("support extraction needs a nonempty frame");
  Dft dft(len);
  std::vector<int> delays(static_cast<std::size_t>(len));
  for (int k = 0; k < len; ++k) delays[static_cast<std::size_t>(k)] = k;
  const std::vector<cvec> grid = cross_ambiguity_fast(x, x, delays, dft);

  SupportSet support;
  support.modulus = len;
  for (int k = 0; k < len; ++k) {
    for (int l = 0; l < len; ++l) {
      if (std::abs(std::abs(grid[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]) - 1.0) <=
          tol) {
        support.points.emplace_back(k, l);
      }
    }
  }
  return support;
}

CrystallizationResult crystallization_check(const SupportSet& support, const SupportBox& box) {
  const int len = support.modulus;
  if (len < 1) throw std::invalid_argument("support set needs a positive modulus");
  if (box.k_max < box.k_min || box.l_max < box.l_min) {
    throw std::invalid_argument("crystallization box is empty");
  }

  std::unordered_set<long long> members;
  members.reserve(support.points.size() * 2);
  for (const auto& [k, l] : support.points) {
    members.insert(static_cast<long long>(mod_int(k, len)) * len + mod_int(l, len));
  }

  // Translates s + box and s' + box intersect on the torus exactly when
  // s' - s lands in the difference box of the region.
  CrystallizationResult result;
  for (const auto& [k, l] : support.points) {
    const int k0 = mod_int(k, len);
    const int l0 = mod_int(l, len);
    for (int dk = box.k_min - box.k_max; dk <= box.k_max - box.k_min; ++dk) {
      for (int dl = box.l_min - box.l_max; dl <= box.l_max - box.l_min; ++dl) {
        if (dk == 0 && dl == 0) continue;
        const int k1 = mod_int(k0 + dk, len);
        const int l1 = mod_int(l0 + dl, len);
        if (members.count(static_cast<long long>(k1) * len + l1) != 0) {
          result.crystallized = false;
          result.offender_a = {k0, l0};
          result.offender_b = {k1, l1};
          return result;
        }
      }
    }
  }
  return result;
}

}  // namespace ddpol
