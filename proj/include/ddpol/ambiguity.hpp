#pragma once

// Discrete cross-ambiguity on the delay-Doppler torus, the twisted convolution
// it composes under, and the crystallization test for self-ambiguity supports.
//
// Convention (length-L frames, all indices mod L):
//   A_{y,x}[k, l] = sum_n y[n] conj(x[(n-k)_L]) exp(-j2pi l (n-k) / L).

#include "ddpol/core.hpp"

#include <memory>

namespace ddpol {

// One-off plan for forward DFTs of a fixed length (FFTW behind the scenes).
// Instances are not thread-safe; create one per worker.
class Dft {
 public:
  explicit Dft(int length);
  ~Dft();
  Dft(const Dft&) = delete;
  Dft& operator=(const Dft&) = delete;

  int length() const { return len_; }
  // out[l] = sum_n in[n] exp(-j2pi l n / L), unnormalized.
  void forward(const cplx* in, cplx* out);

 private:
  struct Impl;
  int len_ = 0;
  std::unique_ptr<Impl> impl_;
};

// Exact evaluation at the requested bins, O(L) per point. Result is indexed
// [delay][doppler] following the argument order. Doppler indices may be
// negative (interpreted mod L). This is the oracle the fast path is checked
// against; the baseline estimators also run on it.
std::vector<cvec> cross_ambiguity_direct(const ComplexFrame& y, const ComplexFrame& x,
                                         const std::vector<int>& delays,
                                         const std::vector<int>& dopplers);

// Single-point convenience wrapper.
cplx cross_ambiguity_point(const ComplexFrame& y, const ComplexFrame& x, int k, int l);

// Per-delay length-L DFT of y[n] conj(x[(n-k)_L]) with the exp(+j2pi l k / L)
// phase correction: one full Doppler column per requested delay, O(L log L)
// each. Rows follow the `delays` order; columns are l = 0..L-1.
std::vector<cvec> cross_ambiguity_fast(const ComplexFrame& y, const ComplexFrame& x,
                                       const std::vector<int>& delays, Dft& dft);

// Twisted convolution over Z_L x Z_L (square surfaces, delay-major):
//   (a *s b)[k, l] = sum_{k', l'} a[k', l'] b[(k-k')_L, (l-l')_L]
//                    exp(+j2pi l' (k-k') / phase_den).
// phase_den is L for plain torus surfaces and M*N when the axes carry
// fundamental-domain units. O(L^4); meant for oracle checks, not production.
std::vector<cvec> twisted_convolve(const std::vector<cvec>& a, const std::vector<cvec>& b,
                                   int phase_den);

// All (k, l) with | |A_{x,x}[k,l]| - 1 | <= tol for a unit-energy frame.
SupportSet self_ambiguity_support(const ComplexFrame& x, double tol);

struct CrystallizationResult {
  bool crystallized = true;
  // First violating pair of support points when not crystallized.
  std::pair<int, int> offender_a{0, 0};
  std::pair<int, int> offender_b{0, 0};
};

// True when the translates of `box` by the support points are pairwise
// disjoint on the torus Z_modulus x Z_modulus.
CrystallizationResult crystallization_check(const SupportSet& support, const SupportBox& box);

}  // namespace ddpol
