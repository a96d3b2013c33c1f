#pragma once

#include <span>

#include "stirflow/types.hpp"

namespace stirflow::fft {

// Unnormalized DFT: out_k = sum_j in_j exp(-2 pi i j k / n).
void forward(std::span<const cplx> in, std::span<cplx> out);
// Inverse DFT including the 1/n factor.
void inverse(std::span<const cplx> in, std::span<cplx> out);

// Signed wavenumber of DFT index k for length n (Nyquist maps to +n/2).
inline int wavenumber(int k, int n) { return k <= n / 2 ? k : k - n; }

// Applies a Fourier multiplier symbol[k] to one periodic block of samples.
void apply_symbol(std::span<const cplx> in, std::span<const cplx> symbol, std::span<cplx> out);

// d/dt of a 2pi-periodic sample block; Nyquist mode dropped.
CplxVec derivative(std::span<const cplx> samples);

// Trigonometric interpolant of equispaced samples on [0, 2pi).
class TrigInterpolant {
 public:
  explicit TrigInterpolant(std::span<const cplx> samples);

  // Value and first two t-derivatives at arbitrary t.
  void eval(double t, cplx& value, cplx& d1, cplx& d2) const;
  cplx operator()(double t) const;

 private:
  int n_;
  CplxVec coef_;  // normalized, index k <-> wavenumber(k, n)
};

}  // namespace stirflow::fft
