// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <memory>

namespace oat {

/// Real 1-D DFT of fixed even length K (half-spectrum layout, L = K/2+1).
/// Plans are created once; execution is const and thread-safe on caller
/// buffers. Transforms are unnormalized; callers apply the integral scaling.
class RealDft {
 public:
  explicit RealDft(int length);
  ~RealDft();
  RealDft(RealDft&&) noexcept;
  RealDft& operator=(RealDft&&) noexcept;
  RealDft(const RealDft&) = delete;
  RealDft& operator=(const RealDft&) = delete;

  int length() const;
  int num_freqs() const { return length() / 2 + 1; }

  /// out[l] = sum_k in[k] exp(-j*2*pi*l*k/K), l = 0..K/2. Input preserved.
  void forward(const double* in, std::complex<double>* out) const;

  /// out[k] = sum over the Hermitian extension of `in` of
  /// in[l] exp(+j*2*pi*l*k/K). Input preserved; the imaginary parts of the
  /// DC and Nyquist bins are ignored (real signals).
  void inverse(const std::complex<double>* in, double* out) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace oat
