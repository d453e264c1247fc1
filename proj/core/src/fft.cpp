// SPDX-License-Identifier: Apache-2.0
#include "oat/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "oat/errors.hpp"

namespace oat {

namespace {
// The FFTW planner is not thread-safe; execution via the new-array API is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace

struct RealDft::Impl {
  int n = 0;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
};

RealDft::RealDft(int length) : impl_(std::make_unique<Impl>()) {
  if (length < 2 || length % 2 != 0)
    throw ConfigError("RealDft length must be even and >= 2");
  impl_->n = length;
  const int nf = length / 2 + 1;
  std::vector<double> rbuf(length);
  std::vector<std::complex<double>> cbuf(nf);
  auto* c = reinterpret_cast<fftw_complex*>(cbuf.data());

  std::lock_guard<std::mutex> lock(planner_mutex());
  impl_->fwd = fftw_plan_dft_r2c_1d(length, rbuf.data(), c,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  impl_->inv = fftw_plan_dft_c2r_1d(
      length, c, rbuf.data(),
      FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT);
  if (!impl_->fwd || !impl_->inv) throw NumericalError("FFTW planning failed");
}

RealDft::~RealDft() = default;
RealDft::RealDft(RealDft&&) noexcept = default;
RealDft& RealDft::operator=(RealDft&&) noexcept = default;

int RealDft::length() const { return impl_->n; }

void RealDft::forward(const double* in, std::complex<double>* out) const {
  // out-of-place r2c preserves its input
  fftw_execute_dft_r2c(impl_->fwd, const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void RealDft::inverse(const std::complex<double>* in, double* out) const {
  fftw_execute_dft_c2r(
      impl_->inv,
      reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
      out);
}

} // namespace oat
