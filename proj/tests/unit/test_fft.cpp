// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oat/fft.hpp"
#include "oat/rng.hpp"
#include "oat/system_operator.hpp"
#include "test_helpers.hpp"

using namespace oat;

TEST_CASE("DC-only spectrum inverts to a constant signal") {
  const auto lat = FrequencyLattice::from_time(64, 0.1);
  FrequencyData spec{1, lat, std::vector<Complex>(lat.num_freqs, {0, 0})};
  spec.values[0] = {3.2, 0.0};
  const TimeData t = freq_to_time(spec);
  // x(k) = df * X(0)
  for (double v : t.values)
    CHECK(v == doctest::Approx(3.2 * lat.delta_f_mhz).epsilon(1e-12));
}

TEST_CASE("time->freq->time round trip is identity") {
  const auto lat = FrequencyLattice::from_time(96, 0.05);
  TimeData u{3, lat, std::vector<double>(3 * 96)};
  double peak = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    u.values[i] = rng::normal_at(42, i);
    peak = std::max(peak, std::abs(u.values[i]));
  }
  const TimeData back = freq_to_time(time_to_freq(u));
  for (std::size_t i = 0; i < u.values.size(); ++i)
    CHECK(std::abs(back.values[i] - u.values[i]) < 1e-12 * peak);
}

TEST_CASE("forward transform matches the direct DFT sum") {
  const int K = 32;
  const auto lat = FrequencyLattice::from_time(K, 0.25);
  TimeData u{1, lat, std::vector<double>(K)};
  for (int k = 0; k < K; ++k) u.values[k] = rng::normal_at(7, k);
  const FrequencyData spec = time_to_freq(u);
  for (int l = 0; l < lat.num_freqs; ++l) {
    Complex acc{0, 0};
    for (int k = 0; k < K; ++k) {
      const double ph = -2.0 * std::numbers::pi * l * k / K;
      acc += u.values[k] * Complex(std::cos(ph), std::sin(ph));
    }
    acc *= lat.delta_t_us; // integral scaling
    CHECK(std::abs(spec.values[l] - acc) < 1e-12);
  }
  // real-signal bins carry no imaginary part
  CHECK(spec.values[0].imag() == 0.0);
  CHECK(std::abs(spec.values[lat.num_freqs - 1].imag()) < 1e-15);
}

TEST_CASE("pure tone lands on its lattice bin") {
  const int K = 128;
  const auto lat = FrequencyLattice::from_time(K, 0.05);
  const int bin = 10;
  const double f = bin * lat.delta_f_mhz;
  TimeData u{1, lat, std::vector<double>(K)};
  for (int k = 0; k < K; ++k)
    u.values[k] = std::cos(2.0 * std::numbers::pi * f * k * lat.delta_t_us);
  const FrequencyData spec = time_to_freq(u);
  // cos splits between the +/- bins; half-spectrum holds K*dt/2 at `bin`
  CHECK(spec.values[bin].real() ==
        doctest::Approx(0.5 * K * lat.delta_t_us).epsilon(1e-9));
  for (int l = 0; l < lat.num_freqs; ++l) {
    if (l == bin) continue;
    CHECK(std::abs(spec.values[l]) < 1e-9 * K * lat.delta_t_us);
  }
}
