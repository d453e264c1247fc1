// SPDX-License-Identifier: Apache-2.0
#include "oat/physics.hpp"

#include <cmath>
#include <numbers>

#include "oat/errors.hpp"

namespace oat {

namespace {
constexpr double kPi = std::numbers::pi;

double sinc(double u) {
  if (std::abs(u) < 1e-12) return 1.0;
  return std::sin(u) / u;
}
} // namespace

void AcousticConstants::validate() const {
  if (speed_of_sound_mm_per_us <= 0.0) throw ConfigError("c0 must be > 0");
  if (grueneisen <= 0.0) throw ConfigError("grueneisen must be > 0");
  if (voxel_radius_mm <= 0.0) throw ConfigError("voxel radius must be > 0");
}

FrequencyLattice FrequencyLattice::from_time(int num_time_samples,
                                             double delta_t_us) {
  if (num_time_samples < 2 || num_time_samples % 2 != 0)
    throw ConfigError("number of time samples must be even and >= 2");
  if (delta_t_us <= 0.0) throw ConfigError("delta_t_us must be > 0");
  FrequencyLattice lat;
  lat.num_time_samples = num_time_samples;
  lat.delta_t_us = delta_t_us;
  lat.num_freqs = num_time_samples / 2 + 1;
  lat.delta_f_mhz = 1.0 / (num_time_samples * delta_t_us);
  return lat;
}

void FrequencyLattice::validate() const {
  if (num_freqs < 2 || delta_f_mhz <= 0.0 || delta_t_us <= 0.0)
    throw ConfigError("invalid frequency lattice");
  if (delta_f_mhz * (num_freqs - 1) > nyquist_mhz() * (1.0 + 1e-12))
    throw ConfigError("frequency lattice exceeds Nyquist");
}

Eir Eir::analytic(double center_mhz, double fractional_bandwidth,
                  double delay_us) {
  if (center_mhz <= 0.0 || fractional_bandwidth <= 0.0)
    throw ConfigError("analytic EIR needs positive center and bandwidth");
  Eir e;
  e.kind = Kind::Analytic;
  e.center_mhz = center_mhz;
  e.fractional_bandwidth = fractional_bandwidth;
  e.delay_us = delay_us;
  return e;
}

Eir Eir::tabulated(std::vector<Complex> table) {
  Eir e;
  e.kind = Kind::Tabulated;
  e.table = std::move(table);
  return e;
}

Complex p0_spectrum(double f_mhz, const AcousticConstants& consts) {
  if (f_mhz == 0.0) return {0.0, 0.0}; // odd pulse, zero mean
  const double c0 = consts.speed_of_sound_mm_per_us;
  const double eps_t = consts.voxel_radius_mm / c0; // pulse half-duration
  const double u = 2.0 * kPi * f_mhz * eps_t;
  const double bracket =
      eps_t * std::cos(u) - std::sin(u) / (2.0 * kPi * f_mhz);
  const double amp = consts.grueneisen * c0 / f_mhz; // beta*c0^3/(Cp*f)
  return {0.0, -amp * bracket};
}

Complex sir_spectrum(double f_mhz, const TransducerPose& pose,
                     const Vec3& source_mm, double aperture_a_mm,
                     double aperture_b_mm, double speed_of_sound_mm_per_us) {
  const Vec3 diff = pose.position() - source_mm;
  const double d = diff.norm();
  if (d <= 0.0)
    throw NumericalError("SIR undefined: source at the aperture center");

  const auto [x_tr, y_tr] = local_coords(pose, source_mm);
  const double c0 = speed_of_sound_mm_per_us;
  const double ab = aperture_a_mm * aperture_b_mm;
  const double phase = -2.0 * kPi * f_mhz * d / c0;
  const double sx = sinc(kPi * f_mhz * aperture_a_mm * x_tr / (c0 * d));
  const double sy = sinc(kPi * f_mhz * aperture_b_mm * y_tr / (c0 * d));
  const double mag = ab / (2.0 * kPi * d) * sx * sy;
  return {mag * std::cos(phase), mag * std::sin(phase)};
}

Complex eir_sample(const Eir& eir, const FrequencyLattice& lattice, int l) {
  if (l < 0 || l >= lattice.num_freqs)
    throw ShapeError("EIR frequency index out of range");
  switch (eir.kind) {
    case Eir::Kind::Identity:
      return {1.0, 0.0};
    case Eir::Kind::Analytic: {
      const double f = lattice.freq_mhz(l);
      const double fwhm = eir.fractional_bandwidth * eir.center_mhz;
      const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
      const double mag =
          std::exp(-0.5 * (f - eir.center_mhz) * (f - eir.center_mhz) /
                   (sigma * sigma));
      const double phase = -2.0 * kPi * f * eir.delay_us;
      return {mag * std::cos(phase), mag * std::sin(phase)};
    }
    case Eir::Kind::Tabulated:
      if (static_cast<int>(eir.table.size()) != lattice.num_freqs)
        throw ShapeError("tabulated EIR length does not match lattice");
      return eir.table[l];
  }
  throw ConfigError("unknown EIR kind");
}

} // namespace oat
