// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

#include "oat/geometry.hpp"

namespace oat {

using Complex = std::complex<double>;

/// Medium/illumination constants. The thermal expansion coefficient and heat
/// capacity never appear individually, only through the Grueneisen product.
struct AcousticConstants {
  double speed_of_sound_mm_per_us = 1.47;
  double grueneisen = 2000.0; // beta*c0^2/Cp, arbitrary units
  double voxel_radius_mm = 0.05;

  void validate() const;
};

/// Temporal frequency lattice of the half-spectrum of K real samples.
struct FrequencyLattice {
  int num_freqs = 0;       // L = K/2 + 1
  double delta_f_mhz = 0.0;
  int num_time_samples = 0; // K (even)
  double delta_t_us = 0.0;

  static FrequencyLattice from_time(int num_time_samples, double delta_t_us);

  double freq_mhz(int l) const { return l * delta_f_mhz; }
  double nyquist_mhz() const { return 0.5 / delta_t_us; }
  void validate() const;
};

/// Acousto-electric impulse response in the frequency domain.
struct Eir {
  enum class Kind { Identity, Analytic, Tabulated };

  Kind kind = Kind::Identity;
  // analytic variant: unit-peak Gaussian magnitude, linear phase
  double center_mhz = 0.0;
  double fractional_bandwidth = 0.8;
  double delay_us = 0.0;
  // tabulated variant: one sample per lattice frequency
  std::vector<Complex> table;

  static Eir identity() { return {}; }
  static Eir analytic(double center_mhz, double fractional_bandwidth = 0.8,
                      double delay_us = 0.0);
  static Eir tabulated(std::vector<Complex> table);
};

/// Spectrum of the bipolar pressure pulse radiated by a uniform spherical
/// voxel of radius `consts.voxel_radius_mm`, zero at f = 0.
Complex p0_spectrum(double f_mhz, const AcousticConstants& consts);

/// Far-field spectrum of the spatial impulse response of a flat rectangular
/// aperture (a x b mm) at `pose`, for a point source at `source_mm`.
/// Throws NumericalError if the source coincides with the aperture center.
Complex sir_spectrum(double f_mhz, const TransducerPose& pose,
                     const Vec3& source_mm, double aperture_a_mm,
                     double aperture_b_mm, double speed_of_sound_mm_per_us);

/// EIR sample at lattice index l. Throws ShapeError on an out-of-range index
/// or a tabulated EIR of the wrong length.
Complex eir_sample(const Eir& eir, const FrequencyLattice& lattice, int l);

} // namespace oat
