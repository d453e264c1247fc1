// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "oat/geometry.hpp"
#include "oat/physics.hpp"

namespace oat {

/// Expansion coefficients of the absorbed energy density on an ImageGrid.
struct CoefficientVector {
  ImageGrid grid;
  std::vector<double> values;

  static CoefficientVector zeros(const ImageGrid& grid) {
    return {grid, std::vector<double>(grid.num_voxels(), 0.0)};
  }
  std::size_t size() const { return values.size(); }
};

/// Q*K real voltage samples, ordered [q*K + k].
struct TimeData {
  int num_poses = 0;
  FrequencyLattice lattice;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Q*L complex half-spectrum samples, ordered [q*L + l].
struct FrequencyData {
  int num_poses = 0;
  FrequencyLattice lattice;
  std::vector<Complex> values;

  std::size_t size() const { return values.size(); }
};

/// Weight of frequency bin l in the Hermitian half-spectrum inner product:
/// 1 for the DC and Nyquist bins, 2 for interior bins (each interior bin
/// stands for a conjugate pair of the full spectrum).
inline double hermitian_weight(int l, int num_freqs) {
  return (l == 0 || l == num_freqs - 1) ? 1.0 : 2.0;
}

/// Weighted real inner product <x, y> = sum w_l Re(x conj(y)).
double weighted_inner(const FrequencyData& x, const FrequencyData& y);

/// sqrt(<x, x>_w).
double weighted_norm(const FrequencyData& x);

/// Per-channel DFT bridges between the temporal samples and the
/// half-spectrum, using the continuous-transform scaling (forward ~ *dT,
/// inverse ~ *df). Round trips are identity to machine precision.
FrequencyData time_to_freq(const TimeData& u);
TimeData freq_to_time(const FrequencyData& u);

/// Matrix-free discrete imaging operator mapping voxel coefficients to
/// Q*L complex voltage spectra. Element (qL+l, n) is the product of the
/// voxel pulse spectrum, the EIR sample and the aperture-normalized
/// far-field SIR at frequency l*df.
class SystemOperator {
 public:
  SystemOperator(ScanGeometry geom, ImageGrid grid, AcousticConstants consts,
                 Eir eir, FrequencyLattice lattice);

  const ScanGeometry& geometry() const { return geom_; }
  const ImageGrid& grid() const { return grid_; }
  const AcousticConstants& constants() const { return consts_; }
  const FrequencyLattice& lattice() const { return lattice_; }
  const std::vector<TransducerPose>& poses() const { return poses_; }

  int num_poses() const { return static_cast<int>(poses_.size()); }
  std::size_t data_size() const {
    return static_cast<std::size_t>(num_poses()) * lattice_.num_freqs;
  }
  std::size_t num_voxels() const { return grid_.num_voxels(); }

  /// Reference single-element evaluation (exact trig, no recurrences).
  Complex element(int q, int l, std::size_t n) const;

  FrequencyData apply(const CoefficientVector& theta) const;
  CoefficientVector apply_adjoint(const FrequencyData& data) const;

 private:
  ScanGeometry geom_;
  ImageGrid grid_;
  AcousticConstants consts_;
  Eir eir_;
  FrequencyLattice lattice_;
  std::vector<TransducerPose> poses_;
  std::vector<Complex> pulse_eir_; // p0_spectrum(l*df) * eir(l), per l
};

} // namespace oat
