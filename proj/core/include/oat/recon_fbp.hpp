// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "oat/system_operator.hpp"

namespace oat {

struct FbpConfig {
  double cutoff_mhz = 0.0;
  ImageGrid grid;
  /// Per-pose surface quadrature weights; filled from the scan geometry
  /// when empty.
  std::vector<double> pose_weights;
  enum class Interp { Linear, Cubic };
  Interp interp = Interp::Linear;
  /// Overall scale on top of the -1/(2*pi*Gamma*Rs) prefactor. Unity makes
  /// a dense-view scan of a centered sphere reproduce the phantom value.
  double calibration = 1.0;
};

/// Hann deconvolution window, 1 at f=0 falling to 0 at the cutoff.
double hann_window(double f_mhz, double cutoff_mhz);

/// Estimates the pressure traces from voltage data: regularized spectral
/// division by the EIR followed by the Hann low-pass.
TimeData deconvolve(const TimeData& u, const Eir& eir, double cutoff_mhz);

/// Filtered backprojection over the spherical measurement surface.
/// `pressure` must hold one trace per pose of `geom`, ordered like
/// enumerate_poses.
CoefficientVector fbp_reconstruct(const TimeData& pressure,
                                  const ScanGeometry& geom,
                                  const AcousticConstants& consts,
                                  const FbpConfig& cfg);

} // namespace oat
