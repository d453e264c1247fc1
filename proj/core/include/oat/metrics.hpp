// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "oat/system_operator.hpp"

namespace oat {

struct GaussianFit {
  double fwhm_px = 0.0;
  double peak = 0.0;
  double sigma_px = 0.0;
  double rms_residual = 0.0;
  bool converged = false;
};

/// Fits G[n1,n2] = peak * exp(-(n1^2+n2^2)/(2 sigma^2)) to a square patch of
/// side 2*half_width+1 centered on a hot spot; log-linear seed, then
/// Gauss-Newton. FWHM = 2 sqrt(2 ln 2) sigma.
GaussianFit gaussian_fit_fwhm(std::span<const double> patch, int half_width);

/// Voxel index lists of the signal and background regions.
struct RoiSpec {
  std::vector<std::size_t> signal;
  std::vector<std::size_t> background;
};

struct RoiStats {
  double signal_mean = 0.0;
  double background_mean = 0.0;
  double sigma_b = 0.0; // (N_b - 1) divisor
};

RoiStats roi_stats(const CoefficientVector& theta, const RoiSpec& roi);

/// |signal mean - background mean| / sigma_b; +infinity when sigma_b == 0.
double cnr(const RoiStats& stats);

/// A threadlike structure along z: nominal transverse center, z extent of
/// the per-slice analysis, patch half-width in pixels, and the b-ROI
/// sampling rule (random voxels per slice within a ring around the hot
/// spot, excluding its immediate neighborhood).
struct StructureSpec {
  double center_x_mm = 0.0;
  double center_y_mm = 0.0;
  double z_min_mm = 0.0;
  double z_max_mm = 0.0;
  int patch_half_px = 10;
  int recenter_radius_px = 3; // argmax search radius around the nominal center
  int broi_per_slice = 50;
  double broi_radius_mm = 5.0;
  double broi_exclude_mm = 0.5;
  std::uint64_t broi_seed = 99;
};

/// Builds the s-ROI (hot-spot voxel per slice) and seeded random b-ROI for
/// a structure in a volume.
RoiSpec build_roi(const CoefficientVector& theta, const StructureSpec& spec);

/// Per-slice Gaussian fits along the structure; returns FWHM in mm averaged
/// over slices with converged fits.
struct StructureResolution {
  double mean_fwhm_mm = 0.0;
  int slices_used = 0;
  int slices_failed = 0;
};
StructureResolution fwhm_along_structure(const CoefficientVector& theta,
                                         const StructureSpec& spec);

struct TradeoffPoint {
  double reg_param = 0.0;
  double mean_fwhm_mm = 0.0;
  double sigma_b = 0.0;
  double signal_mean = 0.0;
  double cnr = 0.0;
  bool fit_ok = false;
};

/// Reconstructs once per regularization value and measures the tradeoff
/// metrics of each volume.
std::vector<TradeoffPoint> sweep_tradeoff(
    const std::function<CoefficientVector(double)>& reconstruct,
    const std::vector<double>& reg_values, const StructureSpec& spec);

std::string tradeoff_csv(const std::vector<TradeoffPoint>& points);

} // namespace oat
