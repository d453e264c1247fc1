// SPDX-License-Identifier: Apache-2.0
#include "oat/recon_fbp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oat/errors.hpp"
#include "oat/fft.hpp"

namespace oat {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double interp_linear(const double* trace, int len, double pos) {
  if (pos <= 0.0) return trace[0];
  if (pos >= len - 1) return trace[len - 1];
  const int k = static_cast<int>(pos);
  const double frac = pos - k;
  return trace[k] + frac * (trace[k + 1] - trace[k]);
}

// Catmull-Rom on four neighbors, clamped ends.
double interp_cubic(const double* trace, int len, double pos) {
  if (pos <= 0.0) return trace[0];
  if (pos >= len - 1) return trace[len - 1];
  const int k = static_cast<int>(pos);
  const double t = pos - k;
  const double p0 = trace[std::max(k - 1, 0)];
  const double p1 = trace[k];
  const double p2 = trace[k + 1];
  const double p3 = trace[std::min(k + 2, len - 1)];
  return p1 + 0.5 * t * (p2 - p0 +
                         t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                              t * (3.0 * (p1 - p2) + p3 - p0)));
}
} // namespace

double hann_window(double f_mhz, double cutoff_mhz) {
  if (f_mhz > cutoff_mhz) return 0.0;
  return 0.5 * (1.0 - std::cos(kPi * (cutoff_mhz - f_mhz) / cutoff_mhz));
}

TimeData deconvolve(const TimeData& u, const Eir& eir, double cutoff_mhz) {
  const FrequencyLattice& lat = u.lattice;
  if (cutoff_mhz <= 0.0 || cutoff_mhz > lat.nyquist_mhz() * (1.0 + 1e-12))
    throw ConfigError("cutoff frequency must be in (0, Nyquist]");

  const int L = lat.num_freqs;
  std::vector<Complex> eir_vals(L);
  double max_sq = 0.0;
  for (int l = 0; l < L; ++l) {
    eir_vals[l] = eir_sample(eir, lat, l);
    max_sq = std::max(max_sq, std::norm(eir_vals[l]));
  }
  if (max_sq <= 0.0) throw NumericalError("EIR is identically zero");
  const double delta = 1e-6 * max_sq; // keeps true in-band zeros finite

  FrequencyData spec = time_to_freq(u);
#pragma omp parallel for schedule(static)
  for (int q = 0; q < spec.num_poses; ++q) {
    for (int l = 0; l < L; ++l) {
      const std::size_t i = static_cast<std::size_t>(q) * L + l;
      const Complex div =
          std::conj(eir_vals[l]) / (std::norm(eir_vals[l]) + delta);
      spec.values[i] *= div * hann_window(lat.freq_mhz(l), cutoff_mhz);
    }
  }
  return freq_to_time(spec);
}

CoefficientVector fbp_reconstruct(const TimeData& pressure,
                                  const ScanGeometry& geom,
                                  const AcousticConstants& consts,
                                  const FbpConfig& cfg) {
  geom.validate();
  cfg.grid.validate();
  consts.validate();
  const int Q = geom.num_poses();
  const int K = pressure.lattice.num_time_samples;
  if (pressure.num_poses != Q)
    throw ShapeError("fbp_reconstruct: pressure traces do not cover the poses");
  if (pressure.size() != static_cast<std::size_t>(Q) * K)
    throw ShapeError("fbp_reconstruct: bad sample count");

  std::vector<double> weights = cfg.pose_weights;
  if (weights.empty()) weights = pose_surface_weights(geom);
  if (weights.size() != static_cast<std::size_t>(Q))
    throw ShapeError("fbp_reconstruct: one quadrature weight per pose required");

  // time derivative computed spectrally: multiply by j*2*pi*f
  const FrequencyData spec = time_to_freq(pressure);
  FrequencyData dspec = spec;
  const int L = spec.lattice.num_freqs;
  for (int q = 0; q < Q; ++q) {
    for (int l = 0; l < L; ++l) {
      const std::size_t i = static_cast<std::size_t>(q) * L + l;
      dspec.values[i] *= Complex(0.0, kTwoPi * spec.lattice.freq_mhz(l));
    }
  }
  const TimeData dpressure = freq_to_time(dspec);

  const auto poses = enumerate_poses(geom);
  std::vector<Vec3> pose_pos(poses.size());
  for (std::size_t q = 0; q < poses.size(); ++q) pose_pos[q] = poses[q].position();

  const double c0 = consts.speed_of_sound_mm_per_us;
  const double dt = pressure.lattice.delta_t_us;
  const double prefactor = -cfg.calibration /
                           (kTwoPi * consts.grueneisen * geom.probe_radius_mm);
  const bool cubic = cfg.interp == FbpConfig::Interp::Cubic;

  CoefficientVector out = CoefficientVector::zeros(cfg.grid);
  const std::size_t N = cfg.grid.num_voxels();
#pragma omp parallel for schedule(static)
  for (std::size_t n = 0; n < N; ++n) {
    const Vec3 r = cfg.grid.voxel_center(n);
    double acc = 0.0;
    for (int q = 0; q < Q; ++q) {
      const double d = (r - pose_pos[q]).norm();
      const double t = d / c0;
      const double pos = t / dt;
      const double* p_tr = &pressure.values[static_cast<std::size_t>(q) * K];
      const double* dp_tr = &dpressure.values[static_cast<std::size_t>(q) * K];
      const double p = cubic ? interp_cubic(p_tr, K, pos)
                             : interp_linear(p_tr, K, pos);
      const double dp = cubic ? interp_cubic(dp_tr, K, pos)
                              : interp_linear(dp_tr, K, pos);
      acc += weights[q] * (2.0 * p + t * dp) / d;
    }
    out.values[n] = prefactor * acc;
  }
  return out;
}

} // namespace oat
