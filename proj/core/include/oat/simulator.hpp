// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "oat/system_operator.hpp"

namespace oat {

struct SpherePrimitive {
  Vec3 center_mm;
  double radius_mm = 0.0;
  double value = 0.0;
};

/// Infinite cylinder; the grid bounds clip it during rasterization.
struct TubePrimitive {
  Vec3 point_mm;      // any point on the axis
  Vec3 direction;     // need not be normalized
  double radius_mm = 0.0;
  double value = 0.0;
};

struct Phantom {
  std::vector<SpherePrimitive> spheres;
  std::vector<TubePrimitive> tubes;

  /// Sum of the values of all primitives containing the point.
  double sample(const Vec3& p) const;
  void validate() const;
};

struct NoiseModel {
  double sigma = 0.0; // std-dev of the time-domain samples, data units
  std::uint64_t seed = 0;
};

struct SimulationResult {
  FrequencyData freq;
  std::optional<TimeData> time;
};

/// Voxel value = sum of primitive values at the voxel center.
CoefficientVector rasterize(const Phantom& phantom, const ImageGrid& grid);

/// Forward-projects theta and adds white Gaussian noise injected on the
/// temporal samples, so time- and frequency-domain pipelines see the same
/// noise realization. The per-sample counter-based stream makes the result
/// independent of thread count.
SimulationResult simulate(const CoefficientVector& theta,
                          const SystemOperator& op, const NoiseModel& noise,
                          bool want_time_data = false);

/// Noise std-dev that hits the requested SNR (dB) on the given clean data.
double sigma_for_snr_db(const TimeData& clean, double snr_db);

/// Empirical SNR in dB of `noisy` against `clean`.
double empirical_snr_db(const TimeData& clean, const TimeData& noisy);

/// Pressure of a uniform sphere observed at a point: a bipolar linear ramp
/// supported on |t - d/c0| <= R/c0, scaled by Grueneisen/(2d).
/// Throws NumericalError if the observation point is inside the sphere.
double analytic_sphere_pressure(double t_us, const SpherePrimitive& sphere,
                                const Vec3& observation_mm,
                                const AcousticConstants& consts);

/// Six-tube arrangement: three vertical tubes near the frame radius and
/// three tilted tubes further in, value pairs from the nickel-sulfate
/// absorption ratios. Coordinates declared here are the ground truth used
/// by tests; `frame_radius_mm` scales the whole arrangement.
Phantom make_six_tube_phantom(double frame_radius_mm,
                              double tube_radius_mm = 0.405);

} // namespace oat
