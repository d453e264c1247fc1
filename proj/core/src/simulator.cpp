// SPDX-License-Identifier: Apache-2.0
#include "oat/simulator.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "oat/errors.hpp"
#include "oat/rng.hpp"

namespace oat {

namespace {
constexpr double kPi = std::numbers::pi;

bool in_tube(const TubePrimitive& t, const Vec3& p) {
  const double dn = t.direction.norm();
  const Vec3 u{t.direction.x / dn, t.direction.y / dn, t.direction.z / dn};
  const Vec3 rel = p - t.point_mm;
  const double along = rel.dot(u);
  const Vec3 radial = rel - u * along;
  return radial.norm() <= t.radius_mm;
}
} // namespace

void Phantom::validate() const {
  for (const auto& s : spheres) {
    if (s.radius_mm <= 0.0) throw ConfigError("sphere radius must be > 0");
    if (s.value < 0.0) throw ConfigError("sphere value must be >= 0");
  }
  for (const auto& t : tubes) {
    if (t.radius_mm <= 0.0) throw ConfigError("tube radius must be > 0");
    if (t.value < 0.0) throw ConfigError("tube value must be >= 0");
    if (t.direction.norm() <= 0.0)
      throw ConfigError("tube direction must be nonzero");
  }
}

double Phantom::sample(const Vec3& p) const {
  double v = 0.0;
  for (const auto& s : spheres)
    if ((p - s.center_mm).norm() <= s.radius_mm) v += s.value;
  for (const auto& t : tubes)
    if (in_tube(t, p)) v += t.value;
  return v;
}

CoefficientVector rasterize(const Phantom& phantom, const ImageGrid& grid) {
  grid.validate();
  phantom.validate();
  CoefficientVector out = CoefficientVector::zeros(grid);
  const std::size_t n = grid.num_voxels();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = phantom.sample(grid.voxel_center(i));
  return out;
}

SimulationResult simulate(const CoefficientVector& theta,
                          const SystemOperator& op, const NoiseModel& noise,
                          bool want_time_data) {
  if (noise.sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  SimulationResult res{op.apply(theta), std::nullopt};
  const int Q = res.freq.num_poses;
  const int K = res.freq.lattice.num_time_samples;
  if (noise.sigma == 0.0) {
    if (want_time_data) res.time = freq_to_time(res.freq);
    return res;
  }

  // Streams are keyed by the view angle value (not the pose index), so a
  // view subset of a dense scan carries exactly the noise a direct
  // simulation of those views would draw.
  const auto& views = op.geometry().view_angles_rad;
  const int per_view = op.geometry().active_count;
  TimeData eta{Q, res.freq.lattice,
               std::vector<double>(static_cast<std::size_t>(Q) * K)};
#pragma omp parallel for schedule(static)
  for (int q = 0; q < Q; ++q) {
    const double angle = views[q / per_view];
    const std::uint64_t stream =
        noise.seed ^ rng::splitmix64(std::bit_cast<std::uint64_t>(angle));
    const std::uint64_t t_idx = static_cast<std::uint64_t>(q % per_view);
    for (int k = 0; k < K; ++k)
      eta.values[static_cast<std::size_t>(q) * K + k] =
          noise.sigma * rng::normal_at(stream, (t_idx << 32) | k);
  }

  if (want_time_data) {
    TimeData clean = freq_to_time(res.freq);
    for (std::size_t i = 0; i < clean.values.size(); ++i)
      clean.values[i] += eta.values[i];
    res.time = std::move(clean);
  }
  const FrequencyData eta_spec = time_to_freq(eta);
  for (std::size_t i = 0; i < res.freq.values.size(); ++i)
    res.freq.values[i] += eta_spec.values[i];
  return res;
}

double sigma_for_snr_db(const TimeData& clean, double snr_db) {
  double power = 0.0;
  for (double v : clean.values) power += v * v;
  power /= static_cast<double>(clean.values.size());
  return std::sqrt(power / std::pow(10.0, snr_db / 10.0));
}

double empirical_snr_db(const TimeData& clean, const TimeData& noisy) {
  if (clean.size() != noisy.size())
    throw ShapeError("empirical_snr_db: size mismatch");
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    ps += clean.values[i] * clean.values[i];
    const double d = noisy.values[i] - clean.values[i];
    pn += d * d;
  }
  return 10.0 * std::log10(ps / pn);
}

double analytic_sphere_pressure(double t_us, const SpherePrimitive& sphere,
                                const Vec3& observation_mm,
                                const AcousticConstants& consts) {
  const double d = (observation_mm - sphere.center_mm).norm();
  if (d <= sphere.radius_mm)
    throw NumericalError("observation point inside the sphere");
  const double c0 = consts.speed_of_sound_mm_per_us;
  const double tau = t_us - d / c0;
  if (std::abs(tau) > sphere.radius_mm / c0) return 0.0;
  // -(Gamma*c0*pi) * value * tau / (2*pi*d)
  return -consts.grueneisen * c0 * sphere.value * tau / (2.0 * d);
}

Phantom make_six_tube_phantom(double frame_radius_mm, double tube_radius_mm) {
  // Pair i holds one outer vertical tube at 0.72*frame radius and one inner
  // tube tilted off vertical at 0.30*frame radius, 60 degrees ahead.
  const double values[3] = {5.681, 6.18, 6.555};
  const double outer_r = 0.72 * frame_radius_mm;
  const double inner_r = 0.30 * frame_radius_mm;
  const double tilt = 0.25; // xy drift per unit z of the inner tubes

  Phantom ph;
  for (int i = 0; i < 3; ++i) {
    const double ang_out = (90.0 + 120.0 * i) * kPi / 180.0;
    const double ang_in = (150.0 + 120.0 * i) * kPi / 180.0;
    ph.tubes.push_back({{outer_r * std::cos(ang_out),
                         outer_r * std::sin(ang_out), 0.0},
                        {0.0, 0.0, 1.0},
                        tube_radius_mm,
                        values[i]});
    // inner tubes drift tangentially with height
    ph.tubes.push_back({{inner_r * std::cos(ang_in), inner_r * std::sin(ang_in),
                         0.0},
                        {-tilt * std::sin(ang_in), tilt * std::cos(ang_in), 1.0},
                        tube_radius_mm,
                        values[i]});
  }
  return ph;
}

} // namespace oat
