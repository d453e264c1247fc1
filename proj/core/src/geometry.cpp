// SPDX-License-Identifier: Apache-2.0
#include "oat/geometry.hpp"

#include <cmath>
#include <numbers>

#include "oat/errors.hpp"

namespace oat {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}
} // namespace

double ScanGeometry::transducer_polar_rad(int t) const {
  const double span = arc_span_deg * std::numbers::pi / 180.0;
  const double mid = 0.5 * std::numbers::pi;
  if (num_transducers == 1) return mid;
  const double step = span / (num_transducers - 1);
  return mid - 0.5 * span + t * step;
}

std::vector<double> ScanGeometry::uniform_views(int n) {
  std::vector<double> v(n);
  for (int k = 0; k < n; ++k) v[k] = kTwoPi * k / n;
  return v;
}

void ScanGeometry::validate() const {
  if (probe_radius_mm <= 0.0) throw ConfigError("probe_radius_mm must be > 0");
  if (transducer_width_a_mm <= 0.0 || transducer_height_b_mm <= 0.0)
    throw ConfigError("transducer aperture a, b must be > 0");
  if (arc_span_deg <= 0.0 || arc_span_deg > 180.0)
    throw ConfigError("arc_span_deg must be in (0, 180]");
  if (num_transducers < 1) throw ConfigError("num_transducers must be >= 1");
  if (view_angles_rad.empty()) throw ConfigError("at least one view required");
  for (std::size_t i = 0; i < view_angles_rad.size(); ++i) {
    const double a = view_angles_rad[i];
    if (a < 0.0 || a >= kTwoPi)
      throw ConfigError("view angles must lie in [0, 2*pi)");
    if (i > 0 && a <= view_angles_rad[i - 1])
      throw ConfigError("view angles must be strictly increasing");
  }
  if (active_first < 0 || active_count < 1 ||
      active_first + active_count > num_transducers)
    throw ConfigError("active transducer range out of bounds");
}

std::vector<TransducerPose> enumerate_poses(const ScanGeometry& geom) {
  geom.validate();
  std::vector<TransducerPose> poses;
  poses.reserve(geom.num_poses());
  for (double view : geom.view_angles_rad) {
    // object rotated by +view == probe rotated by -view
    const double azimuth = wrap_angle(-view);
    for (int t = geom.active_first; t < geom.active_first + geom.active_count;
         ++t) {
      poses.push_back({geom.probe_radius_mm, geom.transducer_polar_rad(t),
                       azimuth});
    }
  }
  return poses;
}

std::vector<double> pose_surface_weights(const ScanGeometry& geom) {
  const double span = geom.arc_span_deg * std::numbers::pi / 180.0;
  const double dpolar =
      geom.num_transducers > 1 ? span / (geom.num_transducers - 1) : span;
  const double dazimuth = kTwoPi / geom.num_views();
  const double r2 = geom.probe_radius_mm * geom.probe_radius_mm;

  std::vector<double> w;
  w.reserve(geom.num_poses());
  for (int v = 0; v < geom.num_views(); ++v) {
    for (int t = geom.active_first; t < geom.active_first + geom.active_count;
         ++t) {
      w.push_back(dpolar * dazimuth * std::sin(geom.transducer_polar_rad(t)) *
                  r2);
    }
  }
  return w;
}

void ImageGrid::validate() const {
  if (nx < 1 || ny < 1 || nz < 1) throw ConfigError("grid dims must be >= 1");
  if (spacing_mm <= 0.0) throw ConfigError("grid spacing must be > 0");
}

} // namespace oat
