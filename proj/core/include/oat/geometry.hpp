// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oat {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }

  /// Rotation about the vertical (z) axis by `angle_rad`.
  Vec3 rotated_z(double angle_rad) const {
    const double c = std::cos(angle_rad);
    const double s = std::sin(angle_rad);
    return {c * x - s * y, s * x + c * y, z};
  }
};

/// Transducer position on the measurement sphere, stored in spherical
/// coordinates (radius, polar angle from +z, azimuth). The detecting
/// surface normal points at the global origin.
struct TransducerPose {
  double radius_mm = 0.0;
  double polar_rad = 0.0;
  double azimuth_rad = 0.0;

  Vec3 position() const {
    const double st = std::sin(polar_rad);
    return {radius_mm * st * std::cos(azimuth_rad),
            radius_mm * st * std::sin(azimuth_rad),
            radius_mm * std::cos(polar_rad)};
  }

  /// Unit vector of the local transverse axis along the arc (polar) direction.
  Vec3 axis_polar() const {
    const double ct = std::cos(polar_rad);
    return {-ct * std::cos(azimuth_rad), -ct * std::sin(azimuth_rad),
            std::sin(polar_rad)};
  }

  /// Unit vector of the local transverse axis along the azimuthal direction.
  Vec3 axis_azimuth() const {
    return {-std::sin(azimuth_rad), std::cos(azimuth_rad), 0.0};
  }
};

/// Arc probe on a sphere plus a set of rotation views. Every
/// (view, active transducer) pair becomes one virtual pose; the pose order
/// (view-major, then transducer) defines the measurement index q.
struct ScanGeometry {
  double probe_radius_mm = 65.0;
  double arc_span_deg = 152.0;
  int num_transducers = 64;
  double transducer_width_a_mm = 2.0;  // along the arc (polar) direction
  double transducer_height_b_mm = 2.0; // along the azimuthal direction
  std::vector<double> view_angles_rad; // object rotation angles, increasing
  int active_first = 0;                // first active transducer index
  int active_count = 64;

  int num_views() const { return static_cast<int>(view_angles_rad.size()); }
  int num_poses() const { return num_views() * active_count; }

  /// Polar angle of transducer `t`. Centers are uniformly spaced over the
  /// arc span, the arc centered on the equator of the sphere.
  double transducer_polar_rad(int t) const;

  /// Uniformly spaced view angles 2*pi*k/n, k = 0..n-1.
  static std::vector<double> uniform_views(int n);

  /// Throws ConfigError if any invariant is violated.
  void validate() const;
};

/// Uniform Cartesian lattice of spherical voxels. Linear index is
/// x-fastest: n = (iz*ny + iy)*nx + ix.
struct ImageGrid {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double spacing_mm = 0.0;
  Vec3 center_mm;

  std::size_t num_voxels() const {
    return static_cast<std::size_t>(nx) * ny * nz;
  }
  double voxel_radius_mm() const { return 0.5 * spacing_mm; }

  std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(iz) * ny + iy) * nx + ix;
  }

  Vec3 voxel_center(int ix, int iy, int iz) const {
    return {center_mm.x + (ix - 0.5 * (nx - 1)) * spacing_mm,
            center_mm.y + (iy - 0.5 * (ny - 1)) * spacing_mm,
            center_mm.z + (iz - 0.5 * (nz - 1)) * spacing_mm};
  }

  Vec3 voxel_center(std::size_t n) const {
    const int ix = static_cast<int>(n % nx);
    const int iy = static_cast<int>((n / nx) % ny);
    const int iz = static_cast<int>(n / (static_cast<std::size_t>(nx) * ny));
    return voxel_center(ix, iy, iz);
  }

  void validate() const;
};

/// All (view, transducer) poses, view-major. The object rotation of a view
/// is realized as the opposite rotation of the probe about z.
std::vector<TransducerPose> enumerate_poses(const ScanGeometry& geom);

/// Transverse coordinates of a point in the local frame of a pose.
/// Only the two coordinates used by the far-field aperture response exist.
inline std::array<double, 2> local_coords(const TransducerPose& pose,
                                          const Vec3& p) {
  const double ct = std::cos(pose.polar_rad);
  const double st = std::sin(pose.polar_rad);
  const double cp = std::cos(pose.azimuth_rad);
  const double sp = std::sin(pose.azimuth_rad);
  return {-p.x * ct * cp - p.y * ct * sp + p.z * st, -p.x * sp + p.y * cp};
}

/// Per-pose surface patch area on the measurement sphere
/// (polar increment x azimuth increment x sin(polar) x R^2), used as the
/// quadrature weight of the backprojection surface integral.
std::vector<double> pose_surface_weights(const ScanGeometry& geom);

} // namespace oat
