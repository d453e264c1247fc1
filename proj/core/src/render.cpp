// SPDX-License-Identifier: Apache-2.0
#include "oat/io/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "oat/errors.hpp"

namespace oat::io {

void DisplayWindow::validate() const {
  if (!(theta_up > theta_low))
    throw ConfigError("display window must have theta_up > theta_low");
}

DisplayWindow DisplayWindow::from_range(std::span<const double> values) {
  if (values.empty()) throw ShapeError("empty volume");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0; // constant volume maps to 0
  return {lo, hi};
}

std::uint8_t window_to_uint8(double v, const DisplayWindow& w) {
  w.validate();
  const double clamped = std::clamp(v, w.theta_low, w.theta_up);
  const double scaled =
      255.0 * (clamped - w.theta_low) / (w.theta_up - w.theta_low);
  return static_cast<std::uint8_t>(std::llround(scaled));
}

std::vector<std::uint8_t> window_to_uint8(std::span<const double> values,
                                          const DisplayWindow& w) {
  w.validate();
  std::vector<std::uint8_t> out(values.size());
  const double scale = 255.0 / (w.theta_up - w.theta_low);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double clamped = std::clamp(values[i], w.theta_low, w.theta_up);
    out[i] =
        static_cast<std::uint8_t>(std::llround(scale * (clamped - w.theta_low)));
  }
  return out;
}

namespace {

std::vector<double> mip_values(const CoefficientVector& vol, Axis axis,
                               int& width, int& height) {
  const ImageGrid& g = vol.grid;
  if (vol.values.empty()) throw ShapeError("empty volume");
  const std::size_t sy = static_cast<std::size_t>(g.nx);
  const std::size_t sz = sy * g.ny;

  int w = 0, h = 0, depth = 0;
  std::size_t du = 0, dv = 0, dray = 0;
  switch (axis) {
    case Axis::Z: w = g.nx; h = g.ny; depth = g.nz; du = 1; dv = sy; dray = sz; break;
    case Axis::Y: w = g.nx; h = g.nz; depth = g.ny; du = 1; dv = sz; dray = sy; break;
    case Axis::X: w = g.ny; h = g.nz; depth = g.nx; du = sy; dv = sz; dray = 1; break;
  }
  width = w;
  height = h;
  std::vector<double> out(static_cast<std::size_t>(w) * h,
                          -std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(static)
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double m = -std::numeric_limits<double>::infinity();
      const std::size_t base = u * du + static_cast<std::size_t>(v) * dv;
      for (int k = 0; k < depth; ++k)
        m = std::max(m, vol.values[base + k * dray]);
      out[static_cast<std::size_t>(v) * w + u] = m;
    }
  }
  return out;
}

} // namespace

Image8 mip_render(const CoefficientVector& vol, Axis axis,
                  const DisplayWindow& window) {
  Image8 img;
  const std::vector<double> m = mip_values(vol, axis, img.width, img.height);
  img.pixels = window_to_uint8(m, window);
  return img;
}

Image8 mip_render(const CoefficientVector& vol, Axis axis) {
  // window over the volume range so disjoint-blob composites stay comparable
  return mip_render(vol, axis,
                    DisplayWindow::from_range(std::span<const double>(
                        vol.values.data(), vol.values.size())));
}

Image8 slice_render(const CoefficientVector& vol, Axis axis, int index,
                    const DisplayWindow& window) {
  const ImageGrid& g = vol.grid;
  const std::size_t sy = static_cast<std::size_t>(g.nx);
  const std::size_t sz = sy * g.ny;
  int w = 0, h = 0, depth = 0;
  std::size_t du = 0, dv = 0, dray = 0;
  switch (axis) {
    case Axis::Z: w = g.nx; h = g.ny; depth = g.nz; du = 1; dv = sy; dray = sz; break;
    case Axis::Y: w = g.nx; h = g.nz; depth = g.ny; du = 1; dv = sz; dray = sy; break;
    case Axis::X: w = g.ny; h = g.nz; depth = g.nx; du = sy; dv = sz; dray = 1; break;
  }
  if (index < 0 || index >= depth) throw ShapeError("slice index out of range");

  Image8 img;
  img.width = w;
  img.height = h;
  std::vector<double> vals(static_cast<std::size_t>(w) * h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      vals[static_cast<std::size_t>(v) * w + u] =
          vol.values[u * du + static_cast<std::size_t>(v) * dv +
                     static_cast<std::size_t>(index) * dray];
  img.pixels = window_to_uint8(vals, window);
  return img;
}

void write_pgm(const std::filesystem::path& path, const Image8& img) {
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
    throw ShapeError("image pixel count does not match its dimensions");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
  if (!os) throw ConfigError("write failed: " + path.string());
}

} // namespace oat::io
