// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "oat/system_operator.hpp"

namespace oat::io {

struct DisplayWindow {
  double theta_low = 0.0;
  double theta_up = 1.0;

  void validate() const;
  static DisplayWindow from_range(std::span<const double> values);
};

struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels; // row-major
};

/// Clamp to the window, map affinely to [0, 255], round half away from zero.
std::uint8_t window_to_uint8(double v, const DisplayWindow& w);
std::vector<std::uint8_t> window_to_uint8(std::span<const double> values,
                                          const DisplayWindow& w);

enum class Axis { X, Y, Z };

/// Maximum intensity projection along an axis, windowed to 8 bit. A default
/// window spans the volume min/max.
Image8 mip_render(const CoefficientVector& vol, Axis axis);
Image8 mip_render(const CoefficientVector& vol, Axis axis,
                  const DisplayWindow& window);

/// Single z/y/x slice, windowed to 8 bit.
Image8 slice_render(const CoefficientVector& vol, Axis axis, int index,
                    const DisplayWindow& window);

void write_pgm(const std::filesystem::path& path, const Image8& img);

} // namespace oat::io
