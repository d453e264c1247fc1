// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oat::io {

enum class Dtype { f32, f64, c64, c128 };

std::size_t dtype_size(Dtype d);
std::string dtype_name(Dtype d);
Dtype dtype_from_name(const std::string& name);

/// Physical metadata carried in the container header.
struct ArrayMeta {
  std::optional<double> delta_t_us;
  std::optional<double> delta_f_mhz;
  std::optional<double> spacing_mm;
  std::optional<std::array<double, 3>> center_mm;
  std::optional<std::string> geometry_hash;
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> view_angles_rad;
};

/// On-disk format: one UTF-8 JSON header line (magic "OATv1", dtype, shape,
/// axis labels, meta) terminated by '\n', immediately followed by the raw
/// little-endian C-order payload.
struct ArrayContainer {
  Dtype dtype = Dtype::f64;
  std::vector<std::size_t> shape;
  std::vector<std::string> axes;
  ArrayMeta meta;
  std::vector<std::byte> payload;

  static ArrayContainer make(Dtype dtype, std::vector<std::size_t> shape,
                             std::vector<std::string> axes);

  std::size_t element_count() const;

  std::span<float> as_f32();
  std::span<double> as_f64();
  std::span<std::complex<float>> as_c64();
  std::span<std::complex<double>> as_c128();
  std::span<const float> as_f32() const;
  std::span<const double> as_f64() const;
  std::span<const std::complex<float>> as_c64() const;
  std::span<const std::complex<double>> as_c128() const;
};

void write_container(const std::filesystem::path& path,
                     const ArrayContainer& array);
ArrayContainer read_container(const std::filesystem::path& path);

} // namespace oat::io
