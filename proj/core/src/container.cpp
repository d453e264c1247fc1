// SPDX-License-Identifier: Apache-2.0
#include "oat/io/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "oat/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container payload is little-endian");

namespace oat::io {

using nlohmann::json;

std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::f32: return 4;
    case Dtype::f64: return 8;
    case Dtype::c64: return 8;
    case Dtype::c128: return 16;
  }
  throw ConfigError("unknown dtype");
}

std::string dtype_name(Dtype d) {
  switch (d) {
    case Dtype::f32: return "f32";
    case Dtype::f64: return "f64";
    case Dtype::c64: return "c64";
    case Dtype::c128: return "c128";
  }
  throw ConfigError("unknown dtype");
}

Dtype dtype_from_name(const std::string& name) {
  if (name == "f32") return Dtype::f32;
  if (name == "f64") return Dtype::f64;
  if (name == "c64") return Dtype::c64;
  if (name == "c128") return Dtype::c128;
  throw ConfigError("unknown dtype: " + name);
}

ArrayContainer ArrayContainer::make(Dtype dtype, std::vector<std::size_t> shape,
                                    std::vector<std::string> axes) {
  if (shape.size() != axes.size())
    throw ShapeError("container: one axis label per shape entry required");
  ArrayContainer c;
  c.dtype = dtype;
  c.shape = std::move(shape);
  c.axes = std::move(axes);
  c.payload.resize(c.element_count() * dtype_size(dtype));
  return c;
}

std::size_t ArrayContainer::element_count() const {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

namespace {
template <typename T>
std::span<T> typed_span(std::vector<std::byte>& payload, Dtype have,
                        Dtype want) {
  if (have != want) throw ShapeError("container: dtype mismatch");
  return {reinterpret_cast<T*>(payload.data()), payload.size() / sizeof(T)};
}
template <typename T>
std::span<const T> typed_span(const std::vector<std::byte>& payload,
                              Dtype have, Dtype want) {
  if (have != want) throw ShapeError("container: dtype mismatch");
  return {reinterpret_cast<const T*>(payload.data()),
          payload.size() / sizeof(T)};
}
} // namespace

std::span<float> ArrayContainer::as_f32() {
  return typed_span<float>(payload, dtype, Dtype::f32);
}
std::span<double> ArrayContainer::as_f64() {
  return typed_span<double>(payload, dtype, Dtype::f64);
}
std::span<std::complex<float>> ArrayContainer::as_c64() {
  return typed_span<std::complex<float>>(payload, dtype, Dtype::c64);
}
std::span<std::complex<double>> ArrayContainer::as_c128() {
  return typed_span<std::complex<double>>(payload, dtype, Dtype::c128);
}
std::span<const float> ArrayContainer::as_f32() const {
  return typed_span<const float>(payload, dtype, Dtype::f32);
}
std::span<const double> ArrayContainer::as_f64() const {
  return typed_span<const double>(payload, dtype, Dtype::f64);
}
std::span<const std::complex<float>> ArrayContainer::as_c64() const {
  return typed_span<const std::complex<float>>(payload, dtype, Dtype::c64);
}
std::span<const std::complex<double>> ArrayContainer::as_c128() const {
  return typed_span<const std::complex<double>>(payload, dtype, Dtype::c128);
}

namespace {

json meta_to_json(const ArrayMeta& m) {
  json j = json::object();
  if (m.delta_t_us) j["delta_t_us"] = *m.delta_t_us;
  if (m.delta_f_mhz) j["delta_f_mhz"] = *m.delta_f_mhz;
  if (m.spacing_mm) j["spacing_mm"] = *m.spacing_mm;
  if (m.center_mm) j["center_mm"] = *m.center_mm;
  if (m.geometry_hash) j["geometry_hash"] = *m.geometry_hash;
  if (m.sigma) j["sigma"] = *m.sigma;
  if (m.seed) j["seed"] = *m.seed;
  if (m.view_angles_rad) j["view_angles_rad"] = *m.view_angles_rad;
  return j;
}

ArrayMeta meta_from_json(const json& j) {
  ArrayMeta m;
  if (j.contains("delta_t_us")) m.delta_t_us = j["delta_t_us"].get<double>();
  if (j.contains("delta_f_mhz")) m.delta_f_mhz = j["delta_f_mhz"].get<double>();
  if (j.contains("spacing_mm")) m.spacing_mm = j["spacing_mm"].get<double>();
  if (j.contains("center_mm"))
    m.center_mm = j["center_mm"].get<std::array<double, 3>>();
  if (j.contains("geometry_hash"))
    m.geometry_hash = j["geometry_hash"].get<std::string>();
  if (j.contains("sigma")) m.sigma = j["sigma"].get<double>();
  if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("view_angles_rad"))
    m.view_angles_rad = j["view_angles_rad"].get<std::vector<double>>();
  return m;
}

} // namespace

void write_container(const std::filesystem::path& path,
                     const ArrayContainer& array) {
  if (array.payload.size() != array.element_count() * dtype_size(array.dtype))
    throw ShapeError("container: payload size does not match shape/dtype");

  json header;
  header["magic"] = "OATv1";
  header["dtype"] = dtype_name(array.dtype);
  header["shape"] = array.shape;
  header["axes"] = array.axes;
  header["meta"] = meta_to_json(array.meta);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  os << header.dump() << '\n';
  os.write(reinterpret_cast<const char*>(array.payload.data()),
           static_cast<std::streamsize>(array.payload.size()));
  if (!os) throw ConfigError("write failed: " + path.string());
}

ArrayContainer read_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line))
    throw ConfigError("missing container header: " + path.string());

  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ConfigError("bad container header in " + path.string() + ": " +
                      e.what());
  }
  if (header.value("magic", "") != "OATv1")
    throw ConfigError("not an OATv1 container: " + path.string());

  ArrayContainer c;
  c.dtype = dtype_from_name(header.at("dtype").get<std::string>());
  c.shape = header.at("shape").get<std::vector<std::size_t>>();
  c.axes = header.at("axes").get<std::vector<std::string>>();
  if (header.contains("meta")) c.meta = meta_from_json(header["meta"]);

  const std::size_t bytes = c.element_count() * dtype_size(c.dtype);
  c.payload.resize(bytes);
  is.read(reinterpret_cast<char*>(c.payload.data()),
          static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(is.gcount()) != bytes)
    throw ShapeError("container payload truncated: " + path.string());
  return c;
}

} // namespace oat::io
