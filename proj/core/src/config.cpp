// SPDX-License-Identifier: Apache-2.0
#include "oat/io/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "oat/errors.hpp"
#include "oat/io/container.hpp"

namespace oat::io {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double to_double(const std::string& section, const std::string& key,
                 const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": not a number: " + v);
  }
}

} // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cfg;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section]; // section may stay empty
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    cfg.sections_[section].emplace_back(key, value);
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_string(buf.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return get(section, key).has_value();
}

std::optional<std::string> ConfigFile::get(const std::string& section,
                                           const std::string& key) const {
  const auto it = sections_.find(section);
  if (it == sections_.end()) return std::nullopt;
  std::optional<std::string> found;
  for (const auto& [k, v] : it->second)
    if (k == key) found = v; // last occurrence wins
  return found;
}

std::vector<std::string> ConfigFile::get_all(const std::string& section,
                                             const std::string& key) const {
  std::vector<std::string> out;
  const auto it = sections_.find(section);
  if (it == sections_.end()) return out;
  for (const auto& [k, v] : it->second)
    if (k == key) out.push_back(v);
  return out;
}

double ConfigFile::get_double(const std::string& section,
                              const std::string& key, double fallback) const {
  const auto v = get(section, key);
  return v ? to_double(section, key, *v) : fallback;
}

double ConfigFile::require_double(const std::string& section,
                                  const std::string& key) const {
  const auto v = get(section, key);
  if (!v) throw ConfigError("missing required key [" + section + "] " + key);
  return to_double(section, key, *v);
}

int ConfigFile::get_int(const std::string& section, const std::string& key,
                        int fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  const double d = to_double(section, key, *v);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    throw ConfigError("[" + section + "] " + key + ": expected an integer");
  return i;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "off") return false;
  throw ConfigError("[" + section + "] " + key + ": expected a boolean");
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key,
                                   const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

const std::vector<std::pair<std::string, std::string>>& ConfigFile::entries(
    const std::string& section) const {
  static const std::vector<std::pair<std::string, std::string>> empty;
  const auto it = sections_.find(section);
  return it == sections_.end() ? empty : it->second;
}

std::string ConfigFile::dump() const {
  std::ostringstream os;
  for (const auto& [name, entries] : sections_) {
    os << '[' << name << "]\n";
    for (const auto& [k, v] : entries) os << k << " = " << v << '\n';
  }
  return os.str();
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad list element: " + item);
    }
  }
  return out;
}

namespace {

ScanGeometry parse_geometry(const ConfigFile& c) {
  ScanGeometry g;
  g.probe_radius_mm = c.get_double("geometry", "probe_radius_mm", 65.0);
  g.arc_span_deg = c.get_double("geometry", "arc_span_deg", 152.0);
  g.num_transducers = c.get_int("geometry", "num_transducers", 64);
  g.transducer_width_a_mm =
      c.get_double("geometry", "transducer_width_a_mm", 2.0);
  g.transducer_height_b_mm =
      c.get_double("geometry", "transducer_height_b_mm", 2.0);
  if (const auto v = c.get("geometry", "view_angles_rad")) {
    g.view_angles_rad = parse_double_list(*v);
  } else {
    g.view_angles_rad =
        ScanGeometry::uniform_views(c.get_int("geometry", "num_views", 1));
  }
  g.active_first = c.get_int("geometry", "active_first", 0);
  g.active_count =
      c.get_int("geometry", "active_count", g.num_transducers - g.active_first);
  g.validate();
  return g;
}

ImageGrid parse_grid(const ConfigFile& c) {
  ImageGrid g;
  g.nx = c.get_int("grid", "nx", 64);
  g.ny = c.get_int("grid", "ny", 64);
  g.nz = c.get_int("grid", "nz", 64);
  g.spacing_mm = c.get_double("grid", "spacing_mm", 0.1);
  if (const auto v = c.get("grid", "center_mm")) {
    const auto xyz = parse_double_list(*v);
    if (xyz.size() != 3)
      throw ConfigError("[grid] center_mm needs three components");
    g.center_mm = {xyz[0], xyz[1], xyz[2]};
  }
  g.validate();
  return g;
}

Phantom parse_phantom(const ConfigFile& c) {
  Phantom ph;
  const std::string preset = c.get_string("phantom", "preset", "");
  if (preset == "six-tube") {
    ph = make_six_tube_phantom(
        c.get_double("phantom", "preset_frame_radius_mm", 12.7),
        c.get_double("phantom", "preset_tube_radius_mm", 0.405));
  } else if (!preset.empty()) {
    throw ConfigError("unknown phantom preset: " + preset);
  }
  for (const auto& v : c.get_all("phantom", "sphere")) {
    const auto p = parse_double_list(v);
    if (p.size() != 5)
      throw ConfigError("[phantom] sphere = cx,cy,cz,radius,value");
    ph.spheres.push_back({{p[0], p[1], p[2]}, p[3], p[4]});
  }
  for (const auto& v : c.get_all("phantom", "tube")) {
    const auto p = parse_double_list(v);
    if (p.size() != 8)
      throw ConfigError("[phantom] tube = px,py,pz,dx,dy,dz,radius,value");
    ph.tubes.push_back({{p[0], p[1], p[2]}, {p[3], p[4], p[5]}, p[6], p[7]});
  }
  ph.validate();
  return ph;
}

Eir parse_eir(const ConfigFile& c, const FrequencyLattice& lat) {
  const std::string kind = c.get_string("eir", "kind", "identity");
  if (kind == "identity") return Eir::identity();
  if (kind == "analytic") {
    // default: centered mid-band with 80% fractional bandwidth
    const double center =
        c.get_double("eir", "center_mhz", 0.5 * lat.nyquist_mhz());
    return Eir::analytic(center,
                         c.get_double("eir", "fractional_bandwidth", 0.8),
                         c.get_double("eir", "delay_us", 0.0));
  }
  if (kind == "tabulated") {
    const auto file = c.get("eir", "file");
    if (!file) throw ConfigError("[eir] tabulated kind needs file = path");
    return load_tabulated_eir(*file, lat);
  }
  throw ConfigError("[eir] kind must be identity, analytic or tabulated");
}

} // namespace

RunConfig run_config_from_string(const std::string& text) {
  ConfigFile c = ConfigFile::parse_string(text);
  RunConfig rc;
  rc.geometry = parse_geometry(c);
  rc.grid = parse_grid(c);

  rc.constants.speed_of_sound_mm_per_us =
      c.get_double("physics", "speed_of_sound_mm_per_us", 1.47);
  rc.constants.grueneisen = c.get_double("physics", "grueneisen", 2000.0);
  rc.constants.voxel_radius_mm = rc.grid.voxel_radius_mm();
  rc.constants.validate();

  rc.lattice = FrequencyLattice::from_time(
      c.get_int("sampling", "num_time_samples", 1536),
      c.get_double("sampling", "delta_t_us", 0.05));

  rc.eir = parse_eir(c, rc.lattice);
  rc.phantom = parse_phantom(c);

  rc.noise.sigma = c.get_double("noise", "sigma", 0.0);
  rc.noise.seed = static_cast<std::uint64_t>(c.get_int("noise", "seed", 0));
  if (c.has("noise", "snr_db")) {
    if (rc.noise.sigma != 0.0)
      throw ConfigError("[noise] set either sigma or snr_db, not both");
    rc.noise_snr_db = c.require_double("noise", "snr_db");
  }

  rc.fbp_cutoff_mhz = c.get_double("fbp", "cutoff_mhz", 0.0);
  const std::string interp = c.get_string("fbp", "interp", "linear");
  if (interp == "linear") rc.fbp_interp = FbpConfig::Interp::Linear;
  else if (interp == "cubic") rc.fbp_interp = FbpConfig::Interp::Cubic;
  else throw ConfigError("[fbp] interp must be linear or cubic");
  rc.fbp_calibration = c.get_double("fbp", "calibration", 1.0);

  rc.plsq.alpha = c.get_double("plsq", "alpha", 0.0);
  rc.plsq.max_iters = c.get_int("plsq", "max_iters", 50);
  rc.plsq.rel_tol = c.get_double("plsq", "rel_tol", 1e-4);

  rc.plstv.lambda_tv = c.get_double("plstv", "lambda_tv", 0.0);
  rc.plstv.max_iters = c.get_int("plstv", "max_iters", 50);
  rc.plstv.inner_prox_iters = c.get_int("plstv", "inner_iters", 20);
  rc.plstv.nonneg = c.get_bool("plstv", "nonneg", true);
  if (const auto v = c.get("plstv", "lipschitz"); v && *v != "auto")
    rc.plstv.lipschitz = c.require_double("plstv", "lipschitz");
  rc.plstv.power_iters = c.get_int("plstv", "power_iters", 30);

  rc.structure.center_x_mm = c.get_double("structure", "center_x_mm", 0.0);
  rc.structure.center_y_mm = c.get_double("structure", "center_y_mm", 0.0);
  rc.structure.z_min_mm = c.get_double("structure", "z_min_mm", 0.0);
  rc.structure.z_max_mm = c.get_double("structure", "z_max_mm", 0.0);
  rc.structure.patch_half_px = c.get_int("structure", "patch_half_px", 10);
  rc.structure.recenter_radius_px =
      c.get_int("structure", "recenter_radius_px", 3);
  rc.structure.broi_per_slice = c.get_int("structure", "broi_per_slice", 50);
  rc.structure.broi_radius_mm =
      c.get_double("structure", "broi_radius_mm", 5.0);
  rc.structure.broi_exclude_mm =
      c.get_double("structure", "broi_exclude_mm", 0.5);
  rc.structure.broi_seed =
      static_cast<std::uint64_t>(c.get_int("structure", "broi_seed", 99));

  rc.sweep_algo = c.get_string("sweep", "algo", "fbp");
  if (const auto v = c.get("sweep", "reg_values"))
    rc.sweep_values = parse_double_list(*v);

  rc.raw = std::move(c);
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return run_config_from_string(buf.str());
}

std::string geometry_hash(const ScanGeometry& geom,
                          const FrequencyLattice& lattice) {
  std::ostringstream os;
  os.precision(17);
  os << geom.probe_radius_mm << '|' << geom.arc_span_deg << '|'
     << geom.num_transducers << '|' << geom.transducer_width_a_mm << '|'
     << geom.transducer_height_b_mm << '|' << geom.active_first << '|'
     << geom.active_count << '|' << lattice.num_time_samples << '|'
     << lattice.delta_t_us << '|';
  for (double v : geom.view_angles_rad) os << v << ',';

  // FNV-1a 64
  const std::string s = os.str();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_volume(const std::filesystem::path& path,
                 const CoefficientVector& vol, const std::string& geom_hash) {
  auto c = ArrayContainer::make(
      Dtype::f64,
      {static_cast<std::size_t>(vol.grid.nz),
       static_cast<std::size_t>(vol.grid.ny),
       static_cast<std::size_t>(vol.grid.nx)},
      {"z", "y", "x"});
  std::copy(vol.values.begin(), vol.values.end(), c.as_f64().begin());
  c.meta.spacing_mm = vol.grid.spacing_mm;
  c.meta.center_mm = {vol.grid.center_mm.x, vol.grid.center_mm.y,
                      vol.grid.center_mm.z};
  if (!geom_hash.empty()) c.meta.geometry_hash = geom_hash;
  write_container(path, c);
}

CoefficientVector load_volume(const std::filesystem::path& path) {
  const ArrayContainer c = read_container(path);
  if (c.shape.size() != 3) throw ShapeError("volume container must be 3-D");
  ImageGrid g;
  g.nz = static_cast<int>(c.shape[0]);
  g.ny = static_cast<int>(c.shape[1]);
  g.nx = static_cast<int>(c.shape[2]);
  g.spacing_mm = c.meta.spacing_mm.value_or(1.0);
  if (c.meta.center_mm)
    g.center_mm = {(*c.meta.center_mm)[0], (*c.meta.center_mm)[1],
                   (*c.meta.center_mm)[2]};
  CoefficientVector vol = CoefficientVector::zeros(g);
  const auto src = c.as_f64();
  std::copy(src.begin(), src.end(), vol.values.begin());
  return vol;
}

namespace {

void check_geometry_hash(const ArrayContainer& c, const ScanGeometry& geom,
                         const FrequencyLattice& lat,
                         const std::string& what) {
  const std::string expect = geometry_hash(geom, lat);
  if (!c.meta.geometry_hash || *c.meta.geometry_hash != expect)
    throw ShapeError(what + ": geometry hash mismatch (data file was not "
                            "produced by this scan configuration)");
}

// probe fields from the config, view list from the file
ScanGeometry geometry_with_file_views(const ArrayContainer& c,
                                      const ScanGeometry& base,
                                      const std::string& what) {
  if (!c.meta.view_angles_rad)
    throw ShapeError(what + ": data file lacks its view list");
  ScanGeometry g = base;
  g.view_angles_rad = *c.meta.view_angles_rad;
  g.validate();
  return g;
}

} // namespace

void save_time_data(const std::filesystem::path& path, const TimeData& data,
                    const ScanGeometry& geom) {
  auto c = ArrayContainer::make(
      Dtype::f64,
      {static_cast<std::size_t>(data.num_poses),
       static_cast<std::size_t>(data.lattice.num_time_samples)},
      {"pose", "time"});
  std::copy(data.values.begin(), data.values.end(), c.as_f64().begin());
  c.meta.delta_t_us = data.lattice.delta_t_us;
  c.meta.geometry_hash = geometry_hash(geom, data.lattice);
  c.meta.view_angles_rad = geom.view_angles_rad;
  write_container(path, c);
}

TimeScan load_time_scan(const std::filesystem::path& path,
                        const ScanGeometry& base_geom) {
  const ArrayContainer c = read_container(path);
  if (c.shape.size() != 2 || c.axes != std::vector<std::string>{"pose", "time"})
    throw ShapeError("expected a [pose, time] container");
  if (!c.meta.delta_t_us)
    throw ShapeError("time container lacks delta_t_us metadata");
  TimeScan out;
  out.geometry = geometry_with_file_views(c, base_geom, path.string());
  out.data.num_poses = static_cast<int>(c.shape[0]);
  out.data.lattice = FrequencyLattice::from_time(static_cast<int>(c.shape[1]),
                                                 *c.meta.delta_t_us);
  check_geometry_hash(c, out.geometry, out.data.lattice, path.string());
  if (out.data.num_poses != out.geometry.num_poses())
    throw ShapeError(path.string() + ": pose count does not match the views");
  const auto src = c.as_f64();
  out.data.values.assign(src.begin(), src.end());
  return out;
}

void save_freq_data(const std::filesystem::path& path,
                    const FrequencyData& data, const ScanGeometry& geom) {
  auto c = ArrayContainer::make(
      Dtype::c128,
      {static_cast<std::size_t>(data.num_poses),
       static_cast<std::size_t>(data.lattice.num_freqs)},
      {"pose", "freq"});
  std::copy(data.values.begin(), data.values.end(), c.as_c128().begin());
  c.meta.delta_f_mhz = data.lattice.delta_f_mhz;
  c.meta.delta_t_us = data.lattice.delta_t_us;
  c.meta.geometry_hash = geometry_hash(geom, data.lattice);
  c.meta.view_angles_rad = geom.view_angles_rad;
  write_container(path, c);
}

FreqScan load_freq_scan(const std::filesystem::path& path,
                        const ScanGeometry& base_geom) {
  const ArrayContainer c = read_container(path);
  if (c.shape.size() != 2 || c.axes != std::vector<std::string>{"pose", "freq"})
    throw ShapeError("expected a [pose, freq] container");
  if (!c.meta.delta_t_us)
    throw ShapeError("frequency container lacks delta_t_us metadata");
  FreqScan out;
  out.geometry = geometry_with_file_views(c, base_geom, path.string());
  out.data.num_poses = static_cast<int>(c.shape[0]);
  const int K = 2 * (static_cast<int>(c.shape[1]) - 1);
  out.data.lattice = FrequencyLattice::from_time(K, *c.meta.delta_t_us);
  check_geometry_hash(c, out.geometry, out.data.lattice, path.string());
  if (out.data.num_poses != out.geometry.num_poses())
    throw ShapeError(path.string() + ": pose count does not match the views");
  const auto src = c.as_c128();
  out.data.values.assign(src.begin(), src.end());
  return out;
}

Eir load_tabulated_eir(const std::filesystem::path& path,
                       const FrequencyLattice& lattice) {
  const ArrayContainer c = read_container(path);
  if (c.shape.size() != 1) throw ShapeError("EIR container must be 1-D");
  if (static_cast<int>(c.shape[0]) != lattice.num_freqs)
    throw ShapeError("EIR table length does not match the lattice");
  if (c.meta.delta_f_mhz &&
      std::abs(*c.meta.delta_f_mhz - lattice.delta_f_mhz) >
          1e-12 * lattice.delta_f_mhz)
    throw ShapeError("EIR table frequency step does not match the lattice");
  const auto src = c.as_c128();
  return Eir::tabulated({src.begin(), src.end()});
}

void save_tabulated_eir(const std::filesystem::path& path,
                        const std::vector<Complex>& spectrum,
                        const FrequencyLattice& lattice) {
  auto c = ArrayContainer::make(Dtype::c128, {spectrum.size()}, {"freq"});
  std::copy(spectrum.begin(), spectrum.end(), c.as_c128().begin());
  c.meta.delta_f_mhz = lattice.delta_f_mhz;
  write_container(path, c);
}

FreqScan subsample_views(const FrequencyData& dense, const ScanGeometry& geom,
                         int num_views_keep) {
  const int nv = geom.num_views();
  if (num_views_keep < 1 || num_views_keep > nv)
    throw ConfigError("subsample: view count out of range");
  if (nv % num_views_keep != 0)
    throw ConfigError("subsample: kept view count must divide the dense count");
  if (dense.num_poses != geom.num_poses())
    throw ShapeError("subsample: data does not match the geometry");

  const int stride = nv / num_views_keep;
  const int per_view = geom.active_count;
  const int L = dense.lattice.num_freqs;

  FreqScan out;
  out.geometry = geom;
  out.geometry.view_angles_rad.clear();
  out.data.num_poses = num_views_keep * per_view;
  out.data.lattice = dense.lattice;
  out.data.values.reserve(static_cast<std::size_t>(out.data.num_poses) * L);
  for (int v = 0; v < nv; v += stride) {
    out.geometry.view_angles_rad.push_back(geom.view_angles_rad[v]);
    const std::size_t begin = static_cast<std::size_t>(v) * per_view * L;
    out.data.values.insert(out.data.values.end(),
                           dense.values.begin() + begin,
                           dense.values.begin() + begin +
                               static_cast<std::size_t>(per_view) * L);
  }
  return out;
}

} // namespace oat::io
