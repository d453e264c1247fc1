// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oat/metrics.hpp"
#include "oat/recon_fbp.hpp"
#include "oat/recon_iterative.hpp"
#include "oat/simulator.hpp"
#include "oat/system_operator.hpp"

namespace oat::io {

/// Flat key=value configuration with [section] headers and '#' comments.
/// Keys may repeat (phantom primitives); values keep their raw text.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::filesystem::path& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section,
                                 const std::string& key) const;
  std::vector<std::string> get_all(const std::string& section,
                                   const std::string& key) const;

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  double require_double(const std::string& section,
                        const std::string& key) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries(
      const std::string& section) const;

  /// Canonical text round-trip (used for the manifest config echo).
  std::string dump() const;

 private:
  // section -> ordered (key, value) pairs
  std::map<std::string, std::vector<std::pair<std::string, std::string>>>
      sections_;
};

std::vector<double> parse_double_list(const std::string& text);

/// Everything a pipeline run needs, resolved from a ConfigFile.
struct RunConfig {
  ScanGeometry geometry;
  ImageGrid grid;
  AcousticConstants constants;
  FrequencyLattice lattice;
  Eir eir;
  Phantom phantom;
  NoiseModel noise;
  std::optional<double> noise_snr_db; // sigma derived from data when set

  double fbp_cutoff_mhz = 0.0; // 0 = Nyquist
  FbpConfig::Interp fbp_interp = FbpConfig::Interp::Linear;
  double fbp_calibration = 1.0;

  PlsQConfig plsq;
  PlsTvConfig plstv;

  StructureSpec structure;
  std::string sweep_algo = "fbp";
  std::vector<double> sweep_values;

  ConfigFile raw;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_string(const std::string& text);

/// Hash binding data files to the scan geometry and sampling lattice that
/// produced them (FNV-1a over a canonical field dump, hex encoded).
std::string geometry_hash(const ScanGeometry& geom,
                          const FrequencyLattice& lattice);

// Container-backed storage of the domain objects.
void save_volume(const std::filesystem::path& path,
                 const CoefficientVector& vol, const std::string& geom_hash);
CoefficientVector load_volume(const std::filesystem::path& path);

void save_time_data(const std::filesystem::path& path, const TimeData& data,
                    const ScanGeometry& geom);
void save_freq_data(const std::filesystem::path& path,
                    const FrequencyData& data, const ScanGeometry& geom);

/// Loaders take the probe description from `base_geom` and the view list
/// from the file, then verify the stored geometry hash against that
/// combination; a subsampled file therefore loads with its reduced view set
/// while probe or lattice mismatches are still rejected.
struct FreqScan {
  FrequencyData data;
  ScanGeometry geometry;
};
FreqScan load_freq_scan(const std::filesystem::path& path,
                        const ScanGeometry& base_geom);

struct TimeScan {
  TimeData data;
  ScanGeometry geometry;
};
TimeScan load_time_scan(const std::filesystem::path& path,
                        const ScanGeometry& base_geom);

Eir load_tabulated_eir(const std::filesystem::path& path,
                       const FrequencyLattice& lattice);
void save_tabulated_eir(const std::filesystem::path& path,
                        const std::vector<Complex>& spectrum,
                        const FrequencyLattice& lattice);

/// Keeps every `stride`-th view of a dense frequency-domain scan; retained
/// samples are copied bitwise and the view list is updated.
FreqScan subsample_views(const FrequencyData& dense, const ScanGeometry& geom,
                         int num_views_keep);

} // namespace oat::io
