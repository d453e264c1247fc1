// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace oat::io {

/// Run provenance written beside every CLI output: the command line, the
/// resolved config echo, seeds and library version. Re-running the echoed
/// config reproduces the outputs.
struct Manifest {
  std::string command;
  std::vector<std::string> args;
  std::string config_echo;
  std::map<std::string, std::string> parameters;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  int threads = 0;
};

void write_manifest(const std::filesystem::path& path, const Manifest& m);

} // namespace oat::io
