// SPDX-License-Identifier: Apache-2.0
#include "oat/io/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "oat/errors.hpp"
#include "oat/version.hpp"

namespace oat::io {

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  nlohmann::json j;
  j["version"] = oat::kVersion;
  j["command"] = m.command;
  j["args"] = m.args;
  j["config"] = m.config_echo;
  j["parameters"] = m.parameters;
  j["outputs"] = m.outputs;
  j["seed"] = m.seed;
  j["threads"] = m.threads;

  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write manifest: " + path.string());
  os << j.dump(2) << '\n';
}

} // namespace oat::io
