// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace oat {

/// Bad or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Data/operator dimension mismatch (CLI exit code 3).
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite cost or diverged iteration (CLI exit code 4).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace oat
