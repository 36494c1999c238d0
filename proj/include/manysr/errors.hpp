// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace manysr {

/// Bad or inconsistent run configuration (unknown keys, invalid values,
/// mismatched architectures on resume).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unusable input data (missing directory, unreadable image, empty dataset).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training produced non-finite losses or activations.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A required optional backend (pretrained feature/LPIPS weights) is
/// unavailable. Never silently substituted.
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace manysr
