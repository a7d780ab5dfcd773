// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vggflow {

/// Bad shapes, bad arguments, malformed inputs. Maps to CLI exit status 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A non-finite value or a divergence was encountered. Maps to CLI exit status 2.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t where = -1)
      : std::runtime_error(what), where_(where) {}

  /// Node id, step index or round index, depending on the raising site; -1 if unknown.
  std::ptrdiff_t where() const noexcept { return where_; }

 private:
  std::ptrdiff_t where_;
};

}  // namespace vggflow
