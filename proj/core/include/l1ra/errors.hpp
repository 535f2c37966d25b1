// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace l1ra {

/// Operand shapes are incompatible for the requested operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration value (from code or a JSON file) is out of range.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An internal bookkeeping invariant was broken. Never expected in a correct build.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Training stopped because of a non-finite loss or gradient.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace l1ra
