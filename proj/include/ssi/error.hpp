// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ssi {

// Usage-level failures (bad arguments, out-of-range configuration). The CLI
// maps these to exit code 2.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Configuration error tied to one key; `key()` is reported by the CLI.
class ConfigError : public ParameterError {
 public:
  ConfigError(std::string key, const std::string& what)
      : ParameterError(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Internal failures. The CLI maps these to exit code 1.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ssi
