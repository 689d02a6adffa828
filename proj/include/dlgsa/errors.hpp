// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dlgsa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not agree with what an operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value violates its documented constraints.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The caller used an API in a way it does not support.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed bytes in a file or buffer. Carries the offending byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf appeared where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dlgsa
