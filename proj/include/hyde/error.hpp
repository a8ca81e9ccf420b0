// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace hyde {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t actual, const std::string& context = {})
      : Error((context.empty() ? std::string{} : context + ": ") + "dimension mismatch (expected " +
              std::to_string(expected) + ", got " + std::to_string(actual) + ")"),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

/// Malformed input file. Carries either a 1-based line number (text formats)
/// or a byte offset (binary formats).
class FormatError : public Error {
 public:
  enum class Where { line, byte_offset };

  FormatError(const std::string& path, Where where, std::uint64_t position, const std::string& what)
      : Error(path + (where == Where::line ? ":" + std::to_string(position)
                                           : " @ byte " + std::to_string(position)) +
              ": " + what),
        where_(where),
        position_(position) {}

  Where where() const noexcept { return where_; }
  std::uint64_t position() const noexcept { return position_; }

 private:
  Where where_;
  std::uint64_t position_;
};

/// Remote call that kept failing until the retry budget ran out, or failed
/// with a non-retryable status.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what + " (after " + std::to_string(attempts) + " attempt" + (attempts == 1 ? "" : "s") +
              ")"),
        attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// Wraps an error raised inside one pipeline stage ("generate", "encode", ...).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace hyde
