// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Little-endian primitives shared by the index and embedding-store formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "hyde/error.hpp"

namespace hyde::binary {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }

inline void put_bytes(std::ostream& os, std::string_view s) { os.write(s.data(), static_cast<std::streamsize>(s.size())); }

/// Sequential reader that tracks its byte offset so format errors can say
/// exactly where a file went wrong.
class Reader {
 public:
  Reader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}

  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& path() const noexcept { return path_; }

  /// True when no byte remains.
  bool at_end() { return is_.peek() == std::char_traits<char>::eof(); }

  /// Reads exactly n bytes or returns false (stream left at EOF).
  bool try_read(char* dst, std::size_t n) {
    is_.read(dst, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(is_.gcount());
    offset_ += got;
    return got == n;
  }

  void read(char* dst, std::size_t n, const char* what) {
    const std::uint64_t at = offset_;
    if (!try_read(dst, n)) {
      throw FormatError(path_, FormatError::Where::byte_offset, at, std::string("truncated ") + what);
    }
  }

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    read(reinterpret_cast<char*>(b), 4, what);
    return decode_u32(b);
  }

  std::uint64_t u64(const char* what) {
    unsigned char b[8];
    read(reinterpret_cast<char*>(b), 8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  static std::uint32_t decode_u32(const unsigned char* b) noexcept {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  static float decode_f32(const unsigned char* b) noexcept { return std::bit_cast<float>(decode_u32(b)); }

 private:
  std::istream& is_;
  std::string path_;
  std::uint64_t offset_ = 0;
};

}  // namespace hyde::binary
