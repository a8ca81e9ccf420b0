// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <spdlog/spdlog.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hyde/binary_io.hpp"
#include "hyde/core.hpp"
#include "hyde/index.hpp"

namespace hyde {

/// Append-only embedding store. Same per-record layout as the index but a
/// count-free header, so records can be streamed in and a crashed run can
/// be resumed:
///   "HYDE" | u32 version = 1 | u32 dim | records...
///   record = u32 id_len | id bytes | dim x f32   (little-endian)
namespace store {

inline constexpr char kMagic[4] = {'H', 'Y', 'D', 'E'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint64_t kHeaderBytes = 12;

struct ScanResult {
  std::uint32_t dim = 0;
  std::uint64_t valid_bytes = 0;  // header plus every complete record
  std::uint64_t records = 0;
  bool truncated_tail = false;
};

/// Reads the header, then hands every complete record to `on_record`. A
/// partial trailing record is reported via `truncated_tail`, not thrown.
inline ScanResult scan(const std::filesystem::path& path,
                       const std::function<void(std::string&&, std::vector<float>&&)>& on_record) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open embedding store " + path.string());
  binary::Reader rd(is, path.string());
  char magic[4];
  rd.read(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) {
    throw FormatError(path.string(), FormatError::Where::byte_offset, 0, "bad magic (expected HYDE)");
  }
  const std::uint32_t version = rd.u32("version");
  if (version != kVersion) {
    throw FormatError(path.string(), FormatError::Where::byte_offset, 4, "unsupported version " + std::to_string(version));
  }
  ScanResult res;
  res.dim = rd.u32("dim");
  if (res.dim == 0) throw FormatError(path.string(), FormatError::Where::byte_offset, 8, "dim must be positive");
  res.valid_bytes = rd.offset();

  std::vector<unsigned char> buf(static_cast<std::size_t>(res.dim) * 4);
  while (!rd.at_end()) {
    unsigned char lenb[4];
    if (!rd.try_read(reinterpret_cast<char*>(lenb), 4)) {
      res.truncated_tail = true;
      break;
    }
    const std::uint32_t id_len = binary::Reader::decode_u32(lenb);
    if (id_len == 0 || id_len > FlatIndex::kMaxIdBytes) {
      throw FormatError(path.string(), FormatError::Where::byte_offset, res.valid_bytes, "implausible id length");
    }
    std::string id(id_len, '\0');
    if (!rd.try_read(id.data(), id_len) || !rd.try_read(reinterpret_cast<char*>(buf.data()), buf.size())) {
      res.truncated_tail = true;
      break;
    }
    std::vector<float> v(res.dim);
    for (std::uint32_t i = 0; i < res.dim; ++i) v[i] = binary::Reader::decode_f32(buf.data() + 4 * i);
    on_record(std::move(id), std::move(v));
    res.valid_bytes = rd.offset();
    ++res.records;
  }
  return res;
}

/// All records of a store, in file order. Duplicate ids are reported.
inline std::vector<std::pair<std::string, EmbeddingVector>> read_all(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, EmbeddingVector>> out;
  std::unordered_set<std::string> seen;
  const auto res = scan(path, [&](std::string&& id, std::vector<float>&& v) {
    if (!seen.insert(id).second) throw Error(path.string() + ": duplicate doc_id '" + id + "' in embedding store");
    out.emplace_back(std::move(id), EmbeddingVector(std::move(v)));
  });
  if (res.truncated_tail) spdlog::warn("{}: ignoring truncated trailing record", path.string());
  return out;
}

inline FlatIndex load_as_index(const std::filesystem::path& path) {
  const auto records = read_all(path);
  if (records.empty()) return FlatIndex(scan(path, [](std::string&&, std::vector<float>&&) {}).dim);
  return build_index(records);
}

}  // namespace store

/// Appends records to a store, creating it if needed. Opening an existing
/// store validates its header, drops a truncated trailing record, and
/// remembers which ids are already present.
class EmbeddingStoreWriter {
 public:
  EmbeddingStoreWriter(std::filesystem::path path, std::size_t dim) : path_(std::move(path)), dim_(dim) {
    if (dim_ == 0) throw Error("embedding store: dim must be positive");
    if (std::filesystem::exists(path_) && std::filesystem::file_size(path_) > 0) {
      const auto res = store::scan(path_, [&](std::string&& id, std::vector<float>&&) { present_.insert(std::move(id)); });
      if (res.dim != dim_) throw DimensionMismatch(dim_, res.dim, "embedding store " + path_.string());
      if (res.truncated_tail) {
        spdlog::warn("{}: discarding truncated trailing record at byte {}", path_.string(), res.valid_bytes);
        std::filesystem::resize_file(path_, res.valid_bytes);
      }
      out_.open(path_, std::ios::binary | std::ios::app);
    } else {
      if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
      out_.open(path_, std::ios::binary | std::ios::trunc);
      binary::put_bytes(out_, {store::kMagic, 4});
      binary::put_u32(out_, store::kVersion);
      binary::put_u32(out_, static_cast<std::uint32_t>(dim_));
    }
    if (!out_) throw Error("cannot open embedding store " + path_.string() + " for writing");
  }

  bool contains(const std::string& id) const { return present_.contains(id); }
  std::size_t size() const noexcept { return present_.size(); }

  void append(const std::string& id, const EmbeddingVector& v) {
    if (v.dim() != dim_) throw DimensionMismatch(dim_, v.dim(), "embedding store record '" + id + "'");
    if (!present_.insert(id).second) throw Error("duplicate doc_id '" + id + "' in embedding store");
    binary::put_u32(out_, static_cast<std::uint32_t>(id.size()));
    binary::put_bytes(out_, id);
    for (float x : v.values()) binary::put_f32(out_, x);
  }

  void flush() {
    out_.flush();
    if (!out_) throw Error("write failed on embedding store " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::size_t dim_;
  std::ofstream out_;
  std::unordered_set<std::string> present_;
};

}  // namespace hyde
