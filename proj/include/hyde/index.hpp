// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hyde/binary_io.hpp"
#include "hyde/core.hpp"
#include "hyde/parallel.hpp"

namespace hyde {

/// Exact maximum-inner-product index over a flat row-major f32 matrix.
///
/// Entries keep ingestion order. Scores are f64-accumulated inner products
/// and ties are broken by doc_id ascending, so results are fully
/// deterministic.
///
/// On-disk layout (all little-endian):
///   "HYDX" | u32 version = 1 | u32 dim | u64 count |
///   count x ( u32 id_len | id bytes | dim x f32 )
class FlatIndex {
 public:
  static constexpr char kMagic[4] = {'H', 'Y', 'D', 'X'};
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::uint32_t kMaxIdBytes = 1u << 16;

  /// dim == 0 is only meaningful for an index that stays empty.
  explicit FlatIndex(std::size_t dim = 0) : dim_(dim) {}

  void add(std::string doc_id, const EmbeddingVector& v) {
    if (dim_ == 0 && ids_.empty()) dim_ = v.dim();
    if (v.dim() != dim_) throw DimensionMismatch(dim_, v.dim(), "index entry '" + doc_id + "'");
    if (!lookup_.emplace(doc_id, ids_.size()).second) throw Error("duplicate doc_id '" + doc_id + "'");
    ids_.push_back(std::move(doc_id));
    data_.insert(data_.end(), v.values().begin(), v.values().end());
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  const std::string& id(std::size_t row) const { return ids_.at(row); }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }
  bool contains(const std::string& doc_id) const { return lookup_.contains(doc_id); }

  std::optional<EmbeddingVector> vector(const std::string& doc_id) const {
    auto it = lookup_.find(doc_id);
    if (it == lookup_.end()) return std::nullopt;
    auto r = row(it->second);
    return EmbeddingVector(std::vector<float>(r.begin(), r.end()));
  }

  /// Top min(k, size) entries by inner product with q.
  std::vector<ScoredDoc> search(const EmbeddingVector& q, std::size_t k) const {
    if (k == 0) throw Error("search: k must be positive");
    if (ids_.empty()) return {};
    if (q.dim() != dim_) throw DimensionMismatch(dim_, q.dim(), "search");

    const std::size_t n = ids_.size();
    std::vector<double> scores(n);
    const auto qv = q.values();
    constexpr std::size_t kBlock = 256;
    for (std::size_t lo = 0; lo < n; lo += kBlock) {
      const std::size_t hi = std::min(lo + kBlock, n);
      for (std::size_t r = lo; r < hi; ++r) scores[r] = dot(qv, row(r));
    }

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    const auto before = [&](std::uint32_t a, std::uint32_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return ids_[a] < ids_[b];
    };
    const std::size_t take = std::min(k, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), before);

    std::vector<ScoredDoc> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back({ids_[order[i]], scores[order[i]]});
    return out;
  }

  /// Searches many queries, partitioned over `threads` workers.
  std::vector<std::vector<ScoredDoc>> search_batch(std::span<const EmbeddingVector> queries, std::size_t k,
                                                   std::size_t threads = std::thread::hardware_concurrency()) const {
    std::vector<std::vector<ScoredDoc>> out(queries.size());
    bounded_parallel_for(queries.size(), std::max<std::size_t>(threads, 1),
                         [&](std::size_t i) { out[i] = search(queries[i], k); });
    return out;
  }

  void save(std::ostream& os) const {
    binary::put_bytes(os, {kMagic, 4});
    binary::put_u32(os, kVersion);
    binary::put_u32(os, static_cast<std::uint32_t>(dim_));
    binary::put_u64(os, ids_.size());
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      binary::put_u32(os, static_cast<std::uint32_t>(ids_[r].size()));
      binary::put_bytes(os, ids_[r]);
      for (float x : row(r)) binary::put_f32(os, x);
    }
  }

  /// Writes to a sibling temp file and renames it into place.
  void save(const std::filesystem::path& path) const {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw Error("cannot write index " + tmp.string());
      save(os);
      os.flush();
      if (!os) throw Error("write failed on index " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

  static FlatIndex load(std::istream& is, const std::string& name = "<stream>") {
    using binary::Reader;
    Reader rd(is, name);
    char magic[4];
    rd.read(magic, 4, "magic");
    if (!std::equal(magic, magic + 4, kMagic)) {
      throw FormatError(name, FormatError::Where::byte_offset, 0, "bad magic (expected HYDX)");
    }
    const std::uint64_t version_at = rd.offset();
    const std::uint32_t version = rd.u32("version");
    if (version != kVersion) {
      throw FormatError(name, FormatError::Where::byte_offset, version_at,
                        "unsupported version " + std::to_string(version));
    }
    const std::uint64_t dim_at = rd.offset();
    const std::uint32_t dim = rd.u32("dim");
    const std::uint64_t count = rd.u64("count");
    if (dim == 0 && count != 0) {
      throw FormatError(name, FormatError::Where::byte_offset, dim_at, "dim 0 with non-empty index");
    }
    FlatIndex idx(dim);
    std::vector<unsigned char> buf(static_cast<std::size_t>(dim) * 4);
    for (std::uint64_t e = 0; e < count; ++e) {
      const std::uint64_t entry_at = rd.offset();
      const std::uint32_t id_len = rd.u32("id length");
      if (id_len == 0 || id_len > kMaxIdBytes) {
        throw FormatError(name, FormatError::Where::byte_offset, entry_at, "implausible id length");
      }
      std::string id(id_len, '\0');
      rd.read(id.data(), id_len, "doc id");
      rd.read(reinterpret_cast<char*>(buf.data()), buf.size(), "vector");
      std::vector<float> v(dim);
      for (std::uint32_t i = 0; i < dim; ++i) v[i] = Reader::decode_f32(buf.data() + 4 * i);
      try {
        idx.add(std::move(id), EmbeddingVector(std::move(v)));
      } catch (const Error& err) {
        throw FormatError(name, FormatError::Where::byte_offset, entry_at, err.what());
      }
    }
    if (!rd.at_end()) {
      throw FormatError(name, FormatError::Where::byte_offset, rd.offset(), "trailing bytes after last entry");
    }
    return idx;
  }

  static FlatIndex load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open index " + path.string());
    return load(is, path.string());
  }

  friend bool operator==(const FlatIndex& a, const FlatIndex& b) {
    return a.dim_ == b.dim_ && a.ids_ == b.ids_ &&
           std::equal(a.data_.begin(), a.data_.end(), b.data_.begin(), b.data_.end(),
                      [](float x, float y) { return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y); });
  }

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

/// Materializes (doc_id, vector) pairs into an index. `dim` 0 infers the
/// dimension from the first entry.
template <typename Range>
FlatIndex build_index(Range&& entries, std::size_t dim = 0) {
  FlatIndex idx(dim);
  for (auto&& [id, vec] : entries) idx.add(std::string(id), vec);
  return idx;
}

inline std::vector<ScoredDoc> search_topk(const FlatIndex& index, const EmbeddingVector& q, std::size_t k) {
  return index.search(q, k);
}

inline void save_index(const FlatIndex& index, const std::filesystem::path& path) { index.save(path); }
inline FlatIndex load_index(const std::filesystem::path& path) { return FlatIndex::load(path); }

}  // namespace hyde
