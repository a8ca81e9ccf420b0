// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hyde/error.hpp"

namespace hyde {

/// Fixed-dimension dense vector. Values are stored as f32; every reduction
/// over them (inner products, means, norms) accumulates in f64.
///
/// Immutable after construction. Construction rejects an empty value list
/// and any NaN/Inf component.
class EmbeddingVector {
 public:
  explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error("embedding vector must have dim > 0");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw Error("embedding vector component " + std::to_string(i) + " is not finite");
      }
    }
  }

  static EmbeddingVector zeros(std::size_t dim) { return EmbeddingVector(std::vector<float>(dim, 0.0f)); }

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  float operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<float> values_;
};

inline bool has_whitespace(std::string_view s) {
  for (unsigned char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return true;
  }
  return false;
}

struct DocumentRecord {
  std::string doc_id;
  std::optional<std::string> title;
  std::string text;

  DocumentRecord(std::string id, std::optional<std::string> title_, std::string text_)
      : doc_id(std::move(id)), title(std::move(title_)), text(std::move(text_)) {
    if (doc_id.empty()) throw Error("document id must be non-empty");
    if (has_whitespace(doc_id)) throw Error("document id '" + doc_id + "' contains whitespace");
    if (text.empty() && (!title || title->empty())) {
      throw Error("document '" + doc_id + "' has neither text nor title");
    }
  }

  /// Text handed to the encoder: "title text" when a non-empty title is
  /// present and `with_title` is set, otherwise the body alone.
  std::string embedding_text(bool with_title = true) const {
    if (with_title && title && !title->empty()) {
      return text.empty() ? *title : *title + " " + text;
    }
    return text.empty() && title ? *title : text;
  }
};

struct QueryRecord {
  std::string query_id;
  std::string text;

  QueryRecord(std::string id, std::string text_) : query_id(std::move(id)), text(std::move(text_)) {
    if (query_id.empty()) throw Error("query id must be non-empty");
    if (has_whitespace(query_id)) throw Error("query id '" + query_id + "' contains whitespace");
    if (text.empty()) throw Error("query '" + query_id + "' has empty text");
  }
};

struct ScoredDoc {
  std::string doc_id;
  double score;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Ranking order used everywhere: score descending, then doc_id ascending.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

inline double dot(std::span<const float> a, std::span<const float> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

inline double inner_product(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim(), "inner_product");
  return dot(a.values(), b.values());
}

/// Component-wise arithmetic mean.
inline EmbeddingVector mean_vectors(std::span<const EmbeddingVector> vs) {
  if (vs.empty()) throw Error("mean_vectors: empty input");
  const std::size_t dim = vs.front().dim();
  std::vector<double> acc(dim, 0.0);
  for (const auto& v : vs) {
    if (v.dim() != dim) throw DimensionMismatch(dim, v.dim(), "mean_vectors");
    for (std::size_t i = 0; i < dim; ++i) acc[i] += v[i];
  }
  std::vector<float> out(dim);
  const double n = static_cast<double>(vs.size());
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / n);
  return EmbeddingVector(std::move(out));
}

/// Unit L2 norm; the zero vector passes through unchanged.
inline EmbeddingVector l2_normalize(const EmbeddingVector& v) {
  const double norm = std::sqrt(dot(v.values(), v.values()));
  if (norm == 0.0) return v;
  std::vector<float> out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return EmbeddingVector(std::move(out));
}

inline EmbeddingVector scaled(const EmbeddingVector& v, double c) {
  std::vector<float> out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = static_cast<float>(v[i] * c);
  return EmbeddingVector(std::move(out));
}

}  // namespace hyde
