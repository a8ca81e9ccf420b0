// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyde/core.hpp"
#include "hyde/hash.hpp"
#include "hyde/http.hpp"
#include "hyde/parallel.hpp"
#include "hyde/text.hpp"

namespace hyde {

enum class EncoderBackend { remote, bow_hash };

inline std::string to_string(EncoderBackend b) { return b == EncoderBackend::remote ? "remote" : "bow_hash"; }

inline EncoderBackend parse_encoder_backend(const std::string& s) {
  if (s == "remote") return EncoderBackend::remote;
  if (s == "bow_hash") return EncoderBackend::bow_hash;
  throw Error("unknown encoder backend '" + s + "' (expected remote|bow_hash)");
}

struct EncoderConfig {
  EncoderBackend backend = EncoderBackend::bow_hash;
  std::optional<std::string> endpoint_url;
  std::optional<std::string> model_name;
  std::size_t dim = 768;
  std::size_t max_input_chars = 2000;
  std::size_t batch_size = 64;
  bool normalize = false;
  std::size_t parallelism = 4;

  void validate() const {
    if (dim == 0) throw Error("encoder: dim must be positive");
    if (max_input_chars == 0) throw Error("encoder: max_input_chars must be positive");
    if (batch_size == 0) throw Error("encoder: batch_size must be positive");
    if (parallelism == 0) throw Error("encoder: parallelism must be positive");
    if (backend == EncoderBackend::remote && (!endpoint_url || endpoint_url->empty())) {
      throw Error("encoder: remote backend requires an endpoint url");
    }
  }

  /// Short whitespace-free label for run tags.
  std::string label() const {
    if (backend == EncoderBackend::bow_hash) return "bow_hash/d" + std::to_string(dim);
    return model_name.value_or("remote");
  }
};

/// Text-to-vector function shared by documents, queries and hypothetical
/// documents. Implementations are stateless between calls.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::size_t dim() const = 0;
  /// One vector per input, in input order.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const = 0;
};

/// Feature-hashing bag of words: each token adds 1 to bucket
/// fnv1a64(utf8 bytes) mod dim.
class BowHashEncoder final : public Encoder {
 public:
  explicit BowHashEncoder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw Error("bow_hash: dim must be positive");
  }

  std::size_t dim() const override { return dim_; }

  EmbeddingVector embed_one(std::string_view text) const {
    std::vector<float> v(dim_, 0.0f);
    for (const auto& tok : tokenize_bow(text)) v[fnv1a64(tok) % dim_] += 1.0f;
    return EmbeddingVector(std::move(v));
  }

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
  }

 private:
  std::size_t dim_;
};

namespace detail {

inline std::vector<float> parse_float_array(const nlohmann::json& arr) {
  if (!arr.is_array()) throw Error("embedding response: expected an array of numbers");
  std::vector<float> v;
  v.reserve(arr.size());
  for (const auto& x : arr) {
    if (!x.is_number()) throw Error("embedding response: non-numeric component");
    v.push_back(x.get<float>());
  }
  return v;
}

/// Accepts [[...], ...], {"embeddings": [[...], ...]} or the OpenAI shape
/// {"data": [{"embedding": [...], "index": i}, ...]}.
inline std::vector<std::vector<float>> parse_embedding_response(const nlohmann::json& body) {
  std::vector<std::vector<float>> out;
  if (body.is_array()) {
    for (const auto& row : body) out.push_back(parse_float_array(row));
  } else if (body.is_object() && body.contains("embeddings")) {
    for (const auto& row : body.at("embeddings")) out.push_back(parse_float_array(row));
  } else if (body.is_object() && body.contains("data") && body.at("data").is_array()) {
    std::vector<std::pair<std::size_t, std::vector<float>>> rows;
    std::size_t pos = 0;
    for (const auto& item : body.at("data")) {
      const std::size_t idx = item.contains("index") ? item.at("index").get<std::size_t>() : pos;
      rows.emplace_back(idx, parse_float_array(item.at("embedding")));
      ++pos;
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& r : rows) out.push_back(std::move(r.second));
  } else {
    throw Error("embedding response: unrecognized JSON shape");
  }
  return out;
}

}  // namespace detail

/// Client for a JSON embedding service: POST {"model", "input": [...]}.
/// Requests are split into batch_size chunks, up to `parallelism` in flight.
class RemoteEncoder final : public Encoder {
 public:
  explicit RemoteEncoder(const EncoderConfig& cfg, http::RetryPolicy retry = {})
      : cfg_(cfg),
        client_(http::Endpoint::parse(cfg.endpoint_url.value_or("")), http::env("HYDE_ENCODER_API_KEY"),
                std::move(retry)) {}

  std::size_t dim() const override { return cfg_.dim; }

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override {
    // Empty strings never reach the service; they map to the zero vector.
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (!texts[i].empty()) pending.push_back(i);
    }
    std::vector<std::optional<EmbeddingVector>> slots(texts.size());
    const std::size_t batches = (pending.size() + cfg_.batch_size - 1) / cfg_.batch_size;
    bounded_parallel_for(batches, cfg_.parallelism, [&](std::size_t b) {
      const std::size_t lo = b * cfg_.batch_size;
      const std::size_t hi = std::min(lo + cfg_.batch_size, pending.size());
      nlohmann::json input = nlohmann::json::array();
      for (std::size_t j = lo; j < hi; ++j) input.push_back(texts[pending[j]]);
      nlohmann::json body = {{"input", std::move(input)}};
      if (cfg_.model_name) body["model"] = *cfg_.model_name;
      auto rows = detail::parse_embedding_response(client_.post(body));
      if (rows.size() != hi - lo) {
        throw Error(client_.url() + ": expected " + std::to_string(hi - lo) + " embeddings, got " +
                    std::to_string(rows.size()));
      }
      for (std::size_t j = lo; j < hi; ++j) {
        auto& row = rows[j - lo];
        if (row.size() != cfg_.dim) throw DimensionMismatch(cfg_.dim, row.size(), client_.url());
        slots[pending[j]].emplace(std::move(row));
      }
    });
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (auto& s : slots) out.push_back(s ? std::move(*s) : EmbeddingVector::zeros(cfg_.dim));
    return out;
  }

 private:
  EncoderConfig cfg_;
  http::JsonClient client_;
};

/// Applies the config-level contract around a backend: client-side
/// truncation to max_input_chars and optional L2 normalization.
class ConfiguredEncoder final : public Encoder {
 public:
  ConfiguredEncoder(EncoderConfig cfg, std::unique_ptr<Encoder> backend)
      : cfg_(std::move(cfg)), backend_(std::move(backend)) {
    if (backend_->dim() != cfg_.dim) throw DimensionMismatch(cfg_.dim, backend_->dim(), "encoder backend");
  }

  std::size_t dim() const override { return cfg_.dim; }
  const EncoderConfig& config() const noexcept { return cfg_; }

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override {
    std::vector<std::string> prepared;
    prepared.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const auto cut = truncate_code_points(texts[i], cfg_.max_input_chars);
      if (cut.size() < texts[i].size()) {
        spdlog::info("encoder: truncated input {} from {} to {} chars", i, count_code_points(texts[i]),
                     cfg_.max_input_chars);
      }
      prepared.emplace_back(cut);
    }
    auto out = backend_->embed(prepared);
    if (out.size() != texts.size()) throw Error("encoder backend returned wrong number of vectors");
    for (auto& v : out) {
      if (v.dim() != cfg_.dim) throw DimensionMismatch(cfg_.dim, v.dim(), "encoder output");
      if (cfg_.normalize) v = l2_normalize(v);
    }
    return out;
  }

 private:
  EncoderConfig cfg_;
  std::unique_ptr<Encoder> backend_;
};

inline std::unique_ptr<ConfiguredEncoder> make_encoder(const EncoderConfig& cfg, http::RetryPolicy retry = {}) {
  cfg.validate();
  std::unique_ptr<Encoder> backend;
  if (cfg.backend == EncoderBackend::bow_hash) {
    backend = std::make_unique<BowHashEncoder>(cfg.dim);
  } else {
    backend = std::make_unique<RemoteEncoder>(cfg, std::move(retry));
  }
  return std::make_unique<ConfiguredEncoder>(cfg, std::move(backend));
}

inline std::vector<EmbeddingVector> embed_texts(const EncoderConfig& cfg, std::span<const std::string> texts) {
  if (texts.empty()) throw Error("embed_texts: no input texts");
  return make_encoder(cfg)->embed(texts);
}

}  // namespace hyde
