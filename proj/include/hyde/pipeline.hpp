// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyde/cache.hpp"
#include "hyde/core.hpp"
#include "hyde/encoder.hpp"
#include "hyde/generator.hpp"
#include "hyde/index.hpp"

namespace hyde {

struct QueryVectorEstimate {
  std::string query_id;
  EmbeddingVector vector;
  std::size_t n_used;
  bool include_query;
};

/// Averages hypothetical-document vectors into a query vector.
///
///   include_query = false:  (1/N) * sum_k f(d_k)
///   include_query = true:   (1/(N+1)) * (sum_k f(d_k) + f(q))
///
/// The query-inclusive form is literally the mean of [hypotheses..., query],
/// so with N = 0 it returns f(q) bit for bit.
inline QueryVectorEstimate estimate_query_vector(std::span<const EmbeddingVector> hypotheses,
                                                 const std::optional<EmbeddingVector>& query_vector,
                                                 bool include_query, std::string query_id = {}) {
  if (include_query) {
    if (!query_vector) throw Error("estimate_query_vector: include_query requires the query vector");
    std::vector<EmbeddingVector> all(hypotheses.begin(), hypotheses.end());
    all.push_back(*query_vector);
    return {std::move(query_id), mean_vectors(all), hypotheses.size(), true};
  }
  if (hypotheses.empty()) {
    throw Error("estimate_query_vector: no hypothetical documents and query excluded; nothing to estimate from");
  }
  return {std::move(query_id), mean_vectors(hypotheses), hypotheses.size(), false};
}

/// Embeds the raw query and searches: the encoder-only baseline.
inline std::vector<ScoredDoc> baseline_search(const QueryRecord& q, const Encoder& encoder, const FlatIndex& index,
                                              std::size_t k) {
  if (q.text.empty()) throw Error("baseline_search: empty query text");
  std::vector<EmbeddingVector> v;
  try {
    const std::string text = q.text;
    v = encoder.embed(std::span<const std::string>(&text, 1));
  } catch (const std::exception& e) {
    throw StageError("encode", e.what());
  }
  try {
    return index.search(v.front(), k);
  } catch (const std::exception& e) {
    throw StageError("search", e.what());
  }
}

/// Query-time side of the method: sample N hypothetical documents (through
/// the cache when one is attached), embed them individually, average with
/// or without the query, then run exact MIPS against the corpus.
class HydeSearcher {
 public:
  HydeSearcher(const Generator& generator, const GenerationConfig& gen_cfg, const InstructionTemplate& tpl,
               const Encoder& encoder, HypothesisCache* cache = nullptr)
      : generator_(generator), gen_cfg_(gen_cfg), tpl_(tpl), encoder_(encoder), cache_(cache) {}

  HypotheticalSet hypotheticals(const QueryRecord& q) const {
    if (gen_cfg_.n_samples == 0) {
      HypotheticalSet empty;
      empty.query_id = q.query_id;
      empty.provenance.model_name = gen_cfg_.model_id();
      empty.provenance.temperature = gen_cfg_.temperature;
      empty.provenance.template_name = tpl_.name();
      return empty;
    }
    try {
      std::string key;
      if (cache_ != nullptr) {
        key = hypothesis_cache_key(gen_cfg_, tpl_, q);
        if (auto hit = cache_->lookup(key); hit && hit->samples.size() == gen_cfg_.n_samples) return *hit;
      }
      auto set = generator_.generate(tpl_, q, gen_cfg_.n_samples);
      if (set.samples.size() != gen_cfg_.n_samples) {
        throw Error("generator returned " + std::to_string(set.samples.size()) + " samples, expected " +
                    std::to_string(gen_cfg_.n_samples));
      }
      if (cache_ != nullptr) cache_->store(key, set);
      return set;
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("generate", "query " + q.query_id + ": " + e.what());
    }
  }

  QueryVectorEstimate estimate(const QueryRecord& q, bool include_query) const {
    const auto set = hypotheticals(q);
    std::vector<std::string> texts = set.samples;
    if (include_query) texts.push_back(q.text);
    std::vector<EmbeddingVector> vecs;
    try {
      if (!texts.empty()) vecs = encoder_.embed(texts);
    } catch (const std::exception& e) {
      throw StageError("encode", "query " + q.query_id + ": " + e.what());
    }
    std::optional<EmbeddingVector> qv;
    if (include_query) {
      qv = std::move(vecs.back());
      vecs.pop_back();
    }
    try {
      return estimate_query_vector(vecs, qv, include_query, q.query_id);
    } catch (const std::exception& e) {
      throw StageError("estimate", "query " + q.query_id + ": " + e.what());
    }
  }

  std::vector<ScoredDoc> search(const QueryRecord& q, const FlatIndex& index, std::size_t k, bool include_query) const {
    if (!index.empty() && index.dim() != encoder_.dim()) {
      throw StageError("search", "index dim " + std::to_string(index.dim()) + " does not match encoder dim " +
                                     std::to_string(encoder_.dim()));
    }
    const auto est = estimate(q, include_query);
    try {
      return index.search(est.vector, k);
    } catch (const std::exception& e) {
      throw StageError("search", "query " + q.query_id + ": " + e.what());
    }
  }

 private:
  const Generator& generator_;
  GenerationConfig gen_cfg_;
  const InstructionTemplate& tpl_;
  const Encoder& encoder_;
  HypothesisCache* cache_;
};

inline std::vector<ScoredDoc> hyde_search(const QueryRecord& q, const InstructionTemplate& tpl,
                                          const GenerationConfig& gen_cfg, const EncoderConfig& enc_cfg,
                                          const FlatIndex& index, std::size_t k, bool include_query,
                                          HypothesisCache* cache = nullptr) {
  const auto generator = make_generator(gen_cfg);
  const auto encoder = make_encoder(enc_cfg);
  return HydeSearcher(*generator, gen_cfg, tpl, *encoder, cache).search(q, index, k, include_query);
}

inline std::vector<ScoredDoc> baseline_search(const QueryRecord& q, const EncoderConfig& enc_cfg,
                                              const FlatIndex& index, std::size_t k) {
  return baseline_search(q, *make_encoder(enc_cfg), index, k);
}

}  // namespace hyde
