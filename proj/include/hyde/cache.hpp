// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "hyde/generator.hpp"
#include "hyde/hash.hpp"

namespace hyde {

/// SHA-256 over the canonical JSON array
/// [model_id, template text, query text, temperature, n_samples, max_tokens].
inline std::string hypothesis_cache_key(const GenerationConfig& cfg, const InstructionTemplate& tpl,
                                        const QueryRecord& q) {
  const nlohmann::json parts = nlohmann::json::array(
      {cfg.model_id(), tpl.text(), q.text, cfg.temperature, cfg.n_samples, cfg.max_tokens});
  return sha256_hex(parts.dump());
}

/// Append-only JSONL store of generated sets, one
/// {"key", "query_id", "samples", "provenance"} object per line.
///
/// The file is read once on open. Lookups consult the in-memory snapshot
/// plus everything stored through this instance; writes are serialized.
/// Unparseable lines are skipped with a warning. When a key appears more
/// than once the first occurrence wins.
class HypothesisCache {
 public:
  explicit HypothesisCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        HypotheticalSet set;
        j.at("query_id").get_to(set.query_id);
        j.at("samples").get_to(set.samples);
        j.at("provenance").get_to(set.provenance);
        entries_.try_emplace(j.at("key").get<std::string>(), std::move(set));
      } catch (const std::exception& e) {
        spdlog::warn("{}:{}: skipping corrupt cache line ({})", path_.string(), lineno, e.what());
        ++skipped_;
      }
    }
    // A crash mid-append leaves a partial last line; start the next record on a fresh line.
    std::ifstream tail(path_, std::ios::binary | std::ios::ate);
    if (tail && tail.tellg() > 0) {
      tail.seekg(-1, std::ios::end);
      needs_newline_ = tail.get() != '\n';
    }
  }

  std::optional<HypotheticalSet> lookup(const std::string& key) const {
    std::shared_lock lock(mu_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
  }

  void store(const std::string& key, const HypotheticalSet& set) {
    std::unique_lock lock(mu_);
    if (entries_.contains(key)) return;
    const nlohmann::json j = {
        {"key", key}, {"query_id", set.query_id}, {"samples", set.samples}, {"provenance", set.provenance}};
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot append to cache " + path_.string());
    if (needs_newline_) out << '\n';
    needs_newline_ = false;
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw Error("write failed on cache " + path_.string());
    entries_.emplace(key, set);
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }
  std::size_t skipped_lines() const noexcept { return skipped_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, HypotheticalSet> entries_;
  std::size_t skipped_ = 0;
  bool needs_newline_ = false;
};

inline std::optional<HypotheticalSet> cache_lookup(const HypothesisCache& cache, const std::string& key) {
  return cache.lookup(key);
}

inline void cache_store(HypothesisCache& cache, const std::string& key, const HypotheticalSet& set) {
  cache.store(key, set);
}

}  // namespace hyde
