// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "hyde/encoder.hpp"
#include "hyde/error.hpp"
#include "hyde/generator.hpp"
#include "hyde/ingest.hpp"
#include "hyde/text.hpp"

namespace hyde {

/// Flat "section.key" -> raw value map read from a TOML-like file:
///
///   # comment
///   [encoder]
///   backend = "bow_hash"
///   dim = 4096
///
/// Values are bare words/numbers/booleans or double-quoted strings with
/// \" and \\ escapes. Keys before any section header have no prefix.
using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config(std::istream& in, const std::string& name = "<config>") {
  ConfigMap out;
  std::string section;
  std::string raw;
  std::size_t lineno = 0;
  const auto fail = [&](const std::string& what) { return FormatError(name, FormatError::Where::line, lineno, what); };
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw fail("empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw fail("expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw fail("empty key");
    std::string_view rest = trim(line.substr(eq + 1));
    std::string value;
    if (!rest.empty() && rest.front() == '"') {
      std::size_t i = 1;
      bool closed = false;
      for (; i < rest.size(); ++i) {
        if (rest[i] == '\\' && i + 1 < rest.size()) {
          const char c = rest[++i];
          value.push_back(c == 'n' ? '\n' : c == 't' ? '\t' : c);
        } else if (rest[i] == '"') {
          closed = true;
          break;
        } else {
          value.push_back(rest[i]);
        }
      }
      if (!closed) throw fail("unterminated string");
      const auto tail = trim(rest.substr(i + 1));
      if (!tail.empty() && tail.front() != '#') throw fail("unexpected text after string value");
    } else {
      const auto hash = rest.find('#');
      value = std::string(trim(rest.substr(0, hash)));
      if (value.empty()) throw fail("missing value for '" + key + "'");
    }
    const std::string full = section.empty() ? key : section + "." + key;
    const std::string_view leaf = std::string_view(full).substr(full.rfind('.') + 1);
    for (std::string_view secret : {"key", "apikey", "token", "secret", "password"}) {
      if (leaf == secret || (leaf.size() > secret.size() && leaf.ends_with(secret) &&
                             leaf[leaf.size() - secret.size() - 1] == '_')) {
        throw fail("'" + full + "': secrets must come from HYDE_LLM_API_KEY / HYDE_ENCODER_API_KEY, not config files");
      }
    }
    if (!out.emplace(full, value).second) throw fail("duplicate key '" + full + "'");
  }
  return out;
}

inline ConfigMap parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse_config(in, path.string());
}

enum class SearchMode { baseline, hyde };

inline SearchMode parse_search_mode(const std::string& s) {
  if (s == "baseline") return SearchMode::baseline;
  if (s == "hyde") return SearchMode::hyde;
  throw Error("unknown mode '" + s + "' (expected baseline|hyde)");
}

struct ExperimentPaths {
  std::optional<std::filesystem::path> corpus, queries, qrels, cache, store, index, run, report, out_dir;
};

struct ExperimentConfig {
  EncoderConfig encoder;
  GenerationConfig generator;
  std::string instruction = "web";
  std::optional<std::filesystem::path> instruction_file;
  SearchMode mode = SearchMode::hyde;
  std::size_t k = 1000;
  bool include_query = true;
  TextField field = TextField::title_text;
  int binarize_at = 1;
  std::string metrics = "map,ndcg@10,recall@1000,recall@100,mrr@100";
  ExperimentPaths paths;

  InstructionTemplate instruction_template() const {
    if (instruction_file) return InstructionTemplate::from_file(*instruction_file);
    return builtin_template(instruction);
  }

  void validate() const {
    encoder.validate();
    generator.validate();
    if (k == 0) throw Error("k must be >= 1");
    if (binarize_at < 1) throw Error("binarize_at must be >= 1");
    if (mode == SearchMode::hyde && generator.n_samples == 0 && !include_query) {
      throw Error("hyde mode with n = 0 and include_query = false has nothing to search with");
    }
  }
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(key + ": expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_uint(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end) throw Error(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
    throw Error(key + ": expected a number, got '" + v + "'");
  }
  return d;
}

}  // namespace detail

/// One configurable setting: config-file key, CLI flag, and how to apply a
/// raw string value to an ExperimentConfig.
struct Setting {
  std::string_view key;
  std::string_view flag;
  std::string_view help;
  bool is_bool;
  void (*apply)(ExperimentConfig&, const std::string& key, const std::string& value);
};

inline const std::vector<Setting>& settings() {
  using C = ExperimentConfig;
  using S = std::string;
  static const std::vector<Setting> kSettings = {
      {"encoder.backend", "--encoder", "encoder backend: remote|bow_hash", false,
       [](C& c, const S&, const S& v) { c.encoder.backend = parse_encoder_backend(v); }},
      {"encoder.url", "--encoder-url", "embedding endpoint URL", false,
       [](C& c, const S&, const S& v) { c.encoder.endpoint_url = v; }},
      {"encoder.model", "--encoder-model", "embedding model name", false,
       [](C& c, const S&, const S& v) { c.encoder.model_name = v; }},
      {"encoder.dim", "--dim", "embedding dimension", false,
       [](C& c, const S& k, const S& v) { c.encoder.dim = detail::parse_uint<std::size_t>(k, v); }},
      {"encoder.max_input_chars", "--max-input-chars", "truncate encoder inputs to this many characters", false,
       [](C& c, const S& k, const S& v) { c.encoder.max_input_chars = detail::parse_uint<std::size_t>(k, v); }},
      {"encoder.batch_size", "--batch-size", "texts per embedding request", false,
       [](C& c, const S& k, const S& v) { c.encoder.batch_size = detail::parse_uint<std::size_t>(k, v); }},
      {"encoder.normalize", "--normalize", "L2-normalize embeddings", true,
       [](C& c, const S& k, const S& v) { c.encoder.normalize = detail::parse_bool(k, v); }},
      {"encoder.parallelism", "--encoder-parallelism", "max embedding requests in flight", false,
       [](C& c, const S& k, const S& v) { c.encoder.parallelism = detail::parse_uint<std::size_t>(k, v); }},
      {"generator.backend", "--generator", "generator backend: remote|mock", false,
       [](C& c, const S&, const S& v) { c.generator.backend = parse_generator_backend(v); }},
      {"generator.url", "--llm-url", "completion endpoint URL", false,
       [](C& c, const S&, const S& v) { c.generator.endpoint_url = v; }},
      {"generator.model", "--llm-model", "completion model name", false,
       [](C& c, const S&, const S& v) { c.generator.model_name = v; }},
      {"generator.n", "--n", "hypothetical documents per query", false,
       [](C& c, const S& k, const S& v) { c.generator.n_samples = detail::parse_uint<std::size_t>(k, v); }},
      {"generator.temperature", "--temperature", "sampling temperature", false,
       [](C& c, const S& k, const S& v) { c.generator.temperature = detail::parse_real(k, v); }},
      {"generator.max_tokens", "--max-tokens", "max tokens per generation", false,
       [](C& c, const S& k, const S& v) { c.generator.max_tokens = detail::parse_uint<int>(k, v); }},
      {"generator.seed", "--seed", "generator seed", false,
       [](C& c, const S& k, const S& v) { c.generator.seed = detail::parse_uint<std::uint64_t>(k, v); }},
      {"generator.parallelism", "--llm-parallelism", "max completion requests in flight", false,
       [](C& c, const S& k, const S& v) { c.generator.parallelism = detail::parse_uint<std::size_t>(k, v); }},
      {"search.mode", "--mode", "retrieval mode: baseline|hyde", false,
       [](C& c, const S&, const S& v) { c.mode = parse_search_mode(v); }},
      {"search.k", "--k", "retrieval depth", false,
       [](C& c, const S& k, const S& v) { c.k = detail::parse_uint<std::size_t>(k, v); }},
      {"search.include_query", "--include-query", "average the query embedding in with the hypotheses", true,
       [](C& c, const S& k, const S& v) { c.include_query = detail::parse_bool(k, v); }},
      {"search.instruction", "--instruction", "built-in instruction name", false,
       [](C& c, const S&, const S& v) { c.instruction = v; }},
      {"search.instruction_file", "--instruction-file", "instruction template file (overrides --instruction)", false,
       [](C& c, const S&, const S& v) { c.instruction_file = v; }},
      {"ingest.field", "--field", "document text used for embedding: text|title_text", false,
       [](C& c, const S&, const S& v) { c.field = parse_text_field(v); }},
      {"eval.binarize_at", "--binarize-at", "minimum grade counted as relevant", false,
       [](C& c, const S& k, const S& v) { c.binarize_at = detail::parse_uint<int>(k, v); }},
      {"eval.metrics", "--metrics", "comma-separated metrics, e.g. map,ndcg@10,recall@1000,mrr@100", false,
       [](C& c, const S&, const S& v) { c.metrics = v; }},
      {"paths.corpus", "--corpus", "corpus JSONL", false, [](C& c, const S&, const S& v) { c.paths.corpus = v; }},
      {"paths.queries", "--queries", "queries TSV", false, [](C& c, const S&, const S& v) { c.paths.queries = v; }},
      {"paths.qrels", "--qrels", "TREC qrels", false, [](C& c, const S&, const S& v) { c.paths.qrels = v; }},
      {"paths.cache", "--cache", "hypothetical document cache (JSONL)", false,
       [](C& c, const S&, const S& v) { c.paths.cache = v; }},
      {"paths.store", "--store", "embedding store", false, [](C& c, const S&, const S& v) { c.paths.store = v; }},
      {"paths.index", "--index", "index file", false, [](C& c, const S&, const S& v) { c.paths.index = v; }},
      {"paths.run", "--run", "TREC run file", false, [](C& c, const S&, const S& v) { c.paths.run = v; }},
      {"paths.report", "--report", "metric report (.json for JSON, TSV otherwise)", false,
       [](C& c, const S&, const S& v) { c.paths.report = v; }},
      {"paths.out_dir", "--out-dir", "directory for e2e artifacts", false,
       [](C& c, const S&, const S& v) { c.paths.out_dir = v; }},
  };
  return kSettings;
}

inline void apply_config(ExperimentConfig& cfg, const ConfigMap& map) {
  for (const auto& [key, value] : map) {
    const auto& all = settings();
    auto it = std::find_if(all.begin(), all.end(), [&](const Setting& s) { return s.key == key; });
    if (it == all.end()) throw Error("unknown config key '" + key + "'");
    it->apply(cfg, key, value);
  }
}

}  // namespace hyde
