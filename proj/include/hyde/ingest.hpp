// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "hyde/core.hpp"
#include "hyde/encoder.hpp"
#include "hyde/store.hpp"

namespace hyde {

enum class TextField { text, title_text };

inline TextField parse_text_field(const std::string& s) {
  if (s == "text") return TextField::text;
  if (s == "title_text") return TextField::title_text;
  throw Error("unknown field mode '" + s + "' (expected text|title_text)");
}

/// Streams DocumentRecords out of a JSONL corpus ({"_id"|"id", "title"?,
/// "text"} per line). Blank lines are skipped. Only the set of seen ids
/// grows with the corpus.
class CorpusReader {
 public:
  explicit CorpusReader(std::filesystem::path path) : path_(std::move(path)), in_(path_) {
    if (!in_) throw Error("cannot open corpus " + path_.string());
  }

  std::optional<DocumentRecord> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      return parse_line(line);
    }
    return std::nullopt;
  }

  std::size_t line() const noexcept { return line_; }

 private:
  DocumentRecord parse_line(const std::string& line) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path_.string(), FormatError::Where::line, line_, std::string("malformed JSON: ") + e.what());
    }
    const auto fail = [&](const std::string& what) {
      return FormatError(path_.string(), FormatError::Where::line, line_, what);
    };
    if (!j.is_object()) throw fail("expected a JSON object");
    const nlohmann::json* id = j.contains("_id") ? &j["_id"] : j.contains("id") ? &j["id"] : nullptr;
    if (id == nullptr) throw fail("missing \"_id\"/\"id\"");
    std::string doc_id = id->is_string() ? id->get<std::string>() : id->is_number_integer() ? id->dump() : "";
    if (doc_id.empty()) throw fail("document id must be a non-empty string");
    std::optional<std::string> title;
    if (j.contains("title") && !j["title"].is_null()) {
      if (!j["title"].is_string()) throw fail("\"title\" must be a string");
      title = j["title"].get<std::string>();
    }
    std::string text;
    if (j.contains("text") && !j["text"].is_null()) {
      if (!j["text"].is_string()) throw fail("\"text\" must be a string");
      text = j["text"].get<std::string>();
    }
    if (!seen_.insert(doc_id).second) throw fail("duplicate document id '" + doc_id + "'");
    try {
      return DocumentRecord(std::move(doc_id), std::move(title), std::move(text));
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }

  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_ = 0;
  std::unordered_set<std::string> seen_;
};

/// Reads the whole corpus; prefer CorpusReader for large files.
inline std::vector<DocumentRecord> load_corpus(const std::filesystem::path& path) {
  CorpusReader rd(path);
  std::vector<DocumentRecord> docs;
  while (auto d = rd.next()) docs.push_back(std::move(*d));
  return docs;
}

/// "query_id<TAB>query_text" per line.
inline std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open queries " + path.string());
  std::vector<QueryRecord> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path.string(), FormatError::Where::line, lineno, "expected query_id<TAB>query_text");
    }
    std::string id = line.substr(0, tab);
    if (!seen.insert(id).second) {
      throw FormatError(path.string(), FormatError::Where::line, lineno, "duplicate query id '" + id + "'");
    }
    try {
      out.emplace_back(std::move(id), line.substr(tab + 1));
    } catch (const Error& e) {
      throw FormatError(path.string(), FormatError::Where::line, lineno, e.what());
    }
  }
  return out;
}

struct EmbedCorpusStats {
  std::size_t embedded = 0;
  std::size_t skipped = 0;  // already present in the store
};

/// Embeds a corpus into an append-only store, in corpus order. Documents
/// whose id is already in the store are skipped, which makes re-running
/// after an interruption (or after completion) cheap. Texts are gathered
/// into windows of batch_size x parallelism so the encoder can keep that
/// many batches in flight; the window bounds peak memory.
inline EmbedCorpusStats embed_corpus(CorpusReader& corpus, const Encoder& encoder, const EncoderConfig& cfg,
                                     const std::filesystem::path& out_path, TextField field = TextField::title_text) {
  EmbeddingStoreWriter writer(out_path, encoder.dim());
  EmbedCorpusStats stats;
  const std::size_t window = cfg.batch_size * (cfg.backend == EncoderBackend::remote ? cfg.parallelism : 1);
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  const auto flush = [&] {
    if (ids.empty()) return;
    std::vector<EmbeddingVector> vecs;
    try {
      vecs = encoder.embed(texts);
    } catch (const std::exception& e) {
      writer.flush();
      throw Error("embedding aborted after " + std::to_string(writer.size()) + " completed records: " + e.what());
    }
    for (std::size_t i = 0; i < ids.size(); ++i) writer.append(ids[i], vecs[i]);
    writer.flush();
    stats.embedded += ids.size();
    ids.clear();
    texts.clear();
  };
  while (auto doc = corpus.next()) {
    if (writer.contains(doc->doc_id)) {
      ++stats.skipped;
      continue;
    }
    texts.push_back(doc->embedding_text(field == TextField::title_text));
    ids.push_back(std::move(doc->doc_id));
    if (ids.size() >= window) flush();
  }
  flush();
  return stats;
}

inline EmbedCorpusStats embed_corpus(const std::filesystem::path& corpus_path, const EncoderConfig& cfg,
                                     const std::filesystem::path& out_path, TextField field = TextField::title_text) {
  CorpusReader corpus(corpus_path);
  auto encoder = make_encoder(cfg);
  return embed_corpus(corpus, *encoder, cfg, out_path, field);
}

}  // namespace hyde
