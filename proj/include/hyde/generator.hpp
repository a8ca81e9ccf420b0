// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hyde/core.hpp"
#include "hyde/hash.hpp"
#include "hyde/http.hpp"
#include "hyde/parallel.hpp"
#include "hyde/text.hpp"

namespace hyde {

/// Prompt with exactly one placeholder ([QUESTION], [Claim], [PASSAGE] or
/// [TOPIC]) that is replaced verbatim by the query text.
class InstructionTemplate {
 public:
  static constexpr std::array<std::string_view, 4> kPlaceholders = {"[QUESTION]", "[Claim]", "[PASSAGE]",
                                                                     "[TOPIC]"};

  InstructionTemplate(std::string name, std::string text) : name_(std::move(name)), text_(std::move(text)) {
    std::size_t found = 0;
    for (auto ph : kPlaceholders) {
      for (auto pos = text_.find(ph); pos != std::string::npos; pos = text_.find(ph, pos + ph.size())) {
        if (found++ == 0) {
          placeholder_pos_ = pos;
          placeholder_len_ = ph.size();
        }
      }
    }
    if (found != 1) {
      throw Error("instruction template '" + name_ + "' must contain exactly one placeholder, found " +
                  std::to_string(found));
    }
  }

  /// Reads a template from a file; the name is the file stem. One trailing
  /// newline is dropped.
  static InstructionTemplate from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open instruction file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    if (!text.empty() && text.back() == '\n') text.pop_back();
    if (!text.empty() && text.back() == '\r') text.pop_back();
    return InstructionTemplate(path.stem().string(), std::move(text));
  }

  const std::string& name() const noexcept { return name_; }
  const std::string& text() const noexcept { return text_; }

  std::string render(const QueryRecord& q) const {
    std::string out = text_;
    out.replace(placeholder_pos_, placeholder_len_, q.text);
    return out;
  }

 private:
  std::string name_;
  std::string text_;
  std::size_t placeholder_pos_ = 0;
  std::size_t placeholder_len_ = 0;
};

inline std::string render_instruction(const InstructionTemplate& tpl, const QueryRecord& q) { return tpl.render(q); }

/// Built-in per-task instructions.
inline const std::vector<InstructionTemplate>& builtin_templates() {
  static const std::vector<InstructionTemplate> kTemplates = {
      {"web", "Please write a passage to answer the question\nQuestion: [QUESTION]\nPassage:"},
      {"scifact", "Please write a scientific paper passage to support/refute the claim\nClaim: [Claim]\nPassage:"},
      {"arguana", "Please write a counter argument for the passage\nPassage: [PASSAGE]\nCounter Argument:"},
      {"trec-covid", "Please write a scientific paper passage to answer the question\nQuestion: [QUESTION]\nPassage:"},
      {"fiqa", "Please write a financial article passage to answer the question\nQuestion: [QUESTION]\nPassage:"},
      {"dbpedia", "Please write a passage to answer the question.\nQuestion: [QUESTION]\nPassage:"},
      {"trec-news", "Please write a news passage about the topic.\nTopic: [TOPIC]\nPassage:"},
      {"mrtydi-sw",
       "Please write a passage in Swahili to answer the question in detail.\nQuestion: [QUESTION]\nPassage:"},
      {"mrtydi-ko",
       "Please write a passage in Korean to answer the question in detail.\nQuestion: [QUESTION]\nPassage:"},
      {"mrtydi-ja",
       "Please write a passage in Japanese to answer the question in detail.\nQuestion: [QUESTION]\nPassage:"},
      {"mrtydi-bn",
       "Please write a passage in Bengali to answer the question in detail.\nQuestion: [QUESTION]\nPassage:"},
  };
  return kTemplates;
}

inline const InstructionTemplate& builtin_template(std::string_view name) {
  for (const auto& t : builtin_templates()) {
    if (t.name() == name) return t;
  }
  std::string known;
  for (const auto& t : builtin_templates()) known += (known.empty() ? "" : ", ") + t.name();
  throw Error("unknown instruction '" + std::string(name) + "' (known: " + known + ")");
}

enum class GeneratorBackend { remote, mock };

inline GeneratorBackend parse_generator_backend(const std::string& s) {
  if (s == "remote") return GeneratorBackend::remote;
  if (s == "mock") return GeneratorBackend::mock;
  throw Error("unknown generator backend '" + s + "' (expected remote|mock)");
}

inline std::string to_string(GeneratorBackend b) { return b == GeneratorBackend::remote ? "remote" : "mock"; }

struct GenerationConfig {
  GeneratorBackend backend = GeneratorBackend::mock;
  std::optional<std::string> endpoint_url;
  std::optional<std::string> model_name;
  std::size_t n_samples = 8;
  double temperature = 0.7;
  int max_tokens = 512;
  std::optional<std::uint64_t> seed;
  std::size_t parallelism = 4;

  void validate() const {
    if (!(temperature >= 0.0)) throw Error("generator: temperature must be >= 0");
    if (max_tokens <= 0) throw Error("generator: max_tokens must be positive");
    if (parallelism == 0) throw Error("generator: parallelism must be positive");
    if (backend == GeneratorBackend::remote && (!endpoint_url || endpoint_url->empty())) {
      throw Error("generator: remote backend requires an endpoint url");
    }
  }

  std::uint64_t effective_seed() const { return seed.value_or(0); }

  /// Identifies the sampling source; part of the cache key.
  std::string model_id() const {
    if (backend == GeneratorBackend::mock) return "mock/seed=" + std::to_string(effective_seed());
    return model_name.value_or("remote");
  }
};

struct Provenance {
  std::string model_name;
  double temperature = 0.0;
  std::string template_name;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> request_ids;
  /// Indices of samples that were empty after trimming.
  std::vector<std::size_t> degenerate;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct HypotheticalSet {
  std::string query_id;
  std::vector<std::string> samples;
  Provenance provenance;

  friend bool operator==(const HypotheticalSet&, const HypotheticalSet&) = default;
};

inline void to_json(nlohmann::json& j, const Provenance& p) {
  j = {{"model_name", p.model_name},
       {"temperature", p.temperature},
       {"template", p.template_name},
       {"request_ids", p.request_ids},
       {"degenerate", p.degenerate}};
  j["seed"] = p.seed ? nlohmann::json(*p.seed) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, Provenance& p) {
  j.at("model_name").get_to(p.model_name);
  j.at("temperature").get_to(p.temperature);
  j.at("template").get_to(p.template_name);
  j.at("request_ids").get_to(p.request_ids);
  j.at("degenerate").get_to(p.degenerate);
  if (j.contains("seed") && !j.at("seed").is_null()) p.seed = j.at("seed").get<std::uint64_t>();
}

/// Source of hypothetical documents for a query.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual HypotheticalSet generate(const InstructionTemplate& tpl, const QueryRecord& q, std::size_t n) const = 0;
};

inline void flag_degenerate(HypotheticalSet& set) {
  set.provenance.degenerate.clear();
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    if (trim(set.samples[i]).empty()) set.provenance.degenerate.push_back(i);
  }
}

/// Word list the mock generator samples from. Order is part of the format.
inline constexpr std::array<std::string_view, 256> kMockVocabulary = {
    "able", "acid", "aged", "also", "area", "army", "away", "baby", "back", "ball", "band", "bank",
    "base", "bath", "bear", "beat", "been", "beer", "bell", "belt", "best", "bill", "bird", "blow",
    "blue", "boat", "body", "mean", "bond", "bone", "book", "boom", "born", "boss", "both", "bowl",
    "bulk", "burn", "bush", "busy", "call", "calm", "came", "camp", "card", "care", "case", "cash",
    "cast", "cell", "chat", "chip", "city", "club", "coal", "coat", "code", "cold", "come", "cook",
    "cool", "cope", "copy", "core", "cost", "crew", "crop", "dark", "data", "date", "dawn", "days",
    "dead", "deal", "dean", "dear", "debt", "deep", "deny", "desk", "dial", "diet", "disc", "disk",
    "does", "done", "door", "dose", "down", "draw", "drew", "drop", "drug", "dual", "duke", "dust",
    "duty", "each", "earn", "ease", "east", "easy", "edge", "else", "even", "ever", "exit", "face",
    "fact", "fail", "fair", "fall", "farm", "fast", "fate", "fear", "feed", "feel", "feet", "fell",
    "felt", "file", "fill", "film", "find", "fine", "fire", "firm", "fish", "five", "flat", "flow",
    "food", "foot", "ford", "form", "fort", "four", "free", "from", "fuel", "full", "fund", "gain",
    "game", "gate", "gave", "gear", "gene", "gift", "girl", "give", "glad", "goal", "goes", "gold",
    "golf", "gone", "good", "gray", "grew", "grey", "grow", "gulf", "hair", "half", "hall", "hand",
    "hang", "hard", "harm", "hate", "have", "head", "hear", "heat", "held", "mass", "help", "here",
    "hero", "high", "hill", "hire", "hold", "hole", "holy", "home", "hope", "host", "hour", "huge",
    "hung", "hunt", "hurt", "idea", "inch", "into", "iron", "item", "jack", "jane", "jean", "john",
    "join", "jump", "jury", "just", "keen", "keep", "kent", "kept", "kick", "meal", "kind", "king",
    "knee", "knew", "know", "lack", "lady", "laid", "lake", "land", "lane", "last", "late", "lead",
    "left", "less", "life", "lift", "like", "line", "link", "list", "live", "load", "loan", "lock",
    "logo", "long", "look", "lord", "lose", "loss", "lost", "love", "luck", "made", "mail", "main",
    "make", "male", "many", "mark",
};

inline constexpr std::size_t kMockTokensPerSample = 32;

/// Deterministic offline generator. Sample i for query q:
///   state = fnv1a64(decimal(seed) + ":" + q.query_id + ":" + decimal(i))
///   token_k = kMockVocabulary[splitmix64(state).next() % 256], k < 32
///   sample = q.text + " " + join(tokens, " ")
class MockGenerator final : public Generator {
 public:
  explicit MockGenerator(std::uint64_t seed, double temperature = 0.0) : seed_(seed), temperature_(temperature) {}

  std::string sample(const QueryRecord& q, std::size_t index) const {
    const std::string key = std::to_string(seed_) + ":" + q.query_id + ":" + std::to_string(index);
    SplitMix64 rng(fnv1a64(key));
    std::string out = q.text;
    for (std::size_t k = 0; k < kMockTokensPerSample; ++k) {
      out += ' ';
      out += kMockVocabulary[rng.next() % kMockVocabulary.size()];
    }
    return out;
  }

  HypotheticalSet generate(const InstructionTemplate& tpl, const QueryRecord& q, std::size_t n) const override {
    HypotheticalSet set;
    set.query_id = q.query_id;
    set.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) set.samples.push_back(sample(q, i));
    set.provenance.model_name = "mock";
    set.provenance.temperature = temperature_;
    set.provenance.template_name = tpl.name();
    set.provenance.seed = seed_;
    flag_degenerate(set);
    return set;
  }

 private:
  std::uint64_t seed_;
  double temperature_;
};

/// OpenAI-compatible completion client. Each of the N samples is its own
/// request. Endpoints whose path ends in /chat/completions get the chat
/// message shape; anything else gets the legacy {"prompt": ...} shape.
class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(const GenerationConfig& cfg, http::RetryPolicy retry = {})
      : cfg_(cfg),
        client_(http::Endpoint::parse(cfg.endpoint_url.value_or("")), http::env("HYDE_LLM_API_KEY"),
                std::move(retry)) {
    const auto path = http::Endpoint::parse(*cfg.endpoint_url).path;
    chat_ = path.size() >= 17 && path.compare(path.size() - 17, 17, "/chat/completions") == 0;
  }

  HypotheticalSet generate(const InstructionTemplate& tpl, const QueryRecord& q, std::size_t n) const override {
    const std::string prompt = tpl.render(q);
    HypotheticalSet set;
    set.query_id = q.query_id;
    set.samples.resize(n);
    set.provenance.request_ids.resize(n);
    bounded_parallel_for(n, cfg_.parallelism, [&](std::size_t i) {
      auto [text, id] = complete(prompt);
      if (trim(text).empty()) {
        spdlog::warn("generator: empty completion for query {} sample {}; retrying once", q.query_id, i);
        std::tie(text, id) = complete(prompt);
      }
      set.samples[i] = std::move(text);
      set.provenance.request_ids[i] = std::move(id);
    });
    set.provenance.model_name = cfg_.model_name.value_or("");
    set.provenance.temperature = cfg_.temperature;
    set.provenance.template_name = tpl.name();
    set.provenance.seed = cfg_.seed;
    flag_degenerate(set);
    for (auto i : set.provenance.degenerate) {
      spdlog::warn("generator: query {} sample {} is degenerate (empty)", q.query_id, i);
    }
    return set;
  }

 private:
  std::pair<std::string, std::string> complete(const std::string& prompt) const {
    nlohmann::json body = {{"temperature", cfg_.temperature}, {"max_tokens", cfg_.max_tokens}};
    if (cfg_.model_name) body["model"] = *cfg_.model_name;
    if (cfg_.seed) body["seed"] = *cfg_.seed;
    if (chat_) {
      body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    } else {
      body["prompt"] = prompt;
    }
    const auto res = client_.post(body);
    try {
      const auto& choice = res.at("choices").at(0);
      std::string text;
      if (chat_) {
        const auto& content = choice.at("message").at("content");
        text = content.is_null() ? "" : content.get<std::string>();
      } else {
        text = choice.at("text").get<std::string>();
      }
      const std::string id = res.contains("id") && res.at("id").is_string() ? res.at("id").get<std::string>() : "";
      return {std::move(text), id};
    } catch (const nlohmann::json::exception& e) {
      throw Error(client_.url() + ": malformed completion response: " + e.what());
    }
  }

  GenerationConfig cfg_;
  http::JsonClient client_;
  bool chat_ = false;
};

inline std::unique_ptr<Generator> make_generator(const GenerationConfig& cfg, http::RetryPolicy retry = {}) {
  cfg.validate();
  if (cfg.backend == GeneratorBackend::mock) return std::make_unique<MockGenerator>(cfg.effective_seed(), cfg.temperature);
  return std::make_unique<RemoteGenerator>(cfg, std::move(retry));
}

inline HypotheticalSet generate_hypotheticals(const GenerationConfig& cfg, const InstructionTemplate& tpl,
                                              const QueryRecord& q) {
  return make_generator(cfg)->generate(tpl, q, cfg.n_samples);
}

}  // namespace hyde
