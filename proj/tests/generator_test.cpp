// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "hyde/generator.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using hyde::InstructionTemplate;
using hyde::QueryRecord;

namespace {

// Re-derivation of the mock construction from its written definition.
std::string mock_sample_by_hand(std::uint64_t seed, const QueryRecord& q, std::size_t index) {
  std::uint64_t state = oracle::fnv1a64(std::to_string(seed) + ":" + q.query_id + ":" + std::to_string(index));
  std::string out = q.text;
  for (int i = 0; i < 32; ++i) out += " " + std::string(hyde::kMockVocabulary[oracle::splitmix64(state) % 256]);
  return out;
}

}  // namespace

TEST(Template, WebExampleRendersVerbatim) {
  EXPECT_EQ(hyde::render_instruction(hyde::builtin_template("web"), {"q", "what is dns"}),
            "Please write a passage to answer the question\nQuestion: what is dns\nPassage:");
}

TEST(Template, ScifactMentionsClaim) {
  const auto p = hyde::render_instruction(hyde::builtin_template("scifact"), {"c1", "Aspirin reduces risk."});
  EXPECT_NE(p.find("scientific paper passage to support/refute the claim"), std::string::npos);
  EXPECT_NE(p.find("Aspirin reduces risk."), std::string::npos);
}

TEST(Template, BuiltinsMatchReferenceTexts) {
  const std::map<std::string, std::string> expected = {
      {"arguana", "Please write a counter argument for the passage\nPassage: [PASSAGE]\nCounter Argument:"},
      {"trec-covid", "Please write a scientific paper passage to answer the question\nQuestion: [QUESTION]\nPassage:"},
      {"fiqa", "Please write a financial article passage to answer the question\nQuestion: [QUESTION]\nPassage:"},
      {"dbpedia", "Please write a passage to answer the question.\nQuestion: [QUESTION]\nPassage:"},
      {"trec-news", "Please write a news passage about the topic.\nTopic: [TOPIC]\nPassage:"},
      {"mrtydi-ja",
       "Please write a passage in Japanese to answer the question in detail.\nQuestion: [QUESTION]\nPassage:"},
  };
  for (const auto& [name, text] : expected) EXPECT_EQ(hyde::builtin_template(name).text(), text) << name;
  const std::set<std::string> names = {"web",       "scifact",   "arguana",   "trec-covid", "fiqa",     "dbpedia",
                                       "trec-news", "mrtydi-sw", "mrtydi-ko", "mrtydi-ja",  "mrtydi-bn"};
  std::set<std::string> have;
  for (const auto& t : hyde::builtin_templates()) have.insert(t.name());
  EXPECT_EQ(have, names);
  EXPECT_THROW(hyde::builtin_template("nope"), hyde::Error);
}

TEST(Template, Substitution) {
  EXPECT_EQ(InstructionTemplate("t", "X [QUESTION] Y").render({"q", "q"}), "X q Y");
  // The query is inserted verbatim, even if it looks like a placeholder.
  EXPECT_EQ(InstructionTemplate("t", "X [QUESTION] Y").render({"q", "[TOPIC]"}), "X [TOPIC] Y");
}

TEST(Template, PlaceholderCountValidated) {
  EXPECT_THROW(InstructionTemplate("t", "no placeholder"), hyde::Error);
  EXPECT_THROW(InstructionTemplate("t", "[QUESTION] and [QUESTION]"), hyde::Error);
  EXPECT_THROW(InstructionTemplate("t", "[QUESTION] and [TOPIC]"), hyde::Error);
  EXPECT_NO_THROW(InstructionTemplate("t", "[Claim]"));
}

TEST(Template, RenderingInjectiveInQuery) {
  const auto& tpl = hyde::builtin_template("web");
  std::set<std::string> prompts;
  for (int i = 0; i < 200; ++i) prompts.insert(tpl.render({"q", "query " + std::to_string(i)}));
  EXPECT_EQ(prompts.size(), 200u);
}

TEST(Template, FromFile) {
  testutil::TempDir dir;
  testutil::write_file(dir / "legal.txt", "Write a court ruling about\n[QUESTION]\n");
  const auto tpl = InstructionTemplate::from_file(dir / "legal.txt");
  EXPECT_EQ(tpl.name(), "legal");
  EXPECT_EQ(tpl.render({"q", "x"}), "Write a court ruling about\nx");
  testutil::write_file(dir / "bad.txt", "nothing to fill");
  EXPECT_THROW(InstructionTemplate::from_file(dir / "bad.txt"), hyde::Error);
}

TEST(MockGenerator, VocabularyIsDistinctFourLetterWords) {
  std::set<std::string_view> words(hyde::kMockVocabulary.begin(), hyde::kMockVocabulary.end());
  EXPECT_EQ(words.size(), 256u);
  for (auto w : words) EXPECT_EQ(w.size(), 4u) << w;
}

TEST(MockGenerator, MatchesHandDerivation) {
  const QueryRecord q{"q7", "capital of france"};
  for (std::uint64_t seed : {0ULL, 7ULL, 8ULL, 123456789ULL}) {
    hyde::MockGenerator gen(seed);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(gen.sample(q, i), mock_sample_by_hand(seed, q, i));
  }
}

TEST(MockGenerator, SeedsDiffer) {
  const QueryRecord q{"q1", "what is dns"};
  const auto s7 = hyde::MockGenerator(7).sample(q, 0);
  const auto s8 = hyde::MockGenerator(8).sample(q, 0);
  EXPECT_EQ(s7, mock_sample_by_hand(7, q, 0));
  EXPECT_EQ(s8, mock_sample_by_hand(8, q, 0));
  EXPECT_NE(s7, s8);
}

TEST(MockGenerator, DeterministicAndStartsWithQuery) {
  hyde::GenerationConfig cfg;
  cfg.seed = 7;
  cfg.n_samples = 3;
  const QueryRecord q{"q1", "what is dns"};
  const auto a = hyde::generate_hypotheticals(cfg, hyde::builtin_template("web"), q);
  const auto b = hyde::generate_hypotheticals(cfg, hyde::builtin_template("web"), q);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.samples.size(), 3u);
  for (const auto& s : a.samples) {
    EXPECT_EQ(s.rfind("what is dns ", 0), 0u);
    EXPECT_EQ(hyde::tokenize_bow(s).size(), 3u + 32u);
  }
  EXPECT_NE(a.samples[0], a.samples[1]);
  EXPECT_EQ(a.provenance.seed, 7u);
  EXPECT_DOUBLE_EQ(a.provenance.temperature, 0.7);
  EXPECT_EQ(a.provenance.template_name, "web");
}

TEST(MockGenerator, SampleCountAlwaysN) {
  hyde::GenerationConfig cfg;
  for (std::size_t n : {0u, 1u, 8u, 17u}) {
    cfg.n_samples = n;
    EXPECT_EQ(hyde::generate_hypotheticals(cfg, hyde::builtin_template("web"), {"q", "x"}).samples.size(), n);
  }
}

TEST(GenerationConfig, Validation) {
  hyde::GenerationConfig cfg;
  EXPECT_EQ(cfg.n_samples, 8u);
  EXPECT_DOUBLE_EQ(cfg.temperature, 0.7);
  EXPECT_EQ(cfg.max_tokens, 512);
  EXPECT_EQ(cfg.model_id(), "mock/seed=0");
  cfg.temperature = -0.1;
  EXPECT_THROW(cfg.validate(), hyde::Error);
  cfg.temperature = 0.0;
  cfg.backend = hyde::GeneratorBackend::remote;
  EXPECT_THROW(cfg.validate(), hyde::Error);
  cfg.endpoint_url = "http://localhost:1/v1/completions";
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Provenance, JsonRoundTrip) {
  hyde::Provenance p{"m", 0.7, "web", 42, {"a", "b"}, {1}};
  const nlohmann::json j = p;
  EXPECT_EQ(j.get<hyde::Provenance>(), p);
  hyde::Provenance none{"m", 0.0, "web", std::nullopt, {}, {}};
  const nlohmann::json k = none;
  EXPECT_TRUE(k.at("seed").is_null());
  EXPECT_EQ(k.get<hyde::Provenance>(), none);
}
