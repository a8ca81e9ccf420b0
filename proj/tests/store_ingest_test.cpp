// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <random>

#include "hyde/ingest.hpp"
#include "hyde/store.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using hyde::EmbeddingVector;

namespace {

class CountingEncoder final : public hyde::Encoder {
 public:
  explicit CountingEncoder(std::size_t dim, std::size_t fail_on_call = 0) : inner_(dim), fail_on_(fail_on_call) {}
  std::size_t dim() const override { return inner_.dim(); }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override {
    const auto n = ++calls;
    if (fail_on_ != 0 && n == fail_on_) throw hyde::TransportError("service down", 5);
    texts_seen += texts.size();
    return inner_.embed(texts);
  }
  mutable std::atomic<std::size_t> calls{0};
  mutable std::atomic<std::size_t> texts_seen{0};

 private:
  hyde::BowHashEncoder inner_;
  std::size_t fail_on_;
};

void write_corpus(const fs::path& p, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    s += R"({"_id":"d)" + std::to_string(i) + R"(","title":"T)" + std::to_string(i) + R"(","text":"body words )" +
         std::to_string(i * 7) + "\"}\n";
  }
  testutil::write_file(p, s);
}

std::vector<std::string> store_ids(const fs::path& p) {
  std::vector<std::string> ids;
  for (auto& [id, v] : hyde::store::read_all(p)) ids.push_back(id);
  return ids;
}

hyde::EncoderConfig bow(std::size_t dim, std::size_t batch) {
  hyde::EncoderConfig cfg;
  cfg.dim = dim;
  cfg.batch_size = batch;
  return cfg;
}

}  // namespace

TEST(Corpus, KeySpellingsAndTitles) {
  testutil::TempDir dir;
  testutil::write_file(dir / "c.jsonl",
                       "{\"_id\":\"d1\",\"title\":\"T\",\"text\":\"B\"}\n\n{\"id\":\"d2\",\"text\":\"B\"}\r\n"
                       "{\"id\":17,\"title\":null,\"text\":\"num\"}\n");
  const auto docs = hyde::load_corpus(dir / "c.jsonl");
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].doc_id, "d1");
  EXPECT_EQ(docs[0].embedding_text(), "T B");
  EXPECT_EQ(docs[1].doc_id, "d2");
  EXPECT_EQ(docs[1].embedding_text(), "B");
  EXPECT_EQ(docs[2].doc_id, "17");
}

TEST(Corpus, ErrorsCarryLineNumbers) {
  testutil::TempDir dir;
  auto expect_line = [&](const std::string& content, std::uint64_t line, const char* needle) {
    testutil::write_file(dir / "c.jsonl", content);
    try {
      hyde::load_corpus(dir / "c.jsonl");
      FAIL() << "expected FormatError: " << needle;
    } catch (const hyde::FormatError& e) {
      EXPECT_EQ(e.where(), hyde::FormatError::Where::line);
      EXPECT_EQ(e.position(), line) << e.what();
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_line("{\"_id\":\"a\",\"text\":\"x\"}\n{\"_id\":\"a\",\"text\":\"y\"}\n", 2, "duplicate");
  expect_line("{\"_id\":\"a\",\"text\":\"x\"}\n\n{oops\n", 3, "malformed JSON");
  expect_line("{\"text\":\"x\"}\n", 1, "id");
  expect_line("{\"_id\":\"a b\",\"text\":\"x\"}\n", 1, "whitespace");
  expect_line("{\"_id\":\"a\",\"text\":5}\n", 1, "text");
}

TEST(Queries, TsvParsing) {
  testutil::TempDir dir;
  testutil::write_file(dir / "q.tsv", "q1\twhat is dns\r\n\nq2\ttabs\tinside text\n");
  const auto qs = hyde::load_queries(dir / "q.tsv");
  ASSERT_EQ(qs.size(), 2u);
  EXPECT_EQ(qs[0].text, "what is dns");
  EXPECT_EQ(qs[1].text, "tabs\tinside text");
  testutil::write_file(dir / "q.tsv", "q1\ta\nq1\tb\n");
  EXPECT_THROW(hyde::load_queries(dir / "q.tsv"), hyde::FormatError);
  testutil::write_file(dir / "q.tsv", "q1 no tab\n");
  EXPECT_THROW(hyde::load_queries(dir / "q.tsv"), hyde::FormatError);
  testutil::write_file(dir / "q.tsv", "q1\t\n");
  EXPECT_THROW(hyde::load_queries(dir / "q.tsv"), hyde::FormatError);
}

TEST(Store, RoundTripIsBitExact) {
  std::mt19937_64 rng(77);
  testutil::TempDir dir;
  for (int t = 0; t < 20; ++t) {
    const auto path = dir / ("s" + std::to_string(t) + ".store");
    const std::size_t dim = 1 + rng() % 32;
    std::vector<std::pair<std::string, EmbeddingVector>> recs;
    {
      hyde::EmbeddingStoreWriter w(path, dim);
      for (int i = 0, n = static_cast<int>(rng() % 40); i < n; ++i) {
        recs.emplace_back("r" + std::to_string(i), testutil::random_vector(rng, dim, -1e20f, 1e20f));
        w.append(recs.back().first, recs.back().second);
      }
      w.flush();
    }
    EXPECT_EQ(hyde::store::read_all(path), recs);
    const auto idx = hyde::store::load_as_index(path);
    EXPECT_EQ(idx.dim(), dim);
    EXPECT_EQ(idx.size(), recs.size());
  }
}

TEST(Store, HeaderLayout) {
  testutil::TempDir dir;
  {
    hyde::EmbeddingStoreWriter w(dir / "s", 3);
    w.append("x", EmbeddingVector({1, 2, 3}));
  }
  const auto bytes = testutil::read_file(dir / "s");
  ASSERT_EQ(bytes.size(), 12u + 4u + 1u + 12u);
  EXPECT_EQ(bytes.substr(0, 4), "HYDE");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[12], 1);
  EXPECT_EQ(bytes[16], 'x');
}

TEST(Store, TruncatedTailIsDiscardedOnReopen) {
  testutil::TempDir dir;
  const auto path = dir / "s";
  {
    hyde::EmbeddingStoreWriter w(path, 2);
    w.append("a", EmbeddingVector({1, 2}));
    w.append("b", EmbeddingVector({3, 4}));
  }
  const auto full = fs::file_size(path);
  fs::resize_file(path, full - 5);
  EXPECT_EQ(store_ids(path), (std::vector<std::string>{"a"}));
  {
    hyde::EmbeddingStoreWriter w(path, 2);
    EXPECT_TRUE(w.contains("a"));
    EXPECT_FALSE(w.contains("b"));
    w.append("b", EmbeddingVector({3, 4}));
  }
  EXPECT_EQ(fs::file_size(path), full);
  EXPECT_EQ(store_ids(path), (std::vector<std::string>{"a", "b"}));
}

TEST(Store, RejectsBadHeaderAndDimChange) {
  testutil::TempDir dir;
  testutil::write_file(dir / "bad", "HYDX\x01\0\0\0\x02\0\0\0");
  EXPECT_THROW(hyde::store::read_all(dir / "bad"), hyde::FormatError);
  {
    hyde::EmbeddingStoreWriter w(dir / "s", 2);
  }
  EXPECT_THROW(hyde::EmbeddingStoreWriter(dir / "s", 3), hyde::DimensionMismatch);
}

TEST(EmbedCorpus, StoreInCorpusOrder) {
  testutil::TempDir dir;
  write_corpus(dir / "c.jsonl", 5);
  CountingEncoder enc(16);
  hyde::CorpusReader rd(dir / "c.jsonl");
  const auto stats = hyde::embed_corpus(rd, enc, bow(16, 2), dir / "s");
  EXPECT_EQ(stats.embedded, 5u);
  EXPECT_EQ(enc.calls.load(), 3u);
  EXPECT_EQ(store_ids(dir / "s"), (std::vector<std::string>{"d0", "d1", "d2", "d3", "d4"}));
}

TEST(EmbedCorpus, RerunMakesNoEncoderCalls) {
  testutil::TempDir dir;
  write_corpus(dir / "c.jsonl", 5);
  {
    CountingEncoder enc(16);
    hyde::CorpusReader rd(dir / "c.jsonl");
    hyde::embed_corpus(rd, enc, bow(16, 2), dir / "s");
  }
  const auto before = testutil::read_file(dir / "s");
  CountingEncoder enc(16);
  hyde::CorpusReader rd(dir / "c.jsonl");
  const auto stats = hyde::embed_corpus(rd, enc, bow(16, 2), dir / "s");
  EXPECT_EQ(enc.calls.load(), 0u);
  EXPECT_EQ(stats.embedded, 0u);
  EXPECT_EQ(stats.skipped, 5u);
  EXPECT_EQ(testutil::read_file(dir / "s"), before);
}

TEST(EmbedCorpus, BatchingIsTransparent) {
  testutil::TempDir dir;
  write_corpus(dir / "c.jsonl", 3);
  hyde::embed_corpus(dir / "c.jsonl", bow(32, 2), dir / "b2");
  hyde::embed_corpus(dir / "c.jsonl", bow(32, 1), dir / "b1");
  EXPECT_EQ(testutil::read_file(dir / "b1"), testutil::read_file(dir / "b2"));
}

TEST(EmbedCorpus, FieldModeSelectsText) {
  testutil::TempDir dir;
  testutil::write_file(dir / "c.jsonl", "{\"_id\":\"d\",\"title\":\"Title\",\"text\":\"body\"}\n");
  hyde::embed_corpus(dir / "c.jsonl", bow(64, 4), dir / "tt", hyde::TextField::title_text);
  hyde::embed_corpus(dir / "c.jsonl", bow(64, 4), dir / "t", hyde::TextField::text);
  hyde::BowHashEncoder enc(64);
  EXPECT_EQ(hyde::store::read_all(dir / "tt").front().second, enc.embed_one("Title body"));
  EXPECT_EQ(hyde::store::read_all(dir / "t").front().second, enc.embed_one("body"));
}

TEST(EmbedCorpus, EncoderFailureReportsCompletedAndResumes) {
  testutil::TempDir dir;
  write_corpus(dir / "c.jsonl", 7);
  {
    CountingEncoder enc(8, 3);
    hyde::CorpusReader rd(dir / "c.jsonl");
    try {
      hyde::embed_corpus(rd, enc, bow(8, 2), dir / "s");
      FAIL() << "expected failure";
    } catch (const hyde::Error& e) {
      EXPECT_NE(std::string(e.what()).find("after 4 completed records"), std::string::npos) << e.what();
    }
  }
  EXPECT_EQ(store_ids(dir / "s").size(), 4u);
  CountingEncoder enc(8);
  hyde::CorpusReader rd(dir / "c.jsonl");
  const auto stats = hyde::embed_corpus(rd, enc, bow(8, 2), dir / "s");
  EXPECT_EQ(stats.skipped, 4u);
  EXPECT_EQ(stats.embedded, 3u);
  EXPECT_EQ(enc.texts_seen.load(), 3u);
  EXPECT_EQ(store_ids(dir / "s"), (std::vector<std::string>{"d0", "d1", "d2", "d3", "d4", "d5", "d6"}));
}

TEST(EmbedCorpus, SearchIndependentOfBatchSize) {
  testutil::TempDir dir;
  write_corpus(dir / "c.jsonl", 40);
  hyde::embed_corpus(dir / "c.jsonl", bow(128, 3), dir / "a");
  hyde::embed_corpus(dir / "c.jsonl", bow(128, 64), dir / "b");
  const auto ia = hyde::store::load_as_index(dir / "a");
  const auto ib = hyde::store::load_as_index(dir / "b");
  const auto q = hyde::BowHashEncoder(128).embed_one("body words 77 T3");
  EXPECT_EQ(ia.search(q, 40), ib.search(q, 40));
}
