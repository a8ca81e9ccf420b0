// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hyde/index.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using hyde::EmbeddingVector;
using hyde::FlatIndex;
namespace fs = std::filesystem;

namespace {

EmbeddingVector vec(std::vector<float> v) { return EmbeddingVector(std::move(v)); }

std::string serialize(const FlatIndex& idx) {
  std::ostringstream os(std::ios::binary);
  idx.save(os);
  return os.str();
}

FlatIndex deserialize(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  return FlatIndex::load(is, "mem");
}

}  // namespace

TEST(FlatIndex, TwoDocExample) {
  FlatIndex idx;
  idx.add("a", vec({1, 0}));
  idx.add("b", vec({0, 1}));
  const auto r = hyde::search_topk(idx, vec({1, 0.5f}), 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], (hyde::ScoredDoc{"a", 1.0}));
  EXPECT_EQ(r[1], (hyde::ScoredDoc{"b", 0.5}));
}

TEST(FlatIndex, TiesBreakByDocId) {
  FlatIndex idx;
  idx.add("zeta", vec({1, 1}));
  idx.add("alpha", vec({1, 1}));
  idx.add("mid", vec({1, 1}));
  const auto r = idx.search(vec({0.3f, -2}), 3);
  EXPECT_EQ(r[0].doc_id, "alpha");
  EXPECT_EQ(r[1].doc_id, "mid");
  EXPECT_EQ(r[2].doc_id, "zeta");
}

TEST(FlatIndex, BuildCases) {
  const std::vector<std::pair<std::string, EmbeddingVector>> none;
  const auto empty = hyde::build_index(none);
  EXPECT_TRUE(empty.empty());
  EXPECT_TRUE(empty.search(vec({1, 2, 3}), 5).empty());

  const std::vector<std::pair<std::string, EmbeddingVector>> three = {
      {"x", vec({1, 2})}, {"y", vec({3, 4})}, {"z", vec({5, 6})}};
  const auto idx = hyde::build_index(three);
  EXPECT_EQ(idx.size(), 3u);
  for (const auto& [id, v] : three) {
    EXPECT_TRUE(idx.contains(id));
    EXPECT_EQ(idx.vector(id), v);
  }
  EXPECT_EQ(idx.id(1), "y");

  const std::vector<std::pair<std::string, EmbeddingVector>> dup = {{"x", vec({1, 2})}, {"x", vec({3, 4})}};
  try {
    hyde::build_index(dup);
    FAIL() << "expected duplicate error";
  } catch (const hyde::Error& e) {
    EXPECT_NE(std::string(e.what()).find("'x'"), std::string::npos);
  }
  const std::vector<std::pair<std::string, EmbeddingVector>> mixed = {{"x", vec({1, 2})}, {"y", vec({3})}};
  EXPECT_THROW(hyde::build_index(mixed), hyde::DimensionMismatch);
}

TEST(FlatIndex, SearchErrors) {
  FlatIndex idx;
  idx.add("a", vec({1, 0}));
  EXPECT_THROW(idx.search(vec({1, 0, 0}), 1), hyde::DimensionMismatch);
  EXPECT_THROW(idx.search(vec({1, 0}), 0), hyde::Error);
  EXPECT_EQ(idx.search(vec({1, 0}), 100).size(), 1u);
}

TEST(FlatIndex, PrefixMonotonicityAndScaling) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 30; ++t) {
    const std::size_t dim = 1 + rng() % 24;
    FlatIndex idx;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 300); i < n; ++i) {
      idx.add("d" + std::to_string(i), testutil::random_vector(rng, dim));
    }
    const auto q = testutil::random_vector(rng, dim);
    const auto full = idx.search(q, idx.size());
    for (std::size_t i = 1; i < full.size(); ++i) EXPECT_GE(full[i - 1].score, full[i].score);
    for (std::size_t k = 1; k < idx.size(); k += 7) {
      const auto a = idx.search(q, k);
      const auto b = idx.search(q, k + 1);
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
    // Powers of two scale f32 components exactly, so every score scales exactly.
    const double c = std::ldexp(1.0, static_cast<int>(rng() % 10) - 4);
    const auto scaled = idx.search(hyde::scaled(q, c), idx.size());
    for (std::size_t i = 0; i < full.size(); ++i) {
      EXPECT_EQ(scaled[i].doc_id, full[i].doc_id);
      EXPECT_EQ(scaled[i].score, c * full[i].score);
    }
  }
}

TEST(FlatIndex, MatchesBruteForceUpTo10k) {
  std::mt19937_64 rng(29);
  for (std::size_t n : {1u, 17u, 1000u, 10000u}) {
    const std::size_t dim = 8;
    std::vector<std::string> ids;
    std::vector<std::vector<float>> rows;
    FlatIndex idx;
    std::uniform_int_distribution<int> small(-2, 2);
    for (std::size_t i = 0; i < n; ++i) {
      // Small integer components make exact ties common.
      std::vector<float> r(dim);
      for (auto& x : r) x = static_cast<float>(small(rng));
      if (std::all_of(r.begin(), r.end(), [](float x) { return x == 0; })) r[0] = 1;
      ids.push_back("doc" + std::to_string(rng() % 1000000) + "_" + std::to_string(i));
      rows.push_back(r);
      idx.add(ids.back(), EmbeddingVector(r));
    }
    for (int t = 0; t < 5; ++t) {
      std::vector<float> q(dim);
      for (auto& x : q) x = static_cast<float>(small(rng));
      for (std::size_t k : {std::size_t{1}, std::size_t{10}, n}) {
        const auto got = idx.search(EmbeddingVector(q), k);
        const auto want = oracle::brute_topk(ids, rows, q, k);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          ASSERT_EQ(got[i].doc_id, want[i].id) << "n=" << n << " k=" << k << " rank " << i;
          ASSERT_EQ(got[i].score, want[i].score);
        }
      }
    }
  }
}

TEST(FlatIndex, BatchSearchEqualsSequential) {
  std::mt19937_64 rng(31);
  FlatIndex idx;
  for (int i = 0; i < 500; ++i) idx.add("d" + std::to_string(i), testutil::random_vector(rng, 16));
  std::vector<EmbeddingVector> qs;
  for (int i = 0; i < 40; ++i) qs.push_back(testutil::random_vector(rng, 16));
  const auto batch = idx.search_batch(qs, 10, 4);
  for (std::size_t i = 0; i < qs.size(); ++i) EXPECT_EQ(batch[i], idx.search(qs[i], 10));
}

TEST(IndexFile, ExactLayout) {
  FlatIndex idx;
  idx.add("ab", vec({1.0f, -2.0f}));
  const std::string bytes = serialize(idx);
  const unsigned char expected[] = {'H', 'Y', 'D', 'X', 1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0,
                                    2,   0,   0,   0,   'a', 'b', 0, 0, 0x80, 0x3f, 0, 0, 0, 0xc0};
  ASSERT_EQ(bytes.size(), sizeof expected);
  for (std::size_t i = 0; i < bytes.size(); ++i) EXPECT_EQ(static_cast<unsigned char>(bytes[i]), expected[i]) << i;
}

TEST(IndexFile, RoundTripIsBitExact) {
  std::mt19937_64 rng(41);
  testutil::TempDir dir;
  for (int t = 0; t < 10; ++t) {
    FlatIndex idx;
    const std::size_t dim = 1 + rng() % 40;
    for (int i = 0, n = static_cast<int>(rng() % 50); i < n; ++i) {
      idx.add("id-\xc3\xa9-" + std::to_string(rng()), testutil::random_vector(rng, dim, -1e30f, 1e30f));
    }
    if (idx.empty()) idx = FlatIndex(dim);
    hyde::save_index(idx, dir / "x.hydx");
    const auto back = hyde::load_index(dir / "x.hydx");
    EXPECT_EQ(back, idx);
    for (std::size_t r = 0; r < idx.size(); ++r) EXPECT_EQ(back.id(r), idx.id(r));
    EXPECT_EQ(serialize(back), testutil::read_file(dir / "x.hydx"));
  }
  EXPECT_FALSE(fs::exists(dir / "x.hydx.tmp"));
}

TEST(IndexFile, FormatGates) {
  FlatIndex idx;
  idx.add("a", vec({1, 2}));
  idx.add("b", vec({3, 4}));
  const std::string good = serialize(idx);

  auto expect_offset = [](const std::string& bytes, std::uint64_t offset, const char* needle) {
    try {
      deserialize(bytes);
      FAIL() << "expected FormatError for " << needle;
    } catch (const hyde::FormatError& e) {
      EXPECT_EQ(e.where(), hyde::FormatError::Where::byte_offset);
      EXPECT_EQ(e.position(), offset) << e.what();
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };

  std::string bad = good;
  bad[0] = 'X';
  expect_offset(bad, 0, "magic");
  bad = good;
  bad[4] = 2;
  expect_offset(bad, 4, "version");
  // Cut inside the second record's vector.
  expect_offset(good.substr(0, good.size() - 3), good.size() - 8, "truncated");
  expect_offset(good.substr(0, 10), 8, "truncated");
  expect_offset(good + "x", good.size(), "trailing");
}
