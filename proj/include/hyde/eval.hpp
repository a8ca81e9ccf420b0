// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hyde/core.hpp"

namespace hyde {

using Judgments = std::map<std::string, int>;  // doc_id -> grade

struct QrelsTable {
  std::map<std::string, Judgments> by_query;

  int grade(const std::string& qid, const std::string& doc_id) const {
    auto q = by_query.find(qid);
    if (q == by_query.end()) return 0;
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
  }
};

struct RankedRun {
  std::string tag;
  std::map<std::string, std::vector<ScoredDoc>> by_query;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t b = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && p == end;
}

inline bool parse_double(std::string_view s, double& out) {
  // from_chars for double is not available on every toolchain we target.
  std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && !tmp.empty() && std::isfinite(out);
}

}  // namespace detail

/// "qid iter docid grade" per line.
inline QrelsTable parse_qrels(std::istream& in, const std::string& name = "<qrels>") {
  QrelsTable q;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = detail::split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 4) {
      throw FormatError(name, FormatError::Where::line, lineno, "expected 4 fields, got " + std::to_string(f.size()));
    }
    int grade = 0;
    if (!detail::parse_number(f[3], grade)) {
      throw FormatError(name, FormatError::Where::line, lineno, "non-integer grade '" + std::string(f[3]) + "'");
    }
    // trec_eval treats negative grades as non-relevant; keep the table non-negative.
    q.by_query[std::string(f[0])][std::string(f[2])] = std::max(grade, 0);
  }
  return q;
}

inline QrelsTable parse_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open qrels " + path.string());
  return parse_qrels(in, path.string());
}

/// "qid Q0 docid rank score tag" per line. Each query's list keeps the
/// order given by the rank field (stable for equal ranks).
inline RankedRun parse_run(std::istream& in, const std::string& name = "<run>") {
  struct Row {
    long rank;
    std::size_t seq;
    ScoredDoc doc;
  };
  std::map<std::string, std::vector<Row>> rows;
  std::map<std::string, std::unordered_set<std::string>> seen;
  RankedRun run;
  std::string line;
  std::size_t lineno = 0;
  std::size_t seq = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = detail::split_ws(line);
    if (f.empty()) continue;
    const auto fail = [&](const std::string& what) {
      return FormatError(name, FormatError::Where::line, lineno, what);
    };
    if (f.size() != 6) throw fail("expected 6 fields, got " + std::to_string(f.size()));
    long rank = 0;
    double score = 0;
    if (!detail::parse_number(f[3], rank)) throw fail("non-integer rank '" + std::string(f[3]) + "'");
    if (!detail::parse_double(f[4], score)) throw fail("invalid score '" + std::string(f[4]) + "'");
    const std::string qid(f[0]);
    std::string doc(f[2]);
    if (!seen[qid].insert(doc).second) throw fail("duplicate doc '" + doc + "' for query " + qid);
    if (run.tag.empty()) run.tag = std::string(f[5]);
    rows[qid].push_back({rank, seq++, {std::move(doc), score}});
  }
  for (auto& [qid, list] : rows) {
    std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
    auto& out = run.by_query[qid];
    out.reserve(list.size());
    for (auto& r : list) out.push_back(std::move(r.doc));
  }
  return run;
}

inline RankedRun parse_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open run " + path.string());
  return parse_run(in, path.string());
}

/// Ranks start at 1; scores are printed with 6 decimals.
inline void write_run(std::ostream& out, const RankedRun& run) {
  const std::string tag = run.tag.empty() ? "hyde" : run.tag;
  for (const auto& [qid, docs] : run.by_query) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      out << fmt::format("{} Q0 {} {} {:.6f} {}\n", qid, docs[i].doc_id, i + 1, docs[i].score, tag);
    }
  }
}

inline void write_run(const std::filesystem::path& path, const RankedRun& run) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write run " + tmp.string());
    write_run(out, run);
    out.flush();
    if (!out) throw Error("write failed on run " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Per-query metrics over a ranked list of doc ids.

inline std::vector<std::string> doc_ids(const std::vector<ScoredDoc>& docs) {
  std::vector<std::string> ids;
  ids.reserve(docs.size());
  for (const auto& d : docs) ids.push_back(d.doc_id);
  return ids;
}

namespace metric {

inline int grade_of(const Judgments& j, const std::string& doc) {
  auto it = j.find(doc);
  return it == j.end() ? 0 : it->second;
}

/// Linear gain: DCG@k = sum grade_i / log2(i + 1); 0 when IDCG is 0.
inline double ndcg(const std::vector<std::string>& ranked, const Judgments& j, std::size_t k) {
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    dcg += grade_of(j, ranked[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> ideal;
  for (const auto& [doc, g] : j) {
    if (g > 0) ideal.push_back(g);
  }
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

inline std::size_t relevant_count(const Judgments& j, int binarize_at) {
  return static_cast<std::size_t>(
      std::count_if(j.begin(), j.end(), [&](const auto& e) { return e.second >= binarize_at; }));
}

inline double average_precision(const std::vector<std::string>& ranked, const Judgments& j, std::size_t depth,
                                int binarize_at) {
  const std::size_t r = relevant_count(j, binarize_at);
  if (r == 0) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(depth, ranked.size()); ++i) {
    if (grade_of(j, ranked[i]) >= binarize_at) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(r);
}

inline double recall(const std::vector<std::string>& ranked, const Judgments& j, std::size_t k, int binarize_at) {
  const std::size_t r = relevant_count(j, binarize_at);
  if (r == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    if (grade_of(j, ranked[i]) >= binarize_at) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(r);
}

inline double reciprocal_rank(const std::vector<std::string>& ranked, const Judgments& j, std::size_t k,
                              int binarize_at) {
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    if (grade_of(j, ranked[i]) >= binarize_at) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

}  // namespace metric

/// A metric name with cutoff: "ndcg@10", "map" (= map@1000), "map@100",
/// "recall@1000" (alias "recall@1k"), "mrr@100".
struct MetricSpec {
  enum class Kind { ndcg, map, recall, mrr };
  Kind kind;
  std::size_t k;

  std::string name() const {
    switch (kind) {
      case Kind::ndcg: return "ndcg@" + std::to_string(k);
      case Kind::map: return k == 1000 ? "map" : "map@" + std::to_string(k);
      case Kind::recall: return "recall@" + std::to_string(k);
      case Kind::mrr: return "mrr@" + std::to_string(k);
    }
    return {};
  }

  static MetricSpec parse(std::string_view s) {
    const auto at = s.find('@');
    const std::string head(s.substr(0, at));
    std::size_t k = 0;
    if (at != std::string_view::npos) {
      std::string_view tail = s.substr(at + 1);
      std::size_t mult = 1;
      if (!tail.empty() && (tail.back() == 'k' || tail.back() == 'K')) {
        mult = 1000;
        tail.remove_suffix(1);
      }
      if (!detail::parse_number(tail, k) || k == 0) throw Error("invalid metric cutoff in '" + std::string(s) + "'");
      k *= mult;
    }
    if (head == "ndcg") return {Kind::ndcg, at == std::string_view::npos ? 10 : k};
    if (head == "map") return {Kind::map, at == std::string_view::npos ? 1000 : k};
    if (head == "recall") return {Kind::recall, at == std::string_view::npos ? 1000 : k};
    if (head == "mrr") return {Kind::mrr, at == std::string_view::npos ? 100 : k};
    throw Error("unknown metric '" + std::string(s) + "' (expected ndcg|map|recall|mrr[@k])");
  }

  double compute(const std::vector<std::string>& ranked, const Judgments& j, int binarize_at) const {
    switch (kind) {
      case Kind::ndcg: return metric::ndcg(ranked, j, k);
      case Kind::map: return metric::average_precision(ranked, j, k, binarize_at);
      case Kind::recall: return metric::recall(ranked, j, k, binarize_at);
      case Kind::mrr: return metric::reciprocal_rank(ranked, j, k, binarize_at);
    }
    return 0.0;
  }
};

inline std::vector<MetricSpec> parse_metric_list(std::string_view csv) {
  std::vector<MetricSpec> out;
  std::size_t b = 0;
  while (b <= csv.size()) {
    auto e = csv.find(',', b);
    if (e == std::string_view::npos) e = csv.size();
    const auto item = csv.substr(b, e - b);
    if (!item.empty()) out.push_back(MetricSpec::parse(item));
    b = e + 1;
  }
  if (out.empty()) throw Error("no metrics requested");
  return out;
}

struct MetricReport {
  std::vector<std::string> metrics;
  std::map<std::string, std::map<std::string, double>> per_query;  // qid -> metric -> value
  std::map<std::string, double> aggregate;                          // metric -> mean
  std::size_t evaluated = 0;                    // queries in qrels
  std::size_t missing_from_run = 0;             // judged but not retrieved (scored 0)
  std::vector<std::string> excluded_unjudged;   // in the run, absent from qrels
};

/// Evaluates every query present in the qrels. Judged queries absent from
/// the run score 0; run queries without judgments are excluded from the
/// aggregate and listed in `excluded_unjudged`.
inline MetricReport evaluate(const RankedRun& run, const QrelsTable& qrels, const std::vector<MetricSpec>& specs,
                             int binarize_at = 1) {
  if (binarize_at < 1) throw Error("binarize_at must be >= 1");
  if (qrels.by_query.empty()) throw Error("qrels contain no judged queries");
  MetricReport rep;
  for (const auto& s : specs) rep.metrics.push_back(s.name());
  for (const auto& [qid, judged] : qrels.by_query) {
    std::vector<std::string> ranked;
    if (auto it = run.by_query.find(qid); it != run.by_query.end()) {
      ranked = doc_ids(it->second);
    } else {
      ++rep.missing_from_run;
    }
    auto& row = rep.per_query[qid];
    for (const auto& s : specs) row[s.name()] = s.compute(ranked, judged, binarize_at);
  }
  for (const auto& [qid, docs] : run.by_query) {
    if (!qrels.by_query.contains(qid)) rep.excluded_unjudged.push_back(qid);
  }
  rep.evaluated = rep.per_query.size();
  for (const auto& name : rep.metrics) {
    double sum = 0.0;
    for (const auto& [qid, row] : rep.per_query) sum += row.at(name);
    rep.aggregate[name] = sum / static_cast<double>(rep.evaluated);
  }
  return rep;
}

inline MetricReport ndcg_at_k(const RankedRun& run, const QrelsTable& qrels, std::size_t k) {
  if (k == 0) throw Error("ndcg cutoff must be >= 1");
  return evaluate(run, qrels, {{MetricSpec::Kind::ndcg, k}});
}

inline MetricReport average_precision(const RankedRun& run, const QrelsTable& qrels, std::size_t depth = 1000,
                                      int binarize_at = 1) {
  return evaluate(run, qrels, {{MetricSpec::Kind::map, depth}}, binarize_at);
}

inline MetricReport recall_at_k(const RankedRun& run, const QrelsTable& qrels, std::size_t k, int binarize_at = 1) {
  return evaluate(run, qrels, {{MetricSpec::Kind::recall, k}}, binarize_at);
}

inline MetricReport mrr_at_k(const RankedRun& run, const QrelsTable& qrels, std::size_t k = 100, int binarize_at = 1) {
  return evaluate(run, qrels, {{MetricSpec::Kind::mrr, k}}, binarize_at);
}

/// TSV rows "metric<TAB>query_id<TAB>value", per-query first, then "all".
inline void write_report_tsv(std::ostream& out, const MetricReport& rep) {
  for (const auto& name : rep.metrics) {
    for (const auto& [qid, row] : rep.per_query) out << fmt::format("{}\t{}\t{:.6f}\n", name, qid, row.at(name));
    out << fmt::format("{}\tall\t{:.6f}\n", name, rep.aggregate.at(name));
  }
}

inline nlohmann::json report_to_json(const MetricReport& rep) {
  nlohmann::json j;
  j["metrics"] = rep.metrics;
  j["aggregate"] = rep.aggregate;
  j["per_query"] = rep.per_query;
  j["counts"] = {{"evaluated", rep.evaluated},
                 {"missing_from_run", rep.missing_from_run},
                 {"excluded_unjudged", rep.excluded_unjudged.size()}};
  j["excluded_unjudged"] = rep.excluded_unjudged;
  return j;
}

}  // namespace hyde
