// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hyde/cache.hpp"
#include "hyde/config.hpp"
#include "hyde/eval.hpp"
#include "hyde/index.hpp"
#include "hyde/ingest.hpp"
#include "hyde/pipeline.hpp"
#include "hyde/store.hpp"

namespace hyde::cli {

namespace fs = std::filesystem;

inline const fs::path& require(const std::optional<fs::path>& p, std::string_view flag) {
  if (!p) throw Error("missing required " + std::string(flag));
  return *p;
}

inline const fs::path& require_file(const std::optional<fs::path>& p, std::string_view flag) {
  const auto& path = require(p, flag);
  if (!fs::is_regular_file(path)) throw Error(std::string(flag) + " " + path.string() + " does not exist");
  return path;
}

inline std::string tag_safe(std::string s) {
  for (auto& c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) c = '_';
  }
  return s;
}

/// Everything needed to reconstruct how a run was produced.
inline std::string run_tag(const ExperimentConfig& cfg, const std::string& instruction_name) {
  if (cfg.mode == SearchMode::baseline) return tag_safe("baseline.enc=" + cfg.encoder.label());
  return tag_safe("hyde.n=" + std::to_string(cfg.generator.n_samples) + ".iq=" + (cfg.include_query ? "1" : "0") +
                  ".gen=" + cfg.generator.model_id() + ".enc=" + cfg.encoder.label() + ".inst=" + instruction_name);
}

inline EmbedCorpusStats cmd_embed(const ExperimentConfig& cfg) {
  const auto& corpus = require_file(cfg.paths.corpus, "--corpus");
  const auto& store_path = require(cfg.paths.store, "--store");
  const auto stats = embed_corpus(corpus, cfg.encoder, store_path, cfg.field);
  spdlog::info("embed: {} embedded, {} already present -> {}", stats.embedded, stats.skipped, store_path.string());
  return stats;
}

inline void cmd_index(const ExperimentConfig& cfg) {
  const auto& store_path = require_file(cfg.paths.store, "--store");
  const auto& index_path = require(cfg.paths.index, "--index");
  const auto idx = store::load_as_index(store_path);
  if (!idx.empty() && idx.dim() != cfg.encoder.dim) {
    throw DimensionMismatch(cfg.encoder.dim, idx.dim(), "store " + store_path.string());
  }
  idx.save(index_path);
  spdlog::info("index: {} entries (dim {}) -> {}", idx.size(), idx.dim(), index_path.string());
}

inline void cmd_generate(const ExperimentConfig& cfg) {
  const auto& queries_path = require_file(cfg.paths.queries, "--queries");
  const auto& cache_path = require(cfg.paths.cache, "--cache");
  const auto queries = load_queries(queries_path);
  const auto tpl = cfg.instruction_template();
  const auto generator = make_generator(cfg.generator);
  const auto encoder = make_encoder(cfg.encoder);
  HypothesisCache cache(cache_path);
  const std::size_t before = cache.size();
  HydeSearcher searcher(*generator, cfg.generator, tpl, *encoder, &cache);
  for (const auto& q : queries) searcher.hypotheticals(q);
  spdlog::info("generate: {} queries, {} new cache entries -> {}", queries.size(), cache.size() - before,
               cache_path.string());
}

inline RankedRun cmd_search(const ExperimentConfig& cfg) {
  const auto& index_path = require_file(cfg.paths.index, "--index");
  const auto& queries_path = require_file(cfg.paths.queries, "--queries");
  const auto& run_path = require(cfg.paths.run, "--run");
  const auto queries = load_queries(queries_path);
  const auto index = FlatIndex::load(index_path);
  if (!index.empty() && index.dim() != cfg.encoder.dim) {
    throw DimensionMismatch(index.dim(), cfg.encoder.dim, "encoder vs index " + index_path.string());
  }
  const auto encoder = make_encoder(cfg.encoder);

  RankedRun run;
  if (cfg.mode == SearchMode::baseline) {
    run.tag = run_tag(cfg, "");
    for (const auto& q : queries) run.by_query[q.query_id] = baseline_search(q, *encoder, index, cfg.k);
  } else {
    const auto tpl = cfg.instruction_template();
    const auto generator = make_generator(cfg.generator);
    std::optional<HypothesisCache> cache;
    if (cfg.paths.cache) cache.emplace(*cfg.paths.cache);
    HydeSearcher searcher(*generator, cfg.generator, tpl, *encoder, cache ? &*cache : nullptr);
    run.tag = run_tag(cfg, tpl.name());
    for (const auto& q : queries) run.by_query[q.query_id] = searcher.search(q, index, cfg.k, cfg.include_query);
  }
  write_run(run_path, run);
  spdlog::info("search: {} queries -> {}", queries.size(), run_path.string());
  return run;
}

inline MetricReport cmd_eval(const ExperimentConfig& cfg) {
  const auto& run_path = require_file(cfg.paths.run, "--run");
  const auto& qrels_path = require_file(cfg.paths.qrels, "--qrels");
  const auto& report_path = require(cfg.paths.report, "--report");
  const auto specs = parse_metric_list(cfg.metrics);
  const auto rep = evaluate(parse_run(run_path), parse_qrels(qrels_path), specs, cfg.binarize_at);
  const auto tmp = fs::path(report_path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write report " + tmp.string());
    if (report_path.extension() == ".json") {
      out << report_to_json(rep).dump(2) << '\n';
    } else {
      write_report_tsv(out, rep);
    }
    if (!out.flush()) throw Error("write failed on report " + tmp.string());
  }
  fs::rename(tmp, report_path);
  for (const auto& name : rep.metrics) spdlog::info("eval: {} = {:.4f}", name, rep.aggregate.at(name));
  if (!rep.excluded_unjudged.empty()) {
    spdlog::warn("eval: {} run queries have no judgments and were excluded", rep.excluded_unjudged.size());
  }
  return rep;
}

/// Fills unset artifact paths from --out-dir.
inline ExperimentConfig with_e2e_defaults(ExperimentConfig cfg) {
  if (cfg.paths.out_dir) {
    const auto& d = *cfg.paths.out_dir;
    fs::create_directories(d);
    if (!cfg.paths.store) cfg.paths.store = d / "corpus.store";
    if (!cfg.paths.index) cfg.paths.index = d / "corpus.hydx";
    if (!cfg.paths.cache && cfg.mode == SearchMode::hyde) cfg.paths.cache = d / "hypotheticals.jsonl";
    if (!cfg.paths.run) cfg.paths.run = d / "run.trec";
    if (!cfg.paths.report) cfg.paths.report = d / "report.tsv";
  }
  return cfg;
}

/// Runs a labeled stage, re-throwing failures as StageError.
template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline void cmd_e2e(const ExperimentConfig& in) {
  const auto cfg = with_e2e_defaults(in);
  require_file(cfg.paths.corpus, "--corpus");
  require_file(cfg.paths.queries, "--queries");
  require(cfg.paths.store, "--store (or --out-dir)");
  require(cfg.paths.index, "--index (or --out-dir)");
  require(cfg.paths.run, "--run (or --out-dir)");
  if (cfg.paths.qrels) require_file(cfg.paths.qrels, "--qrels");
  if (cfg.mode == SearchMode::hyde) cfg.instruction_template();

  stage("embed", [&] { return cmd_embed(cfg); });
  stage("index", [&] { cmd_index(cfg); return 0; });
  if (cfg.mode == SearchMode::hyde && cfg.paths.cache) stage("generate", [&] { cmd_generate(cfg); return 0; });
  stage("search", [&] { return cmd_search(cfg); });
  if (cfg.paths.qrels) stage("eval", [&] { return cmd_eval(cfg); });
}

inline void init_logging() {
  if (!spdlog::get("hyde")) {
    auto logger = spdlog::stderr_color_mt("hyde");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
  }
}

/// Entry point shared by the `hyde` executable and the tests.
inline int run_cli(int argc, const char* const* argv) {
  init_logging();
  CLI::App app{"HyDE dense retrieval: embed, index, generate, search, eval, e2e"};
  app.require_subcommand(1);

  std::string config_path;
  std::string log_level = "info";
  app.add_option("--config", config_path, "TOML-like config file; flags override its keys");
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  const auto& all = settings();
  std::vector<std::string> values(all.size());
  std::vector<CLI::Option*> opts(all.size(), nullptr);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::string flag(all[i].flag);
    const std::string help(all[i].help);
    if (all[i].is_bool) {
      opts[i] = app.add_option(flag, values[i], help + " (bare flag = true)")->expected(0, 1);
    } else {
      opts[i] = app.add_option(flag, values[i], help);
    }
  }

  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs = {
      {"embed", "embed a JSONL corpus into an embedding store"},
      {"index", "build a flat MIPS index from an embedding store"},
      {"generate", "generate (and cache) hypothetical documents for queries"},
      {"search", "retrieve top-k for each query (baseline or hyde) into a TREC run"},
      {"eval", "score a run against qrels"},
      {"e2e", "run embed, index, generate, search and eval in sequence"},
  };
  std::vector<CLI::App*> sub_apps;
  for (const auto& s : subs) sub_apps.push_back(app.add_subcommand(s.name, s.help)->fallthrough());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  spdlog::set_level(spdlog::level::from_str(log_level));

  std::string active = "config";
  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) apply_config(cfg, parse_config(fs::path(config_path)));
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (opts[i]->count() == 0) continue;
      std::string v = values[i];
      if (all[i].is_bool && v.empty()) v = "true";
      all[i].apply(cfg, std::string(all[i].key), v);
    }
    cfg.validate();

    for (auto* sub : sub_apps) {
      if (!sub->parsed()) continue;
      active = sub->get_name();
      if (active == "embed") cmd_embed(cfg);
      else if (active == "index") cmd_index(cfg);
      else if (active == "generate") cmd_generate(cfg);
      else if (active == "search") cmd_search(cfg);
      else if (active == "eval") cmd_eval(cfg);
      else if (active == "e2e") cmd_e2e(cfg);
    }
  } catch (const StageError& e) {
    std::cerr << "hyde " << active << ": error in stage " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "hyde " << active << ": error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace hyde::cli
