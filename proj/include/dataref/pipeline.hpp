#pragma once

// Batch pipeline: detect -> rank -> review sessions for a set of papers, with
// every stage artifact written to the output directory.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dataref/detect.hpp"
#include "dataref/dictionary.hpp"
#include "dataref/error.hpp"
#include "dataref/rank.hpp"
#include "dataref/record.hpp"
#include "dataref/review.hpp"
#include "dataref/session_store.hpp"

namespace dataref {

namespace fs = std::filesystem;

struct PipelineConfig {
  fs::path records;
  fs::path dictionary;
  fs::path wordlists;
  fs::path seeds;
  std::optional<fs::path> blacklist;
  fs::path output_dir = "out";
  double threshold = kDefaultThreshold;
  std::size_t reference_cap = kReferenceCap;
  std::size_t feature_cap = kFeatureCap;
  std::vector<Workflow> workflows{Workflow::per_reference};
  bool include_all_types = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<fs::path> static_dir;
  unsigned jobs = 1;

  fs::path sessions_dir() const { return output_dir / "sessions"; }
  fs::path links_dir() const { return output_dir / "links"; }
  fs::path mentions_file() const { return output_dir / "mentions.jsonl"; }
  fs::path ranked_file() const { return output_dir / "ranked.jsonl"; }
};

inline void validate(const PipelineConfig& config) {
  if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) {
    throw ConfigError("threshold must lie in [0, 1]");
  }
  if (config.reference_cap < 1 || config.feature_cap < 1) {
    throw ConfigError("candidate caps must be at least 1");
  }
  if (config.workflows.empty()) throw ConfigError("at least one workflow must be configured");
  if (config.port < 0 || config.port > 65535) throw ConfigError("port out of range");
  if (config.jobs < 1) throw ConfigError("jobs must be at least 1");
}

/// Reads a JSON config. Relative paths are taken relative to the file.
inline PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const fs::path base = path.parent_path();
  const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  PipelineConfig c;
  try {
    if (j.contains("records")) c.records = resolve(j["records"].get<std::string>());
    if (j.contains("dictionary")) c.dictionary = resolve(j["dictionary"].get<std::string>());
    if (j.contains("wordlists")) c.wordlists = resolve(j["wordlists"].get<std::string>());
    if (j.contains("seeds")) c.seeds = resolve(j["seeds"].get<std::string>());
    if (j.contains("blacklist")) c.blacklist = resolve(j["blacklist"].get<std::string>());
    if (j.contains("output_dir")) c.output_dir = resolve(j["output_dir"].get<std::string>());
    if (j.contains("static_dir")) c.static_dir = resolve(j["static_dir"].get<std::string>());
    c.threshold = j.value("threshold", c.threshold);
    c.reference_cap = j.value("reference_cap", c.reference_cap);
    c.feature_cap = j.value("feature_cap", c.feature_cap);
    c.include_all_types = j.value("include_all_types", c.include_all_types);
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("workflows")) {
      c.workflows.clear();
      for (const auto& w : j["workflows"]) {
        const auto parsed = parse_workflow(w.get<std::string>());
        if (!parsed) throw ConfigError("unknown workflow '" + w.get<std::string>() + "'");
        c.workflows.push_back(*parsed);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  validate(c);
  return c;
}

/// Explicit path wins; otherwise $DATAREF_CONFIG; otherwise defaults.
inline PipelineConfig resolve_config(const std::optional<fs::path>& explicit_path) {
  if (explicit_path) return load_config(*explicit_path);
  if (const char* env = std::getenv("DATAREF_CONFIG"); env && *env) return load_config(env);
  return PipelineConfig{};
}

/// Dictionary with the surfaces of the blacklist file flagged.
inline std::vector<DictionaryEntry> load_active_dictionary(const fs::path& dictionary,
                                                          const std::optional<fs::path>& blacklist) {
  auto entries = read_dictionary(dictionary);
  if (blacklist && fs::exists(*blacklist)) {
    const auto surfaces = read_list_file(*blacklist);
    entries = apply_blacklist(std::move(entries), std::set<std::string>(surfaces.begin(), surfaces.end()));
  }
  return entries;
}

struct PaperFailure {
  std::string paper;
  std::string message;
};

struct PipelineResult {
  std::size_t papers = 0;
  std::size_t mentions = 0;
  std::size_t sessions = 0;
  std::size_t empty_sessions = 0;
  std::vector<PaperFailure> failures;

  bool ok() const { return failures.empty(); }
};

namespace detail {

struct PaperOutcome {
  std::vector<ReferenceMention> mentions;
  std::vector<RankedList> ranked;
  std::optional<std::string> error;
};

}  // namespace detail

/// Runs detect and rank for every paper and creates one review session per
/// configured workflow. A failing paper is reported and left out; the others
/// carry on. Output files contain no timestamps, so identical inputs give
/// identical bytes.
inline PipelineResult run_pipeline(const PipelineConfig& config,
                                   const std::vector<fs::path>& papers) {
  validate(config);
  PipelineResult result;
  fs::create_directories(config.output_dir);
  if (papers.empty()) {
    write_mentions(config.mentions_file(), {});
    write_ranked(config.ranked_file(), std::vector<RankedList>{});
    return result;
  }

  const auto loaded = load_records(config.records.string());
  for (const auto& w : loaded.warnings) spdlog::warn("records: {}", w);
  const RecordIndex index(matchable_records(loaded.records, config.include_all_types));
  const Detector detector(load_active_dictionary(config.dictionary, config.blacklist));

  std::vector<detail::PaperOutcome> outcomes(papers.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < papers.size(); i = next++) {
      try {
        const PaperText paper = read_paper(papers[i]);
        outcomes[i].mentions = detector.detect(paper);
        outcomes[i].ranked = rank_paper(outcomes[i].mentions, index, config.threshold);
      } catch (const std::exception& e) {
        outcomes[i] = detail::PaperOutcome{{}, {}, e.what()};
      }
    }
  };
  const unsigned jobs = std::min<std::size_t>(config.jobs, papers.size());
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(work);
    work();
  }

  SessionStore store(config.sessions_dir());
  const TitleLookup titles = title_lookup(index);
  std::vector<ReferenceMention> all_mentions;
  std::vector<RankedList> all_ranked;
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < papers.size(); ++i) {
    auto& outcome = outcomes[i];
    const std::string paper_id = papers[i].stem().string();
    if (!outcome.error && !seen_ids.insert(paper_id).second) {
      outcome.error = "duplicate paper id '" + paper_id + "'";
    }
    if (!outcome.error) {
      try {
        for (const Workflow w : config.workflows) {
          const ReviewSession session = make_session(paper_id, w, outcome.mentions, outcome.ranked,
                                                     titles, config.reference_cap, config.feature_cap);
          store.create(session);
          ++result.sessions;
          if (session.empty()) ++result.empty_sessions;
        }
      } catch (const std::exception& e) {
        outcome.error = e.what();
      }
    }
    if (outcome.error) {
      spdlog::error("paper {}: {}", papers[i].string(), *outcome.error);
      result.failures.push_back({papers[i].string(), *outcome.error});
      continue;
    }
    ++result.papers;
    result.mentions += outcome.mentions.size();
    all_mentions.insert(all_mentions.end(), outcome.mentions.begin(), outcome.mentions.end());
    all_ranked.insert(all_ranked.end(), outcome.ranked.begin(), outcome.ranked.end());
  }

  write_mentions(config.mentions_file(), std::move(all_mentions));
  write_ranked(config.ranked_file(), all_ranked);
  return result;
}

/// Builds the dictionary from the configured records and word lists and
/// writes it to `config.dictionary`.
inline std::vector<DictionaryEntry> build_dictionary_file(const PipelineConfig& config) {
  const auto loaded = load_records(config.records.string());
  for (const auto& w : loaded.warnings) spdlog::warn("records: {}", w);
  const bool has_blacklist = config.blacklist && fs::exists(*config.blacklist);
  const WordLists lists = load_wordlists(config.wordlists, config.seeds,
                                         has_blacklist ? config.blacklist : std::nullopt);
  const auto records = matchable_records(loaded.records, config.include_all_types);
  auto entries = build_dictionary(titles_of(records), lists);
  if (config.dictionary.has_parent_path()) fs::create_directories(config.dictionary.parent_path());
  write_dictionary(config.dictionary, entries);
  return entries;
}

}  // namespace dataref
