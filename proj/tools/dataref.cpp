// dataref: command-line front end for harvesting, dictionary building,
// detection, ranking, review sessions, evaluation and the HTTP service.
//
// Exit codes: 0 success, 1 error, 2 usage, 3 partial failure (some papers
// failed, or a harvest was interrupted and can be resumed).

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dataref/detect.hpp"
#include "dataref/dictionary.hpp"
#include "dataref/eval.hpp"
#include "dataref/oai.hpp"
#include "dataref/pipeline.hpp"
#include "dataref/rank.hpp"
#include "dataref/record.hpp"
#include "dataref/review.hpp"
#include "dataref/service.hpp"
#include "dataref/session_store.hpp"
#include "dataref/title_patterns.hpp"

namespace fs = std::filesystem;
using namespace dataref;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPartial = 3;

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

/// Flag value if given, else the config value, else an error.
fs::path pick(const std::string& flag, const fs::path& from_config, const char* name) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  throw ConfigError(std::string("missing --") + name);
}

std::vector<DatasetRecord> load_matchable(const fs::path& path, bool include_all_types) {
  const auto loaded = load_records(path.string());
  for (const auto& w : loaded.warnings) spdlog::warn("records: {}", w);
  return matchable_records(loaded.records, include_all_types);
}

/// Top-k record ids per (paper, mention) from ranked lists.
std::vector<SystemMatch> top_k_matches(const std::vector<RankedList>& ranked, std::size_t k) {
  std::vector<SystemMatch> out;
  for (const auto& list : ranked) {
    SystemMatch m{list.paper_id, list.mention_id, {}};
    for (std::size_t i = 0; i < list.candidates.size() && i < k; ++i) {
      m.suggestions.insert(list.candidates[i].record_id);
    }
    out.push_back(std::move(m));
  }
  return out;
}

/// The expert's decided record per mention, read from per-reference or
/// per-feature sessions.
std::vector<SystemMatch> decided_matches(const fs::path& sessions_dir) {
  std::map<std::pair<std::string, std::string>, std::set<std::string>> chosen;
  SessionStore store(sessions_dir);
  for (const auto& session : store.load_all()) {
    for (const auto& item : session.items) {
      const MatchDecision* d = item.decision();
      for (const auto& m : item.mentions) {
        auto& slot = chosen[{session.paper_id, m.mention_id}];
        if (d && d->choice.kind == Choice::Kind::record) slot.insert(d->choice.record_id);
      }
    }
  }
  std::vector<SystemMatch> out;
  for (auto& [key, ids] : chosen) out.push_back({key.first, key.second, std::move(ids)});
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Find references to registry datasets in research papers"};
  app.require_subcommand(1);
  std::string config_path;
  std::string log_level = "info";
  app.add_option("--config", config_path, "JSON config file (default: $DATAREF_CONFIG)");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  // harvest
  auto* harvest = app.add_subcommand("harvest", "Harvest dataset records over OAI-PMH");
  std::string h_endpoint, h_set, h_from, h_out, h_resume;
  harvest->add_option("--endpoint", h_endpoint, "OAI-PMH base URL")->required();
  harvest->add_option("--set", h_set, "setSpec");
  harvest->add_option("--from", h_from, "from date (YYYY-MM-DD)");
  harvest->add_option("--out", h_out, "record store (JSONL)")->required();
  harvest->add_option("--resume", h_resume, "resumption token of an interrupted harvest (appends)");

  // analyze-titles
  auto* analyze = app.add_subcommand("analyze-titles", "Count naming patterns in registry titles");
  std::string a_records, a_abbrevs, a_phrases;
  analyze->add_option("--records", a_records, "record store");
  analyze->add_option("--abbrevs", a_abbrevs, "dictionary file with the abbreviations")->required();
  analyze->add_option("--phrases", a_phrases, "dictionary file with the phrases")->required();

  // build-dict
  auto* build = app.add_subcommand("build-dict", "Build the abbreviation and phrase dictionary");
  std::string b_records, b_wordlists, b_seeds, b_blacklist, b_out;
  bool b_all_types = false;
  build->add_option("--records", b_records, "record store");
  build->add_option("--wordlists", b_wordlists, "directory with english/german/countries/stopwords");
  build->add_option("--seeds", b_seeds, "seed term list");
  build->add_option("--blacklist", b_blacklist, "blacklisted surfaces");
  build->add_option("--out", b_out, "dictionary file");
  build->add_flag("--include-all-types", b_all_types, "use records of every resource type");

  // detect
  auto* detect = app.add_subcommand("detect", "Find dictionary features in papers");
  std::string d_paper, d_paper_dir, d_dict, d_out, d_blacklist;
  auto* d_paper_opt = detect->add_option("--paper", d_paper, "paper text file");
  auto* d_dir_opt = detect->add_option("--paper-dir", d_paper_dir, "directory of *.txt papers");
  d_paper_opt->excludes(d_dir_opt);
  detect->add_option("--dict", d_dict, "dictionary file");
  detect->add_option("--blacklist", d_blacklist, "blacklisted surfaces");
  detect->add_option("--out", d_out, "mentions file (JSONL)")->required();

  // rank
  auto* rank = app.add_subcommand("rank", "Rank registry records for each mention");
  std::string r_mentions, r_records, r_out;
  std::optional<double> r_threshold;
  bool r_all_types = false;
  rank->add_option("--mentions", r_mentions, "mentions file")->required();
  rank->add_option("--records", r_records, "record store");
  rank->add_option("--threshold", r_threshold, "minimum cosine score")->check(CLI::Range(0.0, 1.0));
  rank->add_option("--out", r_out, "ranked file (JSONL)")->required();
  rank->add_flag("--include-all-types", r_all_types, "match records of every resource type");

  // review
  auto* review = app.add_subcommand("review", "Create review sessions from ranked lists");
  std::string v_mentions, v_ranked, v_records, v_sessions;
  std::vector<std::string> v_workflows;
  review->add_option("--mentions", v_mentions, "mentions file")->required();
  review->add_option("--ranked", v_ranked, "ranked file")->required();
  review->add_option("--records", v_records, "record store (for titles)");
  review->add_option("--workflow", v_workflows, "per_reference and/or per_feature")
      ->check(CLI::IsMember({"per_reference", "per_feature"}));
  review->add_option("--sessions", v_sessions, "session directory");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Precision, recall and F-measure against a gold standard");
  std::string e_mentions, e_ranked, e_gold, e_phase = "both", e_report, e_suggestions = "topk", e_sessions;
  std::size_t e_top_k = kReferenceCap;
  bool e_strict = false;
  evaluate->add_option("--mentions", e_mentions, "mentions file")->required();
  evaluate->add_option("--ranked", e_ranked, "ranked file");
  evaluate->add_option("--gold", e_gold, "gold standard file")->required();
  evaluate->add_option("--phase", e_phase, "detection, matching or both")
      ->check(CLI::IsMember({"detection", "matching", "both"}));
  evaluate->add_option("--report", e_report, "write the JSON report here");
  evaluate->add_flag("--offset-strict", e_strict, "align detections by exact span");
  evaluate->add_option("--suggestions", e_suggestions, "topk (ranked lists) or decision (sessions)")
      ->check(CLI::IsMember({"topk", "decision"}));
  evaluate->add_option("--top-k", e_top_k, "suggestions per mention in topk mode")->check(CLI::PositiveNumber);
  evaluate->add_option("--sessions", e_sessions, "session directory for decision mode");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve the review HTTP API");
  std::string s_host, s_sessions, s_blacklist, s_static;
  std::optional<int> s_port;
  serve_cmd->add_option("--host", s_host, "listen address");
  serve_cmd->add_option("--port", s_port, "listen port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--sessions", s_sessions, "session directory");
  serve_cmd->add_option("--blacklist", s_blacklist, "blacklist file");
  serve_cmd->add_option("--static", s_static, "directory of static client assets");

  // export
  auto* export_cmd = app.add_subcommand("export", "Write the links of a completed session");
  std::string x_session, x_sessions, x_out;
  export_cmd->add_option("--session", x_session, "session id")->required();
  export_cmd->add_option("--sessions", x_sessions, "session directory");
  export_cmd->add_option("--out", x_out, "links file (default: standard output)");

  // run
  auto* run = app.add_subcommand("run", "Detect, rank and create sessions for a batch of papers");
  std::string p_paper_dir;
  std::vector<std::string> p_papers;
  bool p_build_dict = false;
  run->add_option("--paper-dir", p_paper_dir, "directory of *.txt papers");
  run->add_option("--paper", p_papers, "paper text file (repeatable)");
  run->add_flag("--build-dict", p_build_dict, "build the dictionary from the records first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("dataref"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    const PipelineConfig config =
        resolve_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));

    if (harvest->parsed()) {
      oai::HarvestOptions options;
      if (!h_set.empty()) options.set_spec = h_set;
      if (!h_from.empty()) options.from_date = h_from;
      if (!h_resume.empty()) options.resumption_token = h_resume;
      std::ofstream out(h_out, std::ios::binary | (h_resume.empty() ? std::ios::trunc : std::ios::app));
      if (!out) throw IoError("cannot write " + h_out);
      try {
        const auto summary = oai::harvest(oai::http_fetch(h_endpoint), options,
                                          [&](const DatasetRecord& r) { write_record(out, r); });
        spdlog::info("harvested {} records over {} pages ({} skipped, {} deleted)", summary.records,
                     summary.pages, summary.skipped, summary.deleted);
      } catch (const oai::HarvestError& e) {
        out.flush();
        spdlog::error("{}", e.what());
        if (e.resumption_token) {
          std::cerr << "resume with: --resume '" << *e.resumption_token << "'\n";
        }
        return kExitPartial;
      }
      return 0;
    }

    if (analyze->parsed()) {
      const auto records = load_matchable(pick(a_records, config.records, "records"), true);
      const auto abbrevs = entries_of_kind(read_dictionary(fs::path(a_abbrevs)), EntryKind::abbreviation);
      const auto phrases = entries_of_kind(read_dictionary(fs::path(a_phrases)), EntryKind::phrase);
      const PatternStats s = analyze_title_patterns(records, abbrevs, phrases);
      nlohmann::ordered_json j{{"total_titles", s.total_titles},
                               {"with_abbreviation", s.with_abbreviation},
                               {"with_phrase", s.with_phrase},
                               {"with_both", s.with_both},
                               {"with_filename", s.with_filename}};
      std::cout << j.dump(2) << '\n';
      return 0;
    }

    if (build->parsed()) {
      PipelineConfig c = config;
      c.records = pick(b_records, config.records, "records");
      c.wordlists = pick(b_wordlists, config.wordlists, "wordlists");
      c.seeds = pick(b_seeds, config.seeds, "seeds");
      if (!b_blacklist.empty()) c.blacklist = b_blacklist;
      c.dictionary = pick(b_out, config.dictionary, "out");
      c.include_all_types = c.include_all_types || b_all_types;
      const auto entries = build_dictionary_file(c);
      spdlog::info("wrote {} dictionary entries to {}", entries.size(), c.dictionary.string());
      return 0;
    }

    if (detect->parsed()) {
      std::vector<fs::path> papers;
      if (!d_paper.empty()) {
        papers.push_back(d_paper);
      } else if (!d_paper_dir.empty()) {
        papers = paper_files(d_paper_dir);
      } else {
        throw ConfigError("give --paper or --paper-dir");
      }
      std::optional<fs::path> blacklist = config.blacklist;
      if (!d_blacklist.empty()) blacklist = fs::path(d_blacklist);
      const Detector detector(load_active_dictionary(pick(d_dict, config.dictionary, "dict"), blacklist));
      std::vector<ReferenceMention> all;
      int failures = 0;
      for (const auto& path : papers) {
        try {
          auto mentions = detector.detect(read_paper(path));
          all.insert(all.end(), mentions.begin(), mentions.end());
        } catch (const std::exception& e) {
          spdlog::error("paper {}: {}", path.string(), e.what());
          ++failures;
        }
      }
      write_mentions(fs::path(d_out), std::move(all));
      return failures ? kExitPartial : 0;
    }

    if (rank->parsed()) {
      const RecordIndex index(load_matchable(pick(r_records, config.records, "records"),
                                             config.include_all_types || r_all_types));
      const auto mentions = read_mentions(fs::path(r_mentions));
      const auto ranked = rank_mentions(mentions, index, r_threshold.value_or(config.threshold));
      write_ranked(fs::path(r_out), ranked);
      return 0;
    }

    if (review->parsed()) {
      const RecordIndex index(load_matchable(pick(v_records, config.records, "records"), true));
      const auto mentions = read_mentions(fs::path(v_mentions));
      const auto ranked = read_ranked(fs::path(v_ranked));
      std::vector<Workflow> workflows;
      for (const auto& w : v_workflows) workflows.push_back(*parse_workflow(w));
      if (workflows.empty()) workflows = config.workflows;
      SessionStore store(v_sessions.empty() ? config.sessions_dir() : fs::path(v_sessions));
      std::map<std::string, std::vector<ReferenceMention>> by_paper;
      for (const auto& m : mentions) by_paper[m.paper_id].push_back(m);
      const TitleLookup titles = title_lookup(index);
      for (const auto& [paper, list] : by_paper) {
        for (const Workflow w : workflows) {
          const auto session =
              make_session(paper, w, list, ranked, titles, config.reference_cap, config.feature_cap);
          store.create(session);
          std::cout << session.session_id << '\t' << session.items.size() << " items\n";
        }
      }
      return 0;
    }

    if (evaluate->parsed()) {
      const auto mentions = read_mentions(fs::path(e_mentions));
      const GoldStandard gold = read_gold(fs::path(e_gold));
      const DetectionOptions options{e_strict};
      const auto alignment = align_detection(mentions, gold, options);
      std::vector<EvalReport> reports;
      if (e_phase != "matching") reports.push_back(evaluate_detection(mentions, gold, options));
      if (e_phase != "detection") {
        std::vector<SystemMatch> matches;
        if (e_suggestions == "topk") {
          if (e_ranked.empty()) throw ConfigError("matching phase needs --ranked");
          matches = top_k_matches(read_ranked(fs::path(e_ranked)), e_top_k);
        } else {
          matches = decided_matches(e_sessions.empty() ? config.sessions_dir() : fs::path(e_sessions));
        }
        std::set<std::pair<std::string, std::string>> tps;
        for (const auto& p : alignment.true_positives) tps.insert({p.paper_id, p.mention_id});
        std::erase_if(matches, [&](const SystemMatch& m) { return !tps.contains({m.paper_id, m.mention_id}); });
        reports.push_back(evaluate_matching(matches, gold, alignment));
      }
      std::cout << render_reports(reports);
      if (!e_report.empty()) {
        auto j = nlohmann::ordered_json::array();
        for (const auto& r : reports) j.push_back(to_json(r));
        std::ofstream out(e_report, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + e_report);
        out << j.dump(2) << '\n';
      }
      return 0;
    }

    if (serve_cmd->parsed()) {
      ServiceOptions options = ServiceOptions::from(config);
      if (!s_sessions.empty()) options.sessions_dir = s_sessions;
      if (!s_blacklist.empty()) options.blacklist = s_blacklist;
      if (!s_static.empty()) options.static_dir = fs::path(s_static);
      ReviewService service(options);
      httplib::Server server;
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      serve(service, server, s_host.empty() ? config.host : s_host, s_port.value_or(config.port));
      return 0;
    }

    if (export_cmd->parsed()) {
      SessionStore store(x_sessions.empty() ? config.sessions_dir() : fs::path(x_sessions));
      const std::string links = render_links(export_links(store.load(x_session)));
      if (x_out.empty()) {
        std::cout << links;
      } else {
        detail::write_file_durably(x_out, links);
      }
      return 0;
    }

    if (run->parsed()) {
      std::vector<fs::path> papers(p_papers.begin(), p_papers.end());
      if (!p_paper_dir.empty()) {
        const auto found = paper_files(p_paper_dir);
        papers.insert(papers.end(), found.begin(), found.end());
      }
      PipelineConfig c = config;
      if (p_build_dict) {
        const auto entries = build_dictionary_file(c);
        spdlog::info("wrote {} dictionary entries to {}", entries.size(), c.dictionary.string());
      }
      const PipelineResult result = run_pipeline(c, papers);
      spdlog::info("{} papers, {} mentions, {} sessions ({} empty), {} failures", result.papers,
                   result.mentions, result.sessions, result.empty_sessions, result.failures.size());
      return result.ok() ? 0 : kExitPartial;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
  return kExitUsage;
}
