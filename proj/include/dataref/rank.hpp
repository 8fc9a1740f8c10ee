#pragma once

// Ranking of registry titles against a mention's query: cosine similarity of
// tf-idf vectors, a cut-off threshold, then the year-matching re-rank.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "dataref/detect.hpp"
#include "dataref/error.hpp"
#include "dataref/match.hpp"
#include "dataref/record.hpp"
#include "dataref/tfidf.hpp"
#include "dataref/unicode.hpp"

namespace dataref {

inline constexpr double kDefaultThreshold = 0.1;

struct RankedCandidate {
  std::string record_id;
  double base_score = 0.0;
  bool year_boosted = false;
  std::size_t final_rank = 0;

  friend bool operator==(const RankedCandidate&, const RankedCandidate&) = default;
};

/// Candidate during ranking: score plus the years its record stands for.
struct ScoredCandidate {
  std::string record_id;
  std::string title;
  double base_score = 0.0;
  std::vector<int> years;
  bool year_boosted = false;
};

/// Immutable registry view shared by all rankings.
class RecordIndex {
 public:
  explicit RecordIndex(std::vector<DatasetRecord> records) : records_(std::move(records)) {
    folded_.reserve(records_.size());
    years_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
      folded_.push_back(unicode::fold(records_[i].title));
      years_.push_back(record_years(records_[i]));
      by_id_.emplace(records_[i].id, i);
    }
  }

  const std::vector<DatasetRecord>& records() const { return records_; }
  const std::vector<int>& years(std::size_t i) const { return years_[i]; }

  const DatasetRecord* find(const std::string& id) const {
    const auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &records_[it->second];
  }

  /// Indices of records whose title contains the feature under the
  /// detection matching rule.
  std::vector<std::size_t> pool(const std::string& feature, EntryKind kind) const {
    const SurfacePattern pattern(feature, match_mode_for(kind));
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (contains_surface(records_[i].title, folded_[i], pattern)) out.push_back(i);
    }
    return out;
  }

 private:
  std::vector<DatasetRecord> records_;
  std::vector<std::string> folded_;
  std::vector<std::vector<int>> years_;
  std::map<std::string, std::size_t> by_id_;
};

inline bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.base_score != b.base_score) return a.base_score > b.base_score;
  return a.record_id < b.record_id;
}

/// Marks candidates sharing a year with the query and moves them, in their
/// current order, ahead of the others (a stable two-block partition).
inline std::vector<ScoredCandidate> year_adjust(std::vector<ScoredCandidate> candidates,
                                                std::span<const int> query_years) {
  if (query_years.empty()) return candidates;
  const std::set<int> wanted(query_years.begin(), query_years.end());
  for (auto& c : candidates) {
    c.year_boosted = std::any_of(c.years.begin(), c.years.end(),
                                 [&](int y) { return wanted.contains(y); });
  }
  std::stable_partition(candidates.begin(), candidates.end(),
                        [](const ScoredCandidate& c) { return c.year_boosted; });
  return candidates;
}

/// Scores each pool record, drops those under `threshold`, orders by score
/// (ties by id), applies the year re-rank and numbers ranks from 1.
inline std::vector<RankedCandidate> rank_candidates(const ReferenceMention& mention,
                                                    std::span<const DatasetRecord> pool,
                                                    const TfidfModel& model, double threshold) {
  const TermVector query = vectorize(mention.query, model);
  std::vector<ScoredCandidate> scored;
  for (const auto& record : pool) {
    const double score = cosine_similarity(query, vectorize(record.title, model));
    if (score < threshold) continue;
    scored.push_back(ScoredCandidate{record.id, record.title, score, record_years(record), false});
  }
  std::sort(scored.begin(), scored.end(), ranks_before);
  scored = year_adjust(std::move(scored), mention.years_in_context);

  std::vector<RankedCandidate> ranked;
  ranked.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    ranked.push_back(RankedCandidate{scored[i].record_id, scored[i].base_score,
                                     scored[i].year_boosted, i + 1});
  }
  return ranked;
}

struct RankedList {
  std::string paper_id;
  std::string mention_id;
  std::string feature;
  EntryKind kind = EntryKind::abbreviation;
  std::vector<RankedCandidate> candidates;

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// Corpus for one (paper, feature) pool: the pool's titles followed by the
/// paper's distinct mention segments.
inline std::vector<Document> ranking_corpus(std::span<const DatasetRecord> pool,
                                            std::span<const ReferenceMention> paper_mentions) {
  std::vector<Document> docs;
  for (const auto& record : pool) docs.push_back({record.id, record.title});
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& m : paper_mentions) {
    if (seen.insert({m.segment_start, m.segment_end}).second) {
      docs.push_back({m.paper_id + ":" + std::to_string(m.segment_start), m.segment_text});
    }
  }
  return docs;
}

/// Ranks every mention of one paper. The tf-idf model is built per feature
/// from that feature's candidate pool plus the paper's segments.
inline std::vector<RankedList> rank_paper(std::span<const ReferenceMention> paper_mentions,
                                          const RecordIndex& index, double threshold) {
  std::map<std::pair<std::string, EntryKind>, std::vector<const ReferenceMention*>> by_feature;
  for (const auto& m : paper_mentions) by_feature[{m.feature, m.kind}].push_back(&m);

  std::map<std::string, RankedList> by_mention;
  for (const auto& [feature, mentions] : by_feature) {
    std::vector<DatasetRecord> pool;
    for (std::size_t i : index.pool(feature.first, feature.second)) {
      pool.push_back(index.records()[i]);
    }
    const auto corpus = ranking_corpus(pool, paper_mentions);
    const TfidfModel model = corpus.empty() ? TfidfModel{} : build_tfidf(corpus);
    for (const ReferenceMention* m : mentions) {
      RankedList list{m->paper_id, m->mention_id, m->feature, m->kind, {}};
      if (!pool.empty()) list.candidates = rank_candidates(*m, pool, model, threshold);
      by_mention.emplace(m->mention_id, std::move(list));
    }
  }

  std::vector<RankedList> out;
  out.reserve(paper_mentions.size());
  for (const auto& m : paper_mentions) out.push_back(by_mention.at(m.mention_id));
  return out;
}

/// Ranks mentions of any number of papers, paper by paper.
inline std::vector<RankedList> rank_mentions(std::span<const ReferenceMention> mentions,
                                             const RecordIndex& index, double threshold) {
  std::map<std::string, std::vector<ReferenceMention>> by_paper;
  for (const auto& m : mentions) by_paper[m.paper_id].push_back(m);
  std::vector<RankedList> out;
  for (const auto& [paper, list] : by_paper) {
    auto ranked = rank_paper(list, index, threshold);
    out.insert(out.end(), std::make_move_iterator(ranked.begin()),
               std::make_move_iterator(ranked.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ranked file: one JSON object per mention with the ordered candidates and
// their base scores at full double precision.

inline nlohmann::ordered_json to_json(const RankedList& list) {
  nlohmann::ordered_json j;
  j["paper_id"] = list.paper_id;
  j["mention_id"] = list.mention_id;
  j["feature"] = list.feature;
  j["kind"] = std::string(to_string(list.kind));
  auto candidates = nlohmann::ordered_json::array();
  for (const auto& c : list.candidates) {
    nlohmann::ordered_json cj;
    cj["record_id"] = c.record_id;
    cj["score"] = c.base_score;
    cj["year_boosted"] = c.year_boosted;
    candidates.push_back(std::move(cj));
  }
  j["candidates"] = std::move(candidates);
  return j;
}

inline RankedList ranked_list_from_json(const nlohmann::json& j) {
  try {
    RankedList list;
    list.paper_id = j.at("paper_id").get<std::string>();
    list.mention_id = j.at("mention_id").get<std::string>();
    list.feature = j.at("feature").get<std::string>();
    const auto kind = parse_entry_kind(j.value("kind", std::string("abbreviation")));
    if (!kind) throw FormatError("unknown kind");
    list.kind = *kind;
    std::size_t rank = 0;
    for (const auto& cj : j.at("candidates")) {
      list.candidates.push_back(RankedCandidate{cj.at("record_id").get<std::string>(),
                                                cj.at("score").get<double>(),
                                                cj.value("year_boosted", false), ++rank});
    }
    return list;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed ranked list: ") + e.what());
  }
}

inline void write_ranked(std::ostream& out, std::span<const RankedList> lists) {
  for (const auto& list : lists) out << to_json(list).dump() << '\n';
}

inline void write_ranked(const std::filesystem::path& path, std::span<const RankedList> lists) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write ranked output: " + path.string());
  write_ranked(out, lists);
}

inline std::vector<RankedList> read_ranked(std::istream& in) {
  std::vector<RankedList> lists;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (unicode::trim(line).empty()) continue;
    try {
      lists.push_back(ranked_list_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw FormatError("ranked line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return lists;
}

inline std::vector<RankedList> read_ranked(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read ranked output: " + path.string());
  return read_ranked(in);
}

}  // namespace dataref
