#pragma once

// Expert disambiguation: review items per reference (top 5) or per feature
// (top 6 aggregated), decisions with full history, and export of links.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "dataref/detect.hpp"
#include "dataref/error.hpp"
#include "dataref/rank.hpp"

namespace dataref {

inline constexpr std::size_t kReferenceCap = 5;
inline constexpr std::size_t kFeatureCap = 6;
inline constexpr std::string_view kNoMatch = "NO_MATCH";
inline constexpr std::string_view kSkipped = "SKIPPED";

enum class Workflow { per_reference, per_feature };

inline std::string_view to_string(Workflow w) {
  return w == Workflow::per_reference ? "per_reference" : "per_feature";
}

inline std::optional<Workflow> parse_workflow(std::string_view s) {
  if (s == "per_reference") return Workflow::per_reference;
  if (s == "per_feature") return Workflow::per_feature;
  return std::nullopt;
}

/// Outcome chosen for an item: a record, "no registry match", or skipped.
struct Choice {
  enum class Kind { record, no_match, skipped };
  Kind kind = Kind::skipped;
  std::string record_id;

  static Choice record(std::string id) { return {Kind::record, std::move(id)}; }
  static Choice no_match() { return {Kind::no_match, {}}; }
  static Choice skipped() { return {Kind::skipped, {}}; }

  /// "NO_MATCH", "SKIPPED", or anything else as a record id.
  static Choice parse(std::string_view s) {
    if (s == kNoMatch) return no_match();
    if (s == kSkipped) return skipped();
    return record(std::string(s));
  }
  std::string str() const {
    switch (kind) {
      case Kind::record: return record_id;
      case Kind::no_match: return std::string(kNoMatch);
      case Kind::skipped: return std::string(kSkipped);
    }
    return {};
  }

  friend bool operator==(const Choice&, const Choice&) = default;
};

struct MatchDecision {
  std::string paper_id;
  std::string key;
  Choice choice;
  std::string decided_by;
  std::string timestamp;  // ISO 8601, UTC
  bool override_id = false;  // record id entered by the expert, not a listed candidate

  friend bool operator==(const MatchDecision&, const MatchDecision&) = default;
};

struct MentionRef {
  std::string mention_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string query;

  friend bool operator==(const MentionRef&, const MentionRef&) = default;
};

struct CandidateView {
  std::string record_id;
  std::string title;
  double score = 0.0;           // base score (best base score per feature)
  std::size_t occurrences = 1;  // lists the record appears in (per feature)

  friend bool operator==(const CandidateView&, const CandidateView&) = default;
};

struct ReviewItem {
  std::string key;  // mention id (per reference) or feature surface (per feature)
  std::string feature;
  EntryKind kind = EntryKind::abbreviation;
  std::vector<MentionRef> mentions;
  std::vector<CandidateView> candidates;
  std::vector<MatchDecision> history;  // oldest first; the last one is active

  const MatchDecision* decision() const { return history.empty() ? nullptr : &history.back(); }
  bool resolved() const { return !history.empty(); }

  friend bool operator==(const ReviewItem&, const ReviewItem&) = default;
};

enum class SessionStatus { open, completed };

struct ReviewSession {
  std::string session_id;
  std::string paper_id;
  Workflow workflow = Workflow::per_reference;
  std::vector<ReviewItem> items;

  SessionStatus status() const {
    return std::all_of(items.begin(), items.end(), [](const ReviewItem& i) { return i.resolved(); })
               ? SessionStatus::completed
               : SessionStatus::open;
  }
  bool empty() const { return items.empty(); }

  ReviewItem* find(std::string_view key) {
    for (auto& item : items) {
      if (item.key == key) return &item;
    }
    return nullptr;
  }
  const ReviewItem* find(std::string_view key) const {
    return const_cast<ReviewSession*>(this)->find(key);
  }

  friend bool operator==(const ReviewSession&, const ReviewSession&) = default;
};

inline std::string session_id_for(std::string_view paper_id, Workflow workflow) {
  return std::string(paper_id) + "." + std::string(to_string(workflow));
}

/// Resolves a record id to its display title; empty when unknown.
using TitleLookup = std::function<std::string(const std::string&)>;

inline TitleLookup title_lookup(const RecordIndex& index) {
  return [&index](const std::string& id) {
    const DatasetRecord* r = index.find(id);
    return r ? r->title : std::string();
  };
}

namespace detail {

inline std::map<std::string, const RankedList*> lists_by_mention(std::span<const RankedList> ranked) {
  std::map<std::string, const RankedList*> out;
  for (const auto& list : ranked) out[list.paper_id + "\n" + list.mention_id] = &list;
  return out;
}

inline MentionRef mention_ref(const ReferenceMention& m) {
  return MentionRef{m.mention_id, m.start, m.end, m.query};
}

}  // namespace detail

/// One item per mention holding the first `cap` candidates of its list.
inline std::vector<ReviewItem> per_reference_items(std::span<const ReferenceMention> mentions,
                                                   std::span<const RankedList> ranked,
                                                   const TitleLookup& titles,
                                                   std::size_t cap = kReferenceCap) {
  const auto lists = detail::lists_by_mention(ranked);
  std::vector<ReviewItem> items;
  items.reserve(mentions.size());
  for (const auto& m : mentions) {
    ReviewItem item{m.mention_id, m.feature, m.kind, {detail::mention_ref(m)}, {}, {}};
    if (auto it = lists.find(m.paper_id + "\n" + m.mention_id); it != lists.end()) {
      const auto& candidates = it->second->candidates;
      for (std::size_t i = 0; i < candidates.size() && i < cap; ++i) {
        item.candidates.push_back(CandidateView{candidates[i].record_id,
                                                titles ? titles(candidates[i].record_id) : "",
                                                candidates[i].base_score, 1});
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

/// One item per feature. Each member mention contributes its top
/// `per_mention_cap` candidates; records are ordered by how many of these
/// lists they appear in (descending), then best base score (descending),
/// then id, and the first `cap` are kept.
inline std::vector<ReviewItem> per_feature_items(
    const std::map<std::string, std::vector<ReferenceMention>>& groups,
    std::span<const RankedList> ranked, const TitleLookup& titles,
    std::size_t cap = kFeatureCap, std::size_t per_mention_cap = kReferenceCap) {
  const auto lists = detail::lists_by_mention(ranked);
  std::vector<ReviewItem> items;
  for (const auto& [feature, mentions] : groups) {
    ReviewItem item;
    item.key = feature;
    item.feature = feature;
    item.kind = mentions.empty() ? EntryKind::abbreviation : mentions.front().kind;
    std::map<std::string, CandidateView> tally;
    for (const auto& m : mentions) {
      item.mentions.push_back(detail::mention_ref(m));
      const auto it = lists.find(m.paper_id + "\n" + m.mention_id);
      if (it == lists.end()) continue;
      const auto& candidates = it->second->candidates;
      for (std::size_t i = 0; i < candidates.size() && i < per_mention_cap; ++i) {
        const auto& c = candidates[i];
        auto [pos, inserted] = tally.try_emplace(c.record_id, CandidateView{c.record_id, "", c.base_score, 0});
        pos->second.occurrences += 1;
        pos->second.score = std::max(pos->second.score, c.base_score);
      }
    }
    std::vector<CandidateView> ordered;
    for (auto& [id, view] : tally) ordered.push_back(std::move(view));
    std::sort(ordered.begin(), ordered.end(), [](const CandidateView& a, const CandidateView& b) {
      if (a.occurrences != b.occurrences) return a.occurrences > b.occurrences;
      if (a.score != b.score) return a.score > b.score;
      return a.record_id < b.record_id;
    });
    if (ordered.size() > cap) ordered.resize(cap);
    for (auto& view : ordered) view.title = titles ? titles(view.record_id) : "";
    item.candidates = std::move(ordered);
    items.push_back(std::move(item));
  }
  return items;
}

/// Builds the session of one paper for a workflow.
inline ReviewSession make_session(std::string_view paper_id, Workflow workflow,
                                  std::span<const ReferenceMention> mentions,
                                  std::span<const RankedList> ranked, const TitleLookup& titles,
                                  std::size_t reference_cap = kReferenceCap,
                                  std::size_t feature_cap = kFeatureCap) {
  ReviewSession session;
  session.session_id = session_id_for(paper_id, workflow);
  session.paper_id = std::string(paper_id);
  session.workflow = workflow;
  if (workflow == Workflow::per_reference) {
    session.items = per_reference_items(mentions, ranked, titles, reference_cap);
  } else {
    session.items =
        per_feature_items(group_by_feature(mentions), ranked, titles, feature_cap, reference_cap);
  }
  return session;
}

/// Applies a decision to the session. A later decision on the same key
/// supersedes the earlier one; the earlier one stays in the history.
inline MatchDecision record_decision(ReviewSession& session, std::string_view key, Choice choice,
                                     std::string decided_by, std::string timestamp) {
  ReviewItem* item = session.find(key);
  if (!item) {
    throw NotFoundError("session '" + session.session_id + "' has no item '" + std::string(key) + "'");
  }
  if (choice.kind == Choice::Kind::record && choice.record_id.empty()) {
    throw Error("empty record id");
  }
  MatchDecision decision;
  decision.paper_id = session.paper_id;
  decision.key = std::string(key);
  decision.decided_by = std::move(decided_by);
  decision.timestamp = std::move(timestamp);
  if (choice.kind == Choice::Kind::record) {
    decision.override_id =
        std::none_of(item->candidates.begin(), item->candidates.end(),
                     [&](const CandidateView& c) { return c.record_id == choice.record_id; });
  }
  decision.choice = std::move(choice);
  item->history.push_back(decision);
  return decision;
}

// ---------------------------------------------------------------------------
// Links export

struct LinkRow {
  std::string paper_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string feature;
  std::string record_id;
  std::string doi;

  friend bool operator==(const LinkRow&, const LinkRow&) = default;
};

struct GapRow {
  std::string paper_id;
  std::string key;
  std::string feature;
  std::size_t mentions = 0;

  friend bool operator==(const GapRow&, const GapRow&) = default;
};

struct LinksDocument {
  std::vector<LinkRow> rows;
  std::vector<GapRow> gaps;

  friend bool operator==(const LinksDocument&, const LinksDocument&) = default;
};

inline std::string doi_of(std::string_view record_id) {
  return record_id.substr(0, 3) == "10." ? "https://doi.org/" + std::string(record_id) : std::string();
}

/// Link rows for every decided mention; a per-feature decision fans out to
/// all mentions of the feature. NO_MATCH items go to `gaps`, skipped items
/// to neither. Throws StateError unless every item is resolved.
inline LinksDocument export_links(const ReviewSession& session) {
  if (session.status() != SessionStatus::completed) {
    throw StateError("session '" + session.session_id + "' has undecided items");
  }
  LinksDocument doc;
  for (const auto& item : session.items) {
    const MatchDecision* d = item.decision();
    if (d->choice.kind == Choice::Kind::skipped) continue;
    if (d->choice.kind == Choice::Kind::no_match) {
      doc.gaps.push_back(GapRow{session.paper_id, item.key, item.feature, item.mentions.size()});
      continue;
    }
    for (const auto& m : item.mentions) {
      doc.rows.push_back(LinkRow{session.paper_id, m.start, m.end, item.feature,
                                 d->choice.record_id, doi_of(d->choice.record_id)});
    }
  }
  std::sort(doc.rows.begin(), doc.rows.end(), [](const LinkRow& a, const LinkRow& b) {
    return std::tie(a.paper_id, a.start, a.end, a.feature) <
           std::tie(b.paper_id, b.start, b.end, b.feature);
  });
  return doc;
}

/// Tab-separated table with a header row, then a "# gaps" section.
inline std::string render_links(const LinksDocument& doc) {
  std::ostringstream out;
  out << "paper_id\tstart\tend\tfeature\trecord_id\tdoi\n";
  for (const auto& r : doc.rows) {
    out << r.paper_id << '\t' << r.start << '\t' << r.end << '\t' << r.feature << '\t'
        << r.record_id << '\t' << r.doi << '\n';
  }
  out << "\n# gaps\n";
  out << "paper_id\tkey\tfeature\tmentions\n";
  for (const auto& g : doc.gaps) {
    out << g.paper_id << '\t' << g.key << '\t' << g.feature << '\t' << g.mentions << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// JSON views (event log and HTTP API)

inline nlohmann::ordered_json to_json(const MatchDecision& d) {
  nlohmann::ordered_json j;
  j["paper_id"] = d.paper_id;
  j["key"] = d.key;
  j["choice"] = d.choice.str();
  j["decided_by"] = d.decided_by;
  j["timestamp"] = d.timestamp;
  j["override"] = d.override_id;
  return j;
}

inline MatchDecision decision_from_json(const nlohmann::json& j) {
  MatchDecision d;
  d.paper_id = j.at("paper_id").get<std::string>();
  d.key = j.at("key").get<std::string>();
  d.choice = Choice::parse(j.at("choice").get<std::string>());
  d.decided_by = j.value("decided_by", std::string());
  d.timestamp = j.value("timestamp", std::string());
  d.override_id = j.value("override", false);
  return d;
}

inline nlohmann::ordered_json to_json(const ReviewItem& item, bool with_history = true) {
  nlohmann::ordered_json j;
  j["key"] = item.key;
  j["feature"] = item.feature;
  j["kind"] = std::string(to_string(item.kind));
  auto mentions = nlohmann::ordered_json::array();
  for (const auto& m : item.mentions) {
    mentions.push_back({{"mention_id", m.mention_id}, {"start", m.start}, {"end", m.end},
                        {"query", m.query}});
  }
  j["mentions"] = std::move(mentions);
  auto candidates = nlohmann::ordered_json::array();
  for (const auto& c : item.candidates) {
    candidates.push_back({{"record_id", c.record_id}, {"title", c.title}, {"score", c.score},
                          {"occurrences", c.occurrences}});
  }
  j["candidates"] = std::move(candidates);
  if (with_history) {
    j["decision"] = item.decision() ? to_json(*item.decision()) : nlohmann::ordered_json(nullptr);
    auto history = nlohmann::ordered_json::array();
    for (const auto& d : item.history) history.push_back(to_json(d));
    j["history"] = std::move(history);
  }
  return j;
}

inline ReviewItem item_from_json(const nlohmann::json& j) {
  ReviewItem item;
  item.key = j.at("key").get<std::string>();
  item.feature = j.at("feature").get<std::string>();
  const auto kind = parse_entry_kind(j.at("kind").get<std::string>());
  if (!kind) throw FormatError("unknown item kind");
  item.kind = *kind;
  for (const auto& m : j.at("mentions")) {
    item.mentions.push_back(MentionRef{m.at("mention_id").get<std::string>(),
                                       m.at("start").get<std::size_t>(),
                                       m.at("end").get<std::size_t>(), m.value("query", std::string())});
  }
  for (const auto& c : j.at("candidates")) {
    item.candidates.push_back(CandidateView{c.at("record_id").get<std::string>(),
                                            c.value("title", std::string()),
                                            c.value("score", 0.0), c.value("occurrences", std::size_t{1})});
  }
  return item;
}

inline nlohmann::ordered_json summary_json(const ReviewSession& s) {
  std::size_t decided = 0;
  for (const auto& item : s.items) decided += item.resolved();
  nlohmann::ordered_json j;
  j["session_id"] = s.session_id;
  j["paper_id"] = s.paper_id;
  j["workflow"] = std::string(to_string(s.workflow));
  j["status"] = s.status() == SessionStatus::completed ? "completed" : "open";
  j["empty"] = s.empty();
  j["items"] = s.items.size();
  j["decided"] = decided;
  return j;
}

inline nlohmann::ordered_json to_json(const ReviewSession& s) {
  nlohmann::ordered_json j = summary_json(s);
  auto items = nlohmann::ordered_json::array();
  for (const auto& item : s.items) items.push_back(to_json(item));
  j["items"] = std::move(items);
  return j;
}

inline nlohmann::ordered_json to_json(const LinksDocument& doc) {
  nlohmann::ordered_json j;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : doc.rows) {
    rows.push_back({{"paper_id", r.paper_id}, {"start", r.start}, {"end", r.end},
                    {"feature", r.feature}, {"record_id", r.record_id}, {"doi", r.doi}});
  }
  auto gaps = nlohmann::ordered_json::array();
  for (const auto& g : doc.gaps) {
    gaps.push_back({{"paper_id", g.paper_id}, {"key", g.key}, {"feature", g.feature},
                    {"mentions", g.mentions}});
  }
  j["rows"] = std::move(rows);
  j["gaps"] = std::move(gaps);
  return j;
}

}  // namespace dataref
