#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "dataref/dictionary.hpp"
#include "dataref/error.hpp"
#include "dataref/match.hpp"
#include "dataref/text.hpp"
#include "dataref/unicode.hpp"
#include "dataref/years.hpp"

namespace dataref {

struct ReferenceMention {
  std::string paper_id;
  std::string mention_id;  // "m<ordinal>", unique within a paper
  std::string feature;     // dictionary surface
  EntryKind kind = EntryKind::abbreviation;
  std::size_t sentence_index = 0;
  std::size_t segment_start = 0;
  std::size_t segment_end = 0;
  std::string segment_text;
  std::size_t start = 0;  // feature occurrence, byte offsets into the paper
  std::size_t end = 0;
  std::string query;
  std::vector<int> years_in_context;

  friend bool operator==(const ReferenceMention&, const ReferenceMention&) = default;
};

inline MatchMode match_mode_for(EntryKind kind) {
  return kind == EntryKind::abbreviation ? MatchMode::case_sensitive : MatchMode::case_insensitive;
}

/// Compiled, read-only view of a dictionary used for detection. Blacklisted
/// entries are left out.
class Detector {
 public:
  explicit Detector(std::span<const DictionaryEntry> dictionary)
      : entries_(active(dictionary)), index_(patterns(entries_)) {}

  const std::vector<DictionaryEntry>& entries() const { return entries_; }

  /// Mentions ordered by (start, end, kind, feature), numbered m1, m2, ...
  std::vector<ReferenceMention> detect(const PaperText& paper) const {
    const std::string& text = paper.text;
    const std::string folded = unicode::fold(text);
    const auto sentences = split_sentences(text);
    const auto hits = index_.scan(text, folded);

    // (sentence, entry) -> occurrences in document order
    std::map<std::pair<std::size_t, std::size_t>, std::vector<Occurrence>> grouped;
    for (const auto& hit : hits) {
      const auto it = std::upper_bound(
          sentences.begin(), sentences.end(), hit.occurrence.begin,
          [](std::size_t pos, const SentenceSpan& s) { return pos < s.start; });
      if (it == sentences.begin()) continue;
      const SentenceSpan& sentence = *std::prev(it);
      if (hit.occurrence.end > sentence.end) continue;
      grouped[{sentence.index, hit.pattern}].push_back(hit.occurrence);
    }

    std::vector<ReferenceMention> mentions;
    for (const auto& [key, occurrences] : grouped) {
      const SentenceSpan& sentence = sentences[key.first];
      const DictionaryEntry& entry = entries_[key.second];
      const std::string_view sentence_text =
          std::string_view(text).substr(sentence.start, sentence.end - sentence.start);
      std::vector<Occurrence> local;
      for (const auto& occ : occurrences) {
        local.push_back({occ.begin - sentence.start, occ.end - sentence.start});
      }
      const auto pieces = partition_at_midpoints(sentence_text, local);
      for (std::size_t i = 0; i < occurrences.size(); ++i) {
        const std::string_view raw = sentence_text.substr(pieces[i].begin, pieces[i].end - pieces[i].begin);
        const std::string_view segment = unicode::trim(raw);
        ReferenceMention m;
        m.paper_id = paper.paper_id;
        m.feature = entry.surface;
        m.kind = entry.kind;
        m.sentence_index = sentence.index;
        m.segment_start = static_cast<std::size_t>(segment.data() - text.data());
        m.segment_end = m.segment_start + segment.size();
        m.segment_text = std::string(segment);
        m.start = occurrences[i].begin;
        m.end = occurrences[i].end;
        m.query = m.segment_text;
        m.years_in_context = year_values(m.segment_text);
        mentions.push_back(std::move(m));
      }
    }

    std::sort(mentions.begin(), mentions.end(), [](const auto& a, const auto& b) {
      return std::tie(a.start, a.end, a.kind, a.feature) < std::tie(b.start, b.end, b.kind, b.feature);
    });
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      mentions[i].mention_id = "m" + std::to_string(i + 1);
    }
    return mentions;
  }

 private:
  static std::vector<DictionaryEntry> active(std::span<const DictionaryEntry> dictionary) {
    std::vector<DictionaryEntry> out;
    for (const auto& e : dictionary) {
      if (!e.blacklisted && !unicode::trim(e.surface).empty()) out.push_back(e);
    }
    return out;
  }
  static std::vector<SurfacePattern> patterns(const std::vector<DictionaryEntry>& entries) {
    std::vector<SurfacePattern> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.emplace_back(e.surface, match_mode_for(e.kind));
    return out;
  }

  std::vector<DictionaryEntry> entries_;
  PatternIndex index_;
};

/// Finds every occurrence of every non-blacklisted entry, sentence by
/// sentence. A sentence holding the same feature more than once is cut into
/// one segment per occurrence; the segment is the mention's query.
inline std::vector<ReferenceMention> detect_references(const PaperText& paper,
                                                       std::span<const DictionaryEntry> dictionary) {
  return Detector(dictionary).detect(paper);
}

/// Mentions keyed by feature surface, document order kept inside a group.
inline std::map<std::string, std::vector<ReferenceMention>> group_by_feature(
    std::span<const ReferenceMention> mentions) {
  std::map<std::string, std::vector<ReferenceMention>> groups;
  for (const auto& m : mentions) groups[m.feature].push_back(m);
  return groups;
}

// ---------------------------------------------------------------------------
// Mentions file: one JSON object per line, ordered by (paper_id, start).

inline nlohmann::ordered_json to_json(const ReferenceMention& m) {
  nlohmann::ordered_json j;
  j["paper_id"] = m.paper_id;
  j["mention_id"] = m.mention_id;
  j["feature"] = m.feature;
  j["kind"] = std::string(to_string(m.kind));
  j["start"] = m.start;
  j["end"] = m.end;
  j["sentence_index"] = m.sentence_index;
  j["segment_start"] = m.segment_start;
  j["segment_end"] = m.segment_end;
  j["query"] = m.query;
  j["years"] = m.years_in_context;
  return j;
}

inline ReferenceMention mention_from_json(const nlohmann::json& j) {
  try {
    ReferenceMention m;
    m.paper_id = j.at("paper_id").get<std::string>();
    m.mention_id = j.at("mention_id").get<std::string>();
    m.feature = j.at("feature").get<std::string>();
    const auto kind = parse_entry_kind(j.at("kind").get<std::string>());
    if (!kind) throw FormatError("unknown mention kind");
    m.kind = *kind;
    m.start = j.at("start").get<std::size_t>();
    m.end = j.at("end").get<std::size_t>();
    m.sentence_index = j.at("sentence_index").get<std::size_t>();
    m.segment_start = j.value("segment_start", m.start);
    m.segment_end = j.value("segment_end", m.end);
    m.query = j.at("query").get<std::string>();
    m.segment_text = m.query;
    m.years_in_context = j.contains("years") ? j["years"].get<std::vector<int>>()
                                             : year_values(m.segment_text);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed mention: ") + e.what());
  }
}

inline void sort_mentions(std::vector<ReferenceMention>& mentions) {
  std::stable_sort(mentions.begin(), mentions.end(), [](const auto& a, const auto& b) {
    return std::tie(a.paper_id, a.start) < std::tie(b.paper_id, b.start);
  });
}

inline void write_mentions(std::ostream& out, std::vector<ReferenceMention> mentions) {
  sort_mentions(mentions);
  for (const auto& m : mentions) out << to_json(m).dump() << '\n';
}

inline void write_mentions(const std::filesystem::path& path, std::vector<ReferenceMention> mentions) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write mentions: " + path.string());
  write_mentions(out, std::move(mentions));
}

inline std::vector<ReferenceMention> read_mentions(std::istream& in) {
  std::vector<ReferenceMention> mentions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (unicode::trim(line).empty()) continue;
    try {
      mentions.push_back(mention_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("mentions line " + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("mentions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return mentions;
}

inline std::vector<ReferenceMention> read_mentions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read mentions: " + path.string());
  return read_mentions(in);
}

/// Paper from a UTF-8 text file; the id is the file name without extension.
inline PaperText read_paper(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read paper: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return PaperText{path.stem().string(), std::move(text), std::nullopt};
}

/// *.txt files of a directory in name order.
inline std::vector<std::filesystem::path> paper_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") out.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list papers in " + dir.string() + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dataref
