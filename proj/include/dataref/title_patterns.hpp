#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dataref/dictionary.hpp"
#include "dataref/match.hpp"
#include "dataref/record.hpp"
#include "dataref/tokenize.hpp"

namespace dataref {

struct PatternStats {
  std::size_t total_titles = 0;
  std::size_t with_abbreviation = 0;
  std::size_t with_phrase = 0;
  std::size_t with_both = 0;
  std::size_t with_filename = 0;

  double share(std::size_t count) const {
    return total_titles == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total_titles);
  }

  friend bool operator==(const PatternStats&, const PatternStats&) = default;
};

inline constexpr std::array<std::string_view, 6> kDataFileExtensions = {"DAT", "TXT", "CSV",
                                                                       "SAV", "DTA", "POR"};

/// NAME.EXT with a name of at least two characters and a data-file
/// extension, e.g. "VIRGPT2.DAT".
inline bool is_filename_token(std::string_view token) {
  const auto dot = token.rfind('.');
  if (dot == std::string_view::npos) return false;
  const std::string_view name = token.substr(0, dot);
  std::string ext(token.substr(dot + 1));
  for (char& c : ext) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  if (unicode::length(name) < 2) return false;
  return std::find(kDataFileExtensions.begin(), kDataFileExtensions.end(), ext) !=
         kDataFileExtensions.end();
}

/// Counts titles that contain an abbreviation, a phrase, both, or a data
/// file name. Features are matched with the same rules as detection;
/// blacklisted entries are ignored.
inline PatternStats analyze_title_patterns(std::span<const DatasetRecord> records,
                                           std::span<const DictionaryEntry> abbreviations,
                                           std::span<const DictionaryEntry> phrases) {
  std::vector<SurfacePattern> abbrev_patterns;
  std::vector<SurfacePattern> phrase_patterns;
  for (const auto& e : abbreviations) {
    if (!e.blacklisted) abbrev_patterns.emplace_back(e.surface, MatchMode::case_sensitive);
  }
  for (const auto& e : phrases) {
    if (!e.blacklisted) phrase_patterns.emplace_back(e.surface, MatchMode::case_insensitive);
  }
  const PatternIndex abbrev_index(std::move(abbrev_patterns));
  const PatternIndex phrase_index(std::move(phrase_patterns));

  PatternStats stats;
  for (const auto& record : records) {
    ++stats.total_titles;
    const std::string folded = unicode::fold(record.title);
    const bool abbrev = !abbrev_index.scan(record.title, folded).empty();
    const bool phrase = !phrase_index.scan(record.title, folded).empty();
    const auto tokens = tokenize_words(record.title);
    const bool filename = std::any_of(tokens.begin(), tokens.end(),
                                      [](const Token& t) { return is_filename_token(t.text); });
    stats.with_abbreviation += abbrev;
    stats.with_phrase += phrase;
    stats.with_both += abbrev && phrase;
    stats.with_filename += filename;
  }
  return stats;
}

}  // namespace dataref
