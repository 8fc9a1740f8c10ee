#pragma once

// Dictionary of characteristic features: abbreviations induced from dataset
// titles and special phrases built around expert-chosen seed terms.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dataref/error.hpp"
#include "dataref/record.hpp"
#include "dataref/tokenize.hpp"
#include "dataref/unicode.hpp"

namespace dataref {

enum class EntryKind { abbreviation, phrase };

inline std::string_view to_string(EntryKind kind) {
  return kind == EntryKind::abbreviation ? "abbreviation" : "phrase";
}

inline std::optional<EntryKind> parse_entry_kind(std::string_view s) {
  if (s == "abbreviation") return EntryKind::abbreviation;
  if (s == "phrase") return EntryKind::phrase;
  return std::nullopt;
}

struct DictionaryEntry {
  std::string surface;
  EntryKind kind = EntryKind::abbreviation;
  std::set<std::string> source_title_ids;
  bool blacklisted = false;

  friend bool operator==(const DictionaryEntry&, const DictionaryEntry&) = default;
};

/// Word lists that drive pruning. All sets except `blacklist` hold folded
/// (lowercase) strings.
struct WordLists {
  std::set<std::string> english_words;
  std::set<std::string> german_words;
  std::set<std::string> country_names;
  std::set<std::string> stop_words;
  std::set<std::string> seed_terms;
  std::set<std::string> blacklist;

  bool is_common_word(std::string_view folded) const {
    const std::string key(folded);
    return english_words.contains(key) || german_words.contains(key) ||
           country_names.contains(key);
  }
  bool is_stop_word(std::string_view token) const {
    return stop_words.contains(unicode::fold(token));
  }
  bool is_seed(std::string_view token) const { return seed_terms.contains(unicode::fold(token)); }
};

struct TitleRef {
  std::string id;
  std::string title;
};

inline std::vector<TitleRef> titles_of(std::span<const DatasetRecord> records) {
  std::vector<TitleRef> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.id, r.title});
  return out;
}

// ---------------------------------------------------------------------------
// Word list files: one entry per line, '#' starts a comment line.

inline std::vector<std::string> read_list_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read word list: " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view item = unicode::trim(line);
    if (item.empty() || item.front() == '#') continue;
    out.emplace_back(item);
  }
  return out;
}

inline std::set<std::string> read_folded_set(const std::filesystem::path& path) {
  std::set<std::string> out;
  for (const auto& item : read_list_file(path)) out.insert(unicode::fold(item));
  return out;
}

/// Loads english.txt, german.txt, countries.txt and stopwords.txt from
/// `dir`, the seed terms from `seeds` and, optionally, a blacklist.
inline WordLists load_wordlists(const std::filesystem::path& dir,
                                const std::filesystem::path& seeds,
                                const std::optional<std::filesystem::path>& blacklist = {}) {
  WordLists lists;
  lists.english_words = read_folded_set(dir / "english.txt");
  lists.german_words = read_folded_set(dir / "german.txt");
  lists.country_names = read_folded_set(dir / "countries.txt");
  lists.stop_words = read_folded_set(dir / "stopwords.txt");
  lists.seed_terms = read_folded_set(seeds);
  if (blacklist) {
    for (auto& item : read_list_file(*blacklist)) lists.blacklist.insert(std::move(item));
  }
  return lists;
}

// ---------------------------------------------------------------------------

/// Well-formed Roman numeral in canonical form (I..MMMCMXCIX), written
/// either all uppercase or all lowercase.
inline bool is_roman_numeral(std::string_view token) {
  if (token.empty()) return false;
  const bool upper = std::all_of(token.begin(), token.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
  const bool lower = std::all_of(token.begin(), token.end(), [](char c) { return c >= 'a' && c <= 'z'; });
  if (!upper && !lower) return false;
  std::string s(token);
  if (lower) {
    for (char& c : s) c = static_cast<char>(c - 'a' + 'A');
  }
  static const std::regex canonical("M{0,3}(CM|CD|D?C{0,3})(XC|XL|L?X{0,3})(IX|IV|V?I{0,3})");
  return std::regex_match(s, canonical);
}

namespace detail {

inline bool allowed_punctuation(char32_t c) {
  return c == U'.' || c == U'-' || c == U'/' || c == U'*' || c == U'&';
}

inline bool only_whitelisted_punctuation(std::string_view s) {
  for (std::size_t pos = 0; pos < s.size();) {
    const char32_t c = unicode::next(s, pos);
    if (!unicode::is_alnum(c) && !allowed_punctuation(c)) return false;
  }
  return true;
}

// "News/ESPN": a '/' or '-' compound with a part that is lowercase except for
// its first letter.
inline bool has_lowercase_compound_part(std::string_view s) {
  if (s.find_first_of("/-") == std::string_view::npos) return false;
  std::size_t begin = 0;
  while (begin <= s.size()) {
    std::size_t end = s.find_first_of("/-", begin);
    if (end == std::string_view::npos) end = s.size();
    if (is_lower_except_first(s.substr(begin, end - begin))) return true;
    begin = end + 1;
  }
  return false;
}

// Shared token filter: digit-only/punctuation-only, digit-initial, Roman
// numerals and single characters never become abbreviations.
inline bool is_abbreviation_shaped(std::string_view token) {
  if (unicode::length(token) < 2) return false;
  if (!has_letter(token)) return false;
  if (starts_with_digit(token)) return false;
  if (is_roman_numeral(token)) return false;
  return true;
}

// Final pruning applied to every candidate: punctuation whitelist, compound
// parts, and word lists (unless capitalised beyond the first letter).
inline bool survives_pruning(std::string_view token, const WordLists& lists) {
  if (!only_whitelisted_punctuation(token)) return false;
  if (has_lowercase_compound_part(token)) return false;
  if (!has_upper_after_first(token) && lists.is_common_word(unicode::fold(token))) return false;
  return true;
}

inline void add_entry(std::map<std::string, std::set<std::string>>& found, std::string surface,
                      const std::string& id) {
  found[std::move(surface)].insert(id);
}

}  // namespace detail

/// Abbreviation candidates from titles:
///  1. titles written entirely in capitals are set aside;
///  2. the rest is cut at the first ':';
///  3. tokens that are not lowercase-after-the-first-letter, not made of
///     digits and punctuation, not Roman numerals and not digit-initial
///     are kept;
///  4. the token right before each '-' or '(' delimiter is kept too;
///  5. items with punctuation other than . - / * & are dropped;
///  6. '/' or '-' compounds with a lowercase-after-first part are dropped;
///  7. English/German words and country names are dropped unless the item
///     has an uppercase letter after its first character;
///  8. the set-aside titles are tokenized, word-list pruned on their
///     lowercase form and the survivors kept in original capitalisation.
/// Entries are merged by surface and sorted by surface.
inline std::vector<DictionaryEntry> extract_abbreviations(std::span<const TitleRef> titles,
                                                          const WordLists& lists) {
  if (lists.english_words.empty() && lists.german_words.empty()) {
    throw ConfigError("word lists are not loaded");
  }
  std::map<std::string, std::set<std::string>> found;

  for (const auto& [id, title] : titles) {
    if (is_all_capitals(title)) {
      for (const Token& token : tokenize_words(title)) {
        const std::string folded = unicode::fold(token.text);
        if (lists.is_common_word(folded) || lists.stop_words.contains(folded)) continue;
        if (!detail::is_abbreviation_shaped(token.text)) continue;
        if (!detail::only_whitelisted_punctuation(token.text)) continue;
        if (detail::has_lowercase_compound_part(token.text)) continue;
        detail::add_entry(found, token.text, id);
      }
      continue;
    }

    std::string_view head = title;
    if (const auto colon = head.find(':'); colon != std::string_view::npos) {
      head = head.substr(0, colon);
    }
    const auto tokens = tokenize_words(head);
    std::vector<std::string> candidates;

    for (const Token& token : tokens) {
      if (is_lower_except_first(token.text)) continue;
      if (!detail::is_abbreviation_shaped(token.text)) continue;
      candidates.push_back(token.text);
    }

    // delimiters outside tokens: the token immediately in front of them
    for (std::size_t p = 0; p < head.size(); ++p) {
      if (head[p] != '-' && head[p] != '(') continue;
      const auto inside = std::find_if(tokens.begin(), tokens.end(), [p](const Token& t) {
        return t.begin <= p && p < t.end;
      });
      if (inside != tokens.end()) continue;
      const Token* before = nullptr;
      for (const Token& t : tokens) {
        if (t.end <= p) before = &t;
      }
      if (!before || !unicode::is_all_space(head.substr(before->end, p - before->end))) continue;
      if (!detail::is_abbreviation_shaped(before->text)) continue;
      candidates.push_back(before->text);
    }

    for (auto& candidate : candidates) {
      if (detail::survives_pruning(candidate, lists)) detail::add_entry(found, candidate, id);
    }
  }

  std::vector<DictionaryEntry> entries;
  entries.reserve(found.size());
  for (auto& [surface, ids] : found) {
    entries.push_back(DictionaryEntry{surface, EntryKind::abbreviation, std::move(ids), false});
  }
  return entries;
}

/// Special phrases around seed terms:
///  (a) single tokens that end in a seed term and are longer than it
///      ("Singularisierungsstudie");
///  (b) "Survey of" / "Study of" plus the next token if it is not a stop
///      word ("Survey of Hunting");
///  (c) two adjacent tokens, one a seed term and the other a word that is not
///      a stop word ("Freedom Poll", "Exit Poll").
/// Multi-token phrases never span punctuation. Surfaces that differ only by
/// case are merged; the spelling seen in most titles wins (ties: smallest).
inline std::vector<DictionaryEntry> derive_phrases(std::span<const TitleRef> titles,
                                                   const WordLists& lists) {
  if (lists.seed_terms.empty()) throw ConfigError("seed term list is empty");

  struct Variants {
    std::map<std::string, std::set<std::string>> spellings;  // surface -> title ids
  };
  std::map<std::string, Variants> found;  // folded surface -> spellings
  const auto add = [&](const std::string& surface, const std::string& id) {
    found[unicode::fold(surface)].spellings[surface].insert(id);
  };
  const auto is_word = [&](const Token& t) {
    return starts_with_letter(t.text) && unicode::length(t.text) >= 2 && !lists.is_stop_word(t.text);
  };

  for (const auto& [id, title] : titles) {
    const auto tokens = tokenize_words(title);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const Token& token = tokens[i];
      const std::string folded = unicode::fold(token.text);

      for (const auto& seed : lists.seed_terms) {
        if (folded.size() > seed.size() && unicode::length(folded) > unicode::length(seed) &&
            folded.compare(folded.size() - seed.size(), seed.size(), seed) == 0 &&
            starts_with_letter(token.text)) {
          add(token.text, id);
          break;
        }
      }

      if (i + 2 < tokens.size() && (folded == "survey" || folded == "study") &&
          unicode::fold(tokens[i + 1].text) == "of" &&
          whitespace_between(title, token, tokens[i + 1]) &&
          whitespace_between(title, tokens[i + 1], tokens[i + 2]) && is_word(tokens[i + 2])) {
        add(token.text + " " + tokens[i + 1].text + " " + tokens[i + 2].text, id);
      }

      if (i + 1 < tokens.size() && whitespace_between(title, token, tokens[i + 1])) {
        const Token& next = tokens[i + 1];
        const bool left_seed = lists.is_seed(token.text);
        const bool right_seed = lists.is_seed(next.text);
        if ((left_seed && is_word(next)) || (right_seed && is_word(token))) {
          add(token.text + " " + next.text, id);
        }
      }
    }
  }

  std::vector<DictionaryEntry> entries;
  for (auto& [folded, variants] : found) {
    const std::string* best = nullptr;
    std::size_t best_count = 0;
    std::set<std::string> ids;
    for (const auto& [surface, surface_ids] : variants.spellings) {
      if (!best || surface_ids.size() > best_count) {
        best = &surface;
        best_count = surface_ids.size();
      }
      ids.insert(surface_ids.begin(), surface_ids.end());
    }
    entries.push_back(DictionaryEntry{*best, EntryKind::phrase, std::move(ids), false});
  }
  std::sort(entries.begin(), entries.end(),
            [](const DictionaryEntry& a, const DictionaryEntry& b) { return a.surface < b.surface; });
  return entries;
}

/// Flags entries whose surface is blacklisted. Nothing is removed.
inline std::vector<DictionaryEntry> apply_blacklist(std::vector<DictionaryEntry> entries,
                                                    const std::set<std::string>& blacklist) {
  for (auto& entry : entries) {
    if (blacklist.contains(entry.surface)) entry.blacklisted = true;
  }
  return entries;
}

/// Abbreviations and phrases merged into one dictionary in file order.
inline std::vector<DictionaryEntry> build_dictionary(std::span<const TitleRef> titles,
                                                     const WordLists& lists) {
  auto entries = extract_abbreviations(titles, lists);
  auto phrases = derive_phrases(titles, lists);
  entries.insert(entries.end(), std::make_move_iterator(phrases.begin()),
                 std::make_move_iterator(phrases.end()));
  entries = apply_blacklist(std::move(entries), lists.blacklist);
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::pair(a.kind, std::string_view(a.surface)) <
           std::pair(b.kind, std::string_view(b.surface));
  });
  return entries;
}

// ---------------------------------------------------------------------------
// Dictionary file: one entry per line, tab-separated
//   surface  kind  blacklisted(0|1)  id,id,...
// sorted by kind, then surface (bytewise).

inline void write_dictionary(std::ostream& out, std::vector<DictionaryEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::pair(a.kind, std::string_view(a.surface)) <
           std::pair(b.kind, std::string_view(b.surface));
  });
  for (const auto& entry : entries) {
    out << entry.surface << '\t' << to_string(entry.kind) << '\t' << (entry.blacklisted ? 1 : 0)
        << '\t';
    bool first = true;
    for (const auto& id : entry.source_title_ids) {
      if (!first) out << ',';
      out << id;
      first = false;
    }
    out << '\n';
  }
}

inline void write_dictionary(const std::filesystem::path& path, std::vector<DictionaryEntry> entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write dictionary: " + path.string());
  write_dictionary(out, std::move(entries));
}

inline std::vector<DictionaryEntry> read_dictionary(std::istream& in) {
  std::vector<DictionaryEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t begin = 0;
    while (true) {
      const auto tab = line.find('\t', begin);
      fields.push_back(line.substr(begin, tab == std::string::npos ? std::string::npos : tab - begin));
      if (tab == std::string::npos) break;
      begin = tab + 1;
    }
    const auto fail = [&](const std::string& why) {
      throw FormatError("dictionary line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() < 2) fail("expected at least surface and kind");
    DictionaryEntry entry;
    entry.surface = fields[0];
    if (unicode::trim(entry.surface).empty()) fail("empty surface");
    const auto kind = parse_entry_kind(fields[1]);
    if (!kind) fail("unknown kind '" + fields[1] + "'");
    entry.kind = *kind;
    if (fields.size() > 2) {
      if (fields[2] != "0" && fields[2] != "1") fail("blacklist flag must be 0 or 1");
      entry.blacklisted = fields[2] == "1";
    }
    if (fields.size() > 3 && !fields[3].empty()) {
      std::stringstream ids(fields[3]);
      std::string id;
      while (std::getline(ids, id, ',')) {
        if (!id.empty()) entry.source_title_ids.insert(id);
      }
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

inline std::vector<DictionaryEntry> read_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read dictionary: " + path.string());
  return read_dictionary(in);
}

inline std::vector<DictionaryEntry> entries_of_kind(std::span<const DictionaryEntry> entries,
                                                    EntryKind kind) {
  std::vector<DictionaryEntry> out;
  for (const auto& e : entries) {
    if (e.kind == kind) out.push_back(e);
  }
  return out;
}

}  // namespace dataref
