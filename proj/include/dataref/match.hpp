#pragma once

// Token-boundary matching of dictionary surfaces in running text.
//
// A surface matches at position p when p does not follow a letter/digit, the
// surface's words appear in order separated by runs of whitespace, and the
// match does not end in front of a letter/digit. Case-insensitive patterns
// are matched against a folded copy of the text; folding preserves byte
// offsets (see unicode::fold).

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dataref/unicode.hpp"

namespace dataref {

enum class MatchMode { case_sensitive, case_insensitive };

struct Occurrence {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

class SurfacePattern {
 public:
  SurfacePattern(std::string_view surface, MatchMode mode) : mode_(mode) {
    const std::string source =
        mode == MatchMode::case_insensitive ? unicode::fold(surface) : std::string(surface);
    std::size_t pos = 0;
    std::string word;
    while (pos < source.size()) {
      const std::size_t begin = pos;
      const char32_t c = unicode::next(source, pos);
      if (unicode::is_space(c)) {
        if (!word.empty()) words_.push_back(std::move(word));
        word.clear();
      } else {
        word.append(source, begin, pos - begin);
      }
    }
    if (!word.empty()) words_.push_back(std::move(word));
  }

  MatchMode mode() const { return mode_; }
  bool empty() const { return words_.empty(); }
  const std::vector<std::string>& words() const { return words_; }

  /// Leading alphanumeric run of the first word; empty when the surface
  /// starts with punctuation.
  std::string_view index_key() const {
    if (words_.empty()) return {};
    const std::string& first = words_.front();
    std::size_t end = 0;
    while (end < first.size() && unicode::alnum_at(first, end)) unicode::next(first, end);
    return std::string_view(first).substr(0, end);
  }

  /// End offset of a match starting exactly at `pos`, if any. `haystack`
  /// must be folded for case-insensitive patterns.
  std::optional<std::size_t> match_at(std::string_view haystack, std::size_t pos) const {
    if (words_.empty() || unicode::alnum_before(haystack, pos)) return std::nullopt;
    std::size_t cursor = pos;
    for (std::size_t k = 0; k < words_.size(); ++k) {
      if (k > 0) {
        std::size_t spaces = 0;
        while (cursor < haystack.size()) {
          std::size_t probe = cursor;
          if (!unicode::is_space(unicode::next(haystack, probe))) break;
          cursor = probe;
          ++spaces;
        }
        if (spaces == 0) return std::nullopt;
      }
      const std::string& word = words_[k];
      if (haystack.compare(cursor, word.size(), word) != 0) return std::nullopt;
      cursor += word.size();
    }
    if (unicode::alnum_at(haystack, cursor)) return std::nullopt;
    return cursor;
  }

  /// Non-overlapping matches, left to right.
  std::vector<Occurrence> find_all(std::string_view haystack) const {
    std::vector<Occurrence> out;
    if (words_.empty()) return out;
    std::size_t from = 0;
    while (from < haystack.size()) {
      const std::size_t pos = haystack.find(words_.front(), from);
      if (pos == std::string_view::npos) break;
      if (auto end = match_at(haystack, pos)) {
        out.push_back(Occurrence{pos, *end});
        from = *end;
      } else {
        from = pos + 1;
      }
    }
    return out;
  }

 private:
  MatchMode mode_;
  std::vector<std::string> words_;
};

/// Convenience wrapper that folds the text itself when needed.
inline std::vector<Occurrence> find_occurrences(std::string_view text, std::string_view surface,
                                                MatchMode mode) {
  const SurfacePattern pattern(surface, mode);
  if (mode == MatchMode::case_insensitive) return pattern.find_all(unicode::fold(text));
  return pattern.find_all(text);
}

inline bool contains_surface(std::string_view text, std::string_view folded_text,
                             const SurfacePattern& pattern) {
  const std::string_view haystack =
      pattern.mode() == MatchMode::case_insensitive ? folded_text : text;
  if (pattern.empty()) return false;
  std::size_t from = 0;
  while (true) {
    const std::size_t pos = haystack.find(pattern.words().front(), from);
    if (pos == std::string_view::npos) return false;
    if (pattern.match_at(haystack, pos)) return true;
    from = pos + 1;
  }
}

/// Finds many patterns in one pass over the alphanumeric runs of a text.
class PatternIndex {
 public:
  struct Hit {
    std::size_t pattern = 0;
    Occurrence occurrence;
  };

  explicit PatternIndex(std::vector<SurfacePattern> patterns) : patterns_(std::move(patterns)) {
    for (std::size_t i = 0; i < patterns_.size(); ++i) {
      const SurfacePattern& p = patterns_[i];
      if (p.empty()) continue;
      const std::string key(p.index_key());
      if (key.empty()) {
        unindexed_.push_back(i);
      } else if (p.mode() == MatchMode::case_sensitive) {
        exact_[key].push_back(i);
      } else {
        folded_[key].push_back(i);
      }
    }
  }

  const std::vector<SurfacePattern>& patterns() const { return patterns_; }

  /// All hits ordered by (begin, pattern). `folded` must be unicode::fold(text).
  std::vector<Hit> scan(std::string_view text, std::string_view folded) const {
    std::vector<Hit> hits;
    std::vector<std::size_t> last_end(patterns_.size(), 0);
    const auto try_pattern = [&](std::size_t index, std::size_t pos) {
      if (pos < last_end[index]) return;
      const SurfacePattern& p = patterns_[index];
      const std::string_view haystack = p.mode() == MatchMode::case_insensitive ? folded : text;
      if (auto end = p.match_at(haystack, pos)) {
        hits.push_back(Hit{index, Occurrence{pos, *end}});
        last_end[index] = *end;
      }
    };

    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t cursor = pos;
      if (!unicode::is_alnum(unicode::next(text, cursor))) {
        pos = cursor;
        continue;
      }
      const std::size_t run_begin = pos;
      std::size_t run_end = cursor;
      while (run_end < text.size() && unicode::alnum_at(text, run_end)) {
        unicode::next(text, run_end);
      }
      const std::size_t len = run_end - run_begin;
      if (auto it = exact_.find(std::string(text.substr(run_begin, len))); it != exact_.end()) {
        for (std::size_t index : it->second) try_pattern(index, run_begin);
      }
      if (auto it = folded_.find(std::string(folded.substr(run_begin, len))); it != folded_.end()) {
        for (std::size_t index : it->second) try_pattern(index, run_begin);
      }
      pos = run_end;
    }

    for (std::size_t index : unindexed_) {
      const SurfacePattern& p = patterns_[index];
      const std::string_view haystack = p.mode() == MatchMode::case_insensitive ? folded : text;
      for (const Occurrence& occ : p.find_all(haystack)) hits.push_back(Hit{index, occ});
    }

    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      return std::pair(a.occurrence.begin, a.pattern) < std::pair(b.occurrence.begin, b.pattern);
    });
    return hits;
  }

 private:
  std::vector<SurfacePattern> patterns_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> exact_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> folded_;
  std::vector<std::size_t> unindexed_;
};

}  // namespace dataref
