#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dataref/unicode.hpp"

namespace dataref {

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offset in the source
  std::size_t end = 0;
};

namespace detail {

// Punctuation that always separates tokens, even without surrounding spaces.
inline bool is_hard_separator(char32_t c) {
  switch (c) {
    case U',': case U';': case U':': case U'(': case U')': case U'[': case U']':
    case U'{': case U'}': case U'"': case U'!': case U'?': case U'<': case U'>':
    case U'|': case U'“': case U'”': case U'„': case U'«':
    case U'»': case U'–': case U'—':
      return true;
    default:
      return unicode::is_space(c);
  }
}

}  // namespace detail

/// Word tokenizer used for titles and paper text. Splits on whitespace and
/// hard separators, trims leading and trailing punctuation and keeps
/// punctuation inside a token ("U.S.", "ALLBUS/GGSS", "R&D"). A trailing dot
/// survives when the token already has an inner dot.
inline std::vector<Token> tokenize_words(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t chunk_begin = pos;
    std::size_t cursor = pos;
    char32_t c = unicode::next(text, cursor);
    if (detail::is_hard_separator(c)) {
      pos = cursor;
      continue;
    }
    std::size_t chunk_end = cursor;
    while (chunk_end < text.size()) {
      std::size_t probe = chunk_end;
      if (detail::is_hard_separator(unicode::next(text, probe))) break;
      chunk_end = probe;
    }
    pos = chunk_end;

    // trim non-alphanumerics at both ends
    std::size_t begin = chunk_begin;
    while (begin < chunk_end && !unicode::alnum_at(text, begin)) {
      unicode::next(text, begin);
    }
    std::size_t end = chunk_end;
    while (end > begin && !unicode::alnum_before(text, end)) {
      unicode::prev(text, end);
    }
    if (begin == end) continue;
    std::string_view core = text.substr(begin, end - begin);
    if (end < chunk_end && text[end] == '.' && core.find('.') != std::string_view::npos) {
      ++end;
    }
    tokens.push_back(Token{std::string(text.substr(begin, end - begin)), begin, end});
  }
  return tokens;
}

/// True when only whitespace (at least one character) separates two tokens.
inline bool whitespace_between(std::string_view text, const Token& left, const Token& right) {
  if (right.begin <= left.end) return false;
  return unicode::is_all_space(text.substr(left.end, right.begin - left.end));
}

// Casing predicates over a single token.

/// Has at least one letter, and every cased character after the first code
/// point is lowercase ("Drug", "drug", "News").
inline bool is_lower_except_first(std::string_view s) {
  bool has_letter = false;
  bool first = true;
  for (std::size_t pos = 0; pos < s.size();) {
    const char32_t c = unicode::next(s, pos);
    if (unicode::is_alpha(c)) has_letter = true;
    if (!first && unicode::is_upper(c)) return false;
    first = false;
  }
  return has_letter;
}

/// At least one uppercase character after the first code point.
inline bool has_upper_after_first(std::string_view s) {
  bool first = true;
  for (std::size_t pos = 0; pos < s.size();) {
    const char32_t c = unicode::next(s, pos);
    if (!first && unicode::is_upper(c)) return true;
    first = false;
  }
  return false;
}

inline bool has_letter(std::string_view s) {
  for (std::size_t pos = 0; pos < s.size();) {
    if (unicode::is_alpha(unicode::next(s, pos))) return true;
  }
  return false;
}

inline bool starts_with_digit(std::string_view s) {
  return !s.empty() && unicode::is_digit(unicode::at(s, 0));
}

inline bool starts_with_letter(std::string_view s) {
  return !s.empty() && unicode::is_alpha(unicode::at(s, 0));
}

/// Every cased character is uppercase and there are at least two of them.
inline bool is_all_capitals(std::string_view s) {
  int cased = 0;
  for (std::size_t pos = 0; pos < s.size();) {
    const char32_t c = unicode::next(s, pos);
    if (!unicode::is_cased(c)) continue;
    if (unicode::is_lower(c)) return false;
    ++cased;
  }
  return cased >= 2;
}

/// Lowercased terms for vector-space scoring: punctuation is removed except
/// '.', '-', '&' and '/' between alphanumerics.
inline std::vector<std::string> normalize_terms(std::string_view text) {
  std::vector<std::string> terms;
  for (const Token& token : tokenize_words(text)) {
    std::string term;
    const std::string folded = unicode::fold(token.text);
    for (std::size_t pos = 0; pos < folded.size();) {
      const std::size_t begin = pos;
      const char32_t c = unicode::next(folded, pos);
      if (unicode::is_alnum(c) || c == U'.' || c == U'-' || c == U'&' || c == U'/') {
        term.append(folded, begin, pos - begin);
      }
    }
    const auto keep = [](char ch) { return ch != '.' && ch != '-' && ch != '&' && ch != '/'; };
    const auto first = std::find_if(term.begin(), term.end(), keep);
    const auto last = std::find_if(term.rbegin(), term.rend(), keep).base();
    if (first < last) terms.emplace_back(first, last);
  }
  return terms;
}

}  // namespace dataref
