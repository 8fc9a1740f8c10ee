#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dataref/match.hpp"
#include "dataref/unicode.hpp"
#include "dataref/years.hpp"

namespace dataref {

enum class Language { en, de };

struct PaperText {
  std::string paper_id;
  std::string text;
  std::optional<Language> language_hint;
};

struct SentenceSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::size_t index = 0;

  friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

/// Words ending in '.' that do not end a sentence.
inline constexpr std::array<std::string_view, 40> kNonTerminalAbbreviations = {
    "e.g.", "i.e.", "cf.", "vs.", "al.", "approx.", "ca.", "Dr.", "Prof.", "Mr.",
    "Mrs.", "Ms.", "Jr.", "St.", "No.", "Nr.", "Fig.", "Figs.", "Tab.", "Eq.",
    "Vol.", "pp.", "p.", "ed.", "eds.", "Inc.", "z.B.", "d.h.", "u.a.", "bzw.",
    "vgl.", "ggf.", "Abb.", "sog.", "evtl.", "inkl.", "Hrsg.", "Bd.", "S.", "ff."};

namespace detail {

inline bool is_closing_mark(char32_t c) {
  return c == U')' || c == U']' || c == U'"' || c == U'\'' || c == U'”' || c == U'’' ||
         c == U'»' || c == U'“';
}

// The whitespace-delimited word that ends at `dot_end` (exclusive).
inline std::string_view word_ending_at(std::string_view text, std::size_t dot_end) {
  std::size_t begin = dot_end;
  while (begin > 0) {
    std::size_t probe = begin;
    if (unicode::is_space(unicode::prev(text, probe))) break;
    begin = probe;
  }
  std::string_view word = text.substr(begin, dot_end - begin);
  while (!word.empty() && (word.front() == '(' || word.front() == '[' || word.front() == '"')) {
    word.remove_prefix(1);
  }
  return word;
}

inline bool is_non_terminal_abbreviation(std::string_view word) {
  if (std::find(kNonTerminalAbbreviations.begin(), kNonTerminalAbbreviations.end(), word) !=
      kNonTerminalAbbreviations.end()) {
    return true;
  }
  // single-letter initials such as "J."
  std::size_t pos = 0;
  if (word.empty()) return false;
  const char32_t c = unicode::next(word, pos);
  return unicode::is_upper(c) && word.substr(pos) == ".";
}

inline void push_trimmed(std::string_view text, std::size_t begin, std::size_t end,
                         std::vector<SentenceSpan>& spans) {
  const std::string_view piece = unicode::trim(text.substr(begin, end - begin));
  if (piece.empty()) return;
  const auto start = static_cast<std::size_t>(piece.data() - text.data());
  spans.push_back(SentenceSpan{start, start + piece.size(), spans.size()});
}

}  // namespace detail

/// Rule-based segmentation. A sentence ends at '.', '!' or '?' (optionally
/// followed by closing quotes or brackets) when whitespace and then an
/// uppercase letter or a digit follow, unless the word before the '.' is a
/// known abbreviation or an initial. A blank line always ends a sentence.
/// Spans are trimmed, so the text between spans is whitespace only.
inline std::vector<SentenceSpan> split_sentences(std::string_view text) {
  std::vector<SentenceSpan> spans;
  std::size_t sentence_begin = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t here = pos;
    const char32_t c = unicode::next(text, pos);

    if (c == U'\n') {
      std::size_t probe = pos;
      bool blank_line = false;
      while (probe < text.size()) {
        std::size_t after = probe;
        const char32_t d = unicode::next(text, after);
        if (d == U'\n') {
          blank_line = true;
          break;
        }
        if (!unicode::is_space(d)) break;
        probe = after;
      }
      if (blank_line) {
        detail::push_trimmed(text, sentence_begin, here, spans);
        sentence_begin = here;
      }
      continue;
    }

    if (c != U'.' && c != U'!' && c != U'?') continue;

    std::size_t end = pos;
    while (end < text.size()) {
      std::size_t probe = end;
      if (!detail::is_closing_mark(unicode::next(text, probe))) break;
      end = probe;
    }
    std::size_t next_start = end;
    std::size_t spaces = 0;
    while (next_start < text.size()) {
      std::size_t probe = next_start;
      if (!unicode::is_space(unicode::next(text, probe))) break;
      next_start = probe;
      ++spaces;
    }
    if (spaces == 0 || next_start >= text.size()) continue;
    const char32_t following = unicode::at(text, next_start);
    if (!unicode::is_upper(following) && !unicode::is_digit(following)) continue;
    if (c == U'.' && detail::is_non_terminal_abbreviation(detail::word_ending_at(text, pos))) {
      continue;
    }
    detail::push_trimmed(text, sentence_begin, end, spans);
    sentence_begin = end;
    pos = next_start;
  }
  detail::push_trimmed(text, sentence_begin, text.size(), spans);
  return spans;
}

inline std::vector<SentenceSpan> split_sentences(const PaperText& paper) {
  return split_sentences(paper.text);
}

/// Boundaries that cut [0, length) into one piece per occurrence. Each cut
/// lies in the gap between consecutive occurrences, at the whitespace
/// closest to the gap's midpoint, or failing that at the closest word
/// boundary, so no piece starts or ends inside a word.
inline std::vector<Occurrence> partition_at_midpoints(std::string_view text,
                                                      std::span<const Occurrence> occurrences) {
  std::vector<Occurrence> pieces;
  std::size_t piece_begin = 0;
  for (std::size_t i = 0; i + 1 < occurrences.size(); ++i) {
    const std::size_t gap_begin = occurrences[i].end;
    const std::size_t gap_end = occurrences[i + 1].begin;
    const std::size_t mid = gap_begin + (gap_end - gap_begin) / 2;
    const auto distance = [mid](std::size_t x) { return x > mid ? x - mid : mid - x; };
    std::optional<std::size_t> best;
    std::optional<std::size_t> boundary;  // not inside a letter/digit run
    for (std::size_t p = gap_begin; p <= gap_end && p < text.size();) {
      std::size_t probe = p;
      const char32_t c = unicode::next(text, probe);
      if (p < gap_end && unicode::is_space(c)) {
        if (!best || distance(p) < distance(*best)) best = p;
      }
      if (!(unicode::alnum_before(text, p) && unicode::is_alnum(c))) {
        if (!boundary || distance(p) < distance(*boundary)) boundary = p;
      }
      p = probe;
    }
    std::size_t cut = best ? *best : boundary ? *boundary : unicode::align_to_char(text, mid);
    cut = std::clamp(cut, gap_begin, gap_end);
    pieces.push_back(Occurrence{piece_begin, cut});
    piece_begin = cut;
  }
  pieces.push_back(Occurrence{piece_begin, text.size()});
  return pieces;
}

/// Splits a sentence into one segment per occurrence of `surface`. With a
/// single occurrence the whole sentence comes back. The segments concatenate
/// to the input.
inline std::vector<std::string> subdivide_on_repeat(std::string_view sentence_text,
                                                    std::string_view surface,
                                                    MatchMode mode = MatchMode::case_sensitive) {
  const auto occurrences = find_occurrences(sentence_text, surface, mode);
  if (occurrences.empty()) {
    throw std::invalid_argument("subdivide_on_repeat: feature '" + std::string(surface) +
                                "' does not occur in the sentence");
  }
  std::vector<std::string> segments;
  for (const Occurrence& piece : partition_at_midpoints(sentence_text, occurrences)) {
    segments.emplace_back(sentence_text.substr(piece.begin, piece.end - piece.begin));
  }
  return segments;
}

}  // namespace dataref
