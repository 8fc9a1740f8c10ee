#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "dataref/unicode.hpp"

namespace dataref {

inline constexpr int kMinYear = 1900;
inline constexpr int kMaxYear = 2099;

struct YearToken {
  int year = 0;
  std::size_t offset = 0;

  friend bool operator==(const YearToken&, const YearToken&) = default;
};

/// Every alphanumeric run that is exactly four ASCII digits in 1900-2099.
/// Ranges such as "1980-2012" yield both endpoints since '-' ends a run.
inline std::vector<YearToken> extract_years(std::string_view text) {
  std::vector<YearToken> years;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t run_begin = pos;
    std::size_t cursor = pos;
    if (!unicode::is_alnum(unicode::next(text, cursor))) {
      pos = cursor;
      continue;
    }
    std::size_t run_end = cursor;
    while (run_end < text.size() && unicode::alnum_at(text, run_end)) {
      unicode::next(text, run_end);
    }
    pos = run_end;
    if (run_end - run_begin != 4) continue;
    int value = 0;
    bool digits = true;
    for (std::size_t i = run_begin; i < run_end; ++i) {
      const char ch = text[i];
      if (ch < '0' || ch > '9') {
        digits = false;
        break;
      }
      value = value * 10 + (ch - '0');
    }
    if (digits && value >= kMinYear && value <= kMaxYear) {
      years.push_back(YearToken{value, run_begin});
    }
  }
  return years;
}

inline std::vector<int> year_values(std::string_view text) {
  std::vector<int> out;
  for (const auto& token : extract_years(text)) out.push_back(token.year);
  return out;
}

/// Last year mentioned in a title, used when metadata carries none.
inline std::optional<int> last_year_in(std::string_view text) {
  const auto years = extract_years(text);
  if (years.empty()) return std::nullopt;
  return years.back().year;
}

}  // namespace dataref
