#pragma once

// UTF-8 helpers on top of ICU's character properties. All offsets are byte
// offsets into the UTF-8 string.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace dataref::unicode {

inline constexpr char32_t kReplacement = 0xFFFD;

/// Decodes the code point starting at `pos` and advances `pos` past it.
/// Ill-formed sequences decode to U+FFFD and consume at least one byte.
inline char32_t next(std::string_view s, std::size_t& pos) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  auto i = static_cast<int32_t>(pos);
  UChar32 c;
  U8_NEXT(bytes, i, static_cast<int32_t>(s.size()), c);
  pos = static_cast<std::size_t>(i);
  return c < 0 ? kReplacement : static_cast<char32_t>(c);
}

/// Decodes the code point ending right before `pos` and moves `pos` to its
/// first byte.
inline char32_t prev(std::string_view s, std::size_t& pos) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  auto i = static_cast<int32_t>(pos);
  UChar32 c;
  U8_PREV(bytes, 0, i, c);
  pos = static_cast<std::size_t>(i);
  return c < 0 ? kReplacement : static_cast<char32_t>(c);
}

inline char32_t at(std::string_view s, std::size_t pos) { return next(s, pos); }

inline std::size_t encoded_length(char32_t c) {
  return static_cast<std::size_t>(U8_LENGTH(static_cast<UChar32>(c)));
}

inline void append(std::string& out, char32_t c) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<uint8_t*>(buf), len, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
  if (error) {
    out += "\xEF\xBF\xBD";
  } else {
    out.append(buf, static_cast<std::size_t>(len));
  }
}

inline bool is_upper(char32_t c) { return u_isupper(static_cast<UChar32>(c)); }
inline bool is_lower(char32_t c) { return u_islower(static_cast<UChar32>(c)); }
inline bool is_alpha(char32_t c) { return u_isalpha(static_cast<UChar32>(c)); }
inline bool is_digit(char32_t c) { return u_isdigit(static_cast<UChar32>(c)); }
inline bool is_alnum(char32_t c) { return is_alpha(c) || is_digit(c); }
inline bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }
inline bool is_cased(char32_t c) {
  return u_hasBinaryProperty(static_cast<UChar32>(c), UCHAR_CASED);
}

/// Lowercase mapping that never changes the encoded length, so offsets
/// computed on the folded string are valid on the original.
inline char32_t fold_char(char32_t c) {
  const auto lower = static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
  return encoded_length(lower) == encoded_length(c) ? lower : c;
}

inline std::string fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) {
    const std::size_t begin = pos;
    const char32_t c = next(s, pos);
    if (c == kReplacement) {
      out.append(s.substr(begin, pos - begin));
    } else {
      append(out, fold_char(c));
    }
  }
  return out;
}

inline std::size_t length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < s.size(); ++n) next(s, pos);
  return n;
}

/// True when the code point right before `pos` is a letter or digit.
inline bool alnum_before(std::string_view s, std::size_t pos) {
  if (pos == 0) return false;
  return is_alnum(prev(s, pos));
}

/// True when the code point starting at `pos` is a letter or digit.
inline bool alnum_at(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return false;
  return is_alnum(at(s, pos));
}

inline bool is_all_space(std::string_view s) {
  for (std::size_t pos = 0; pos < s.size();) {
    if (!is_space(next(s, pos))) return false;
  }
  return true;
}

inline std::string_view trim(std::string_view s) {
  std::size_t begin = 0;
  while (begin < s.size()) {
    std::size_t pos = begin;
    if (!is_space(next(s, pos))) break;
    begin = pos;
  }
  std::size_t end = s.size();
  while (end > begin) {
    std::size_t pos = end;
    if (!is_space(prev(s, pos))) break;
    end = pos;
  }
  return s.substr(begin, end - begin);
}

/// Moves `pos` back to the first byte of the code point containing it.
inline std::size_t align_to_char(std::string_view s, std::size_t pos) {
  while (pos > 0 && pos < s.size() &&
         (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) {
    --pos;
  }
  return pos;
}

}  // namespace dataref::unicode
