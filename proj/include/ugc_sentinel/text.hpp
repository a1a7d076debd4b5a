#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ugcs::text {

// Decodes one UTF-8 code point starting at s[i]; advances i past it.
// Malformed bytes decode as U+FFFD and advance by one byte, so scanning
// is total on arbitrary input.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

inline void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline bool is_ascii_letter(char32_t c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
}

inline bool is_ascii_digit(char32_t c) { return c >= '0' && c <= '9'; }

// Latin-1 Supplement letters (excludes the multiplication/division signs).
inline bool is_latin1_letter(char32_t c) {
  return c >= 0xC0 && c <= 0xFF && c != 0xD7 && c != 0xF7;
}

// Letters outside ASCII, covering the practically relevant alphabetic
// blocks. Punctuation, symbols and emoji are deliberately excluded.
inline bool is_nonascii_letter(char32_t c) {
  if (is_latin1_letter(c)) return true;
  if (c >= 0x0100 && c <= 0x024F) return true;  // Latin Extended-A/B
  if (c >= 0x0370 && c <= 0x03FF) return true;  // Greek
  if (c >= 0x0400 && c <= 0x04FF) return true;  // Cyrillic
  if (c >= 0x0530 && c <= 0x058F) return true;  // Armenian
  if (c >= 0x0590 && c <= 0x05FF) return true;  // Hebrew
  if (c >= 0x0600 && c <= 0x06FF) return true;  // Arabic
  if (c >= 0x0900 && c <= 0x097F) return true;  // Devanagari
  if (c >= 0x0E00 && c <= 0x0E7F) return true;  // Thai
  if (c >= 0x3040 && c <= 0x30FF) return true;  // Hiragana/Katakana
  if (c >= 0x4E00 && c <= 0x9FFF) return true;  // CJK unified
  if (c >= 0xAC00 && c <= 0xD7AF) return true;  // Hangul
  return false;
}

inline bool is_letter(char32_t c) {
  return is_ascii_letter(c) || is_nonascii_letter(c);
}

// Lowercases ASCII and Latin-1 uppercase letters; other code points pass
// through unchanged.
inline char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

inline std::string lowercase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) encode_utf8(to_lower(decode_utf8(s, i)), out);
  return out;
}

inline bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v' || c == 0xA0;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Collapses runs of whitespace to a single space and trims the ends.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = false;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t start = i;
    const char32_t cp = decode_utf8(s, i);
    if (is_space(cp)) {
      in_ws = true;
    } else {
      if (in_ws && !out.empty()) out.push_back(' ');
      in_ws = false;
      out.append(s.substr(start, i - start));
    }
  }
  return out;
}

// Word tokenization: maximal runs of letters/digits, with an apostrophe
// kept when it sits between letters ("don't"). Tokens come out lowercased.
inline std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string cur;
  std::size_t i = 0;
  char32_t prev = 0;
  while (i < s.size()) {
    std::size_t at = i;
    const char32_t cp = decode_utf8(s, i);
    if (is_letter(cp) || is_ascii_digit(cp)) {
      encode_utf8(to_lower(cp), cur);
      prev = cp;
      continue;
    }
    if (cp == '\'' && is_letter(prev) && i < s.size()) {
      std::size_t peek = i;
      const char32_t nxt = decode_utf8(s, peek);
      if (is_letter(nxt)) {
        cur.push_back('\'');
        prev = cp;
        continue;
      }
    }
    (void)at;
    if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
    prev = 0;
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

// Fraction of alphabetic code points that are not ASCII letters.
// Returns 0 when the text has no letters at all.
inline double foreign_letter_fraction(std::string_view s) {
  std::size_t letters = 0, foreign = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    const char32_t cp = decode_utf8(s, i);
    if (is_ascii_letter(cp)) {
      ++letters;
    } else if (is_nonascii_letter(cp)) {
      ++letters;
      ++foreign;
    }
  }
  if (letters == 0) return 0.0;
  return static_cast<double>(foreign) / static_cast<double>(letters);
}

// Case-folded, whitespace-collapsed form used to compare entity names.
inline std::string normalize_key(std::string_view s) {
  return lowercase(collapse_whitespace(s));
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

}  // namespace ugcs::text
