#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ugc_sentinel/text.hpp"

namespace ugcs {

// The parsers below are total: any byte string yields either a value or a
// structured error, never an exception. They are the counterpart of the
// output-format clauses of the entity prompts.

struct ParseError {
  std::string code;     // stable identifier, e.g. "no_block"
  std::string message;  // human-readable detail
};

template <typename T>
struct Parsed {
  std::optional<T> value;
  std::optional<ParseError> error;
  bool ok() const { return value.has_value(); }
};

// --------------------------------------------------------------------------
// Entity list grammar: #####Identified Entities: a, b, c#####
//                      #####Identified Entities: NONE#####

struct ParsedEntities {
  std::vector<std::string> entities;
  bool none_flag = false;
};

inline constexpr std::string_view kEntityBlockMarker =
    "#####Identified Entities:";
inline constexpr std::string_view kBlockClose = "#####";

inline Parsed<ParsedEntities> parse_entity_list(std::string_view raw) {
  std::size_t search = 0;
  while (true) {
    const std::size_t open = raw.find(kEntityBlockMarker, search);
    if (open == std::string_view::npos)
      return {std::nullopt,
              ParseError{"no_block",
                         "no well-formed '#####Identified Entities: ...#####' "
                         "block found"}};
    const std::size_t content_start = open + kEntityBlockMarker.size();
    const std::size_t close = raw.find(kBlockClose, content_start);
    if (close == std::string_view::npos) {
      search = content_start;
      continue;
    }
    std::string content =
        text::trim(raw.substr(content_start, close - content_start));
    // Tolerate the bracketed form the prompt uses to describe the slot.
    if (content.size() >= 2 && content.front() == '[' && content.back() == ']')
      content = text::trim(std::string_view(content).substr(1, content.size() - 2));
    ParsedEntities out;
    if (text::lowercase(content) == "none") {
      out.none_flag = true;
      return {out, std::nullopt};
    }
    std::size_t pos = 0;
    while (pos <= content.size()) {
      const std::size_t comma = content.find(',', pos);
      const std::string item = text::trim(
          comma == std::string::npos
              ? std::string_view(content).substr(pos)
              : std::string_view(content).substr(pos, comma - pos));
      if (!item.empty()) out.entities.push_back(item);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return {out, std::nullopt};
  }
}

inline std::string serialize_entity_list(const ParsedEntities& p) {
  std::string out(kEntityBlockMarker);
  out.push_back(' ');
  if (p.none_flag) {
    out += "NONE";
  } else {
    for (std::size_t i = 0; i < p.entities.size(); ++i) {
      if (i > 0) out += ", ";
      out += p.entities[i];
    }
  }
  out += kBlockClose;
  return out;
}

// --------------------------------------------------------------------------
// Entity sentiment grammar: {'Entity: Pricing, Sentiment Score: 2'}, ...
// Extraction is tolerant of braces, quotes and spacing drift; entity names
// are matched case-insensitively against the allowed set.

struct EntitySentiment {
  std::string entity;  // canonical spelling from the allowed set
  int score = 0;       // 1..7

  bool operator==(const EntitySentiment&) const = default;
};

struct SentimentViolation {
  std::string kind;  // unknown_entity | score_out_of_range | duplicate_entity
  std::string detail;
};

struct ParsedSentiments {
  std::vector<EntitySentiment> pairs;
  std::vector<SentimentViolation> violations;
};

struct SentimentParseOptions {
  bool strict = false;             // violations become errors
  bool expect_at_least_one = false;  // zero recovered pairs is an error
};

namespace detail {

inline bool imatch_at(std::string_view s, std::size_t pos,
                      std::string_view word) {
  if (pos + word.size() > s.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    const char a = s[pos + i];
    const char b = word[i];
    if (std::tolower(static_cast<unsigned char>(a)) !=
        std::tolower(static_cast<unsigned char>(b)))
      return false;
  }
  return true;
}

inline void skip_ws(std::string_view s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

inline std::string strip_decor(std::string_view s) {
  std::size_t b = 0, e = s.size();
  auto is_decor = [](char c) {
    return c == '\'' || c == '"' || c == '{' || c == '}' || c == '[' ||
           c == ']' || std::isspace(static_cast<unsigned char>(c));
  };
  while (b < e && is_decor(s[b])) ++b;
  while (e > b && is_decor(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

inline Parsed<ParsedSentiments> parse_entity_sentiments(
    std::string_view raw, const std::vector<std::string>& allowed,
    const SentimentParseOptions& opts = {}) {
  std::map<std::string, std::string> canon;  // normalized -> canonical
  for (const auto& name : allowed) canon[text::normalize_key(name)] = name;

  ParsedSentiments out;
  std::map<std::string, bool> seen;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!detail::imatch_at(raw, i, "entity")) {
      ++i;
      continue;
    }
    const std::size_t token_at = i;
    std::size_t j = i + 6;  // past "entity"
    detail::skip_ws(raw, j);
    if (j >= raw.size() || raw[j] != ':') {
      i = token_at + 1;
      continue;
    }
    ++j;
    const std::size_t name_start = j;
    const std::size_t comma = raw.find(',', name_start);
    if (comma == std::string_view::npos) {
      i = token_at + 1;
      continue;
    }
    const std::string name =
        detail::strip_decor(raw.substr(name_start, comma - name_start));
    j = comma + 1;
    detail::skip_ws(raw, j);
    if (!detail::imatch_at(raw, j, "sentiment")) {
      i = token_at + 1;
      continue;
    }
    j += 9;
    detail::skip_ws(raw, j);
    if (!detail::imatch_at(raw, j, "score")) {
      i = token_at + 1;
      continue;
    }
    j += 5;
    detail::skip_ws(raw, j);
    if (j >= raw.size() || raw[j] != ':') {
      i = token_at + 1;
      continue;
    }
    ++j;
    detail::skip_ws(raw, j);
    bool neg = false;
    if (j < raw.size() && (raw[j] == '-' || raw[j] == '+')) {
      neg = raw[j] == '-';
      ++j;
    }
    std::size_t digits_start = j;
    long value = 0;
    while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) {
      if (value < 1000) value = value * 10 + (raw[j] - '0');
      ++j;
    }
    if (j == digits_start) {
      i = token_at + 1;
      continue;
    }
    if (neg) value = -value;
    i = j;  // resume scanning after this pair

    if (name.empty()) {
      out.violations.push_back({"unknown_entity", "(empty name)"});
      continue;
    }
    auto it = canon.find(text::normalize_key(name));
    if (it == canon.end()) {
      out.violations.push_back({"unknown_entity", name});
      continue;
    }
    if (value < 1 || value > 7) {
      out.violations.push_back(
          {"score_out_of_range", it->second + ": " + std::to_string(value)});
      continue;
    }
    if (seen[it->second]) {
      out.violations.push_back({"duplicate_entity", it->second});
      continue;
    }
    seen[it->second] = true;
    out.pairs.push_back({it->second, static_cast<int>(value)});
  }

  if (opts.strict && !out.violations.empty()) {
    std::string detail;
    for (const auto& v : out.violations) {
      if (!detail.empty()) detail += "; ";
      detail += v.kind + ": " + v.detail;
    }
    return {std::nullopt, ParseError{"strict_violation", detail}};
  }
  if (opts.expect_at_least_one && out.pairs.empty() &&
      !text::trim(raw).empty()) {
    return {std::nullopt,
            ParseError{"zero_pairs", "no entity-sentiment pairs recovered"}};
  }
  return {out, std::nullopt};
}

inline std::string serialize_entity_sentiments(
    const std::vector<EntitySentiment>& pairs) {
  std::string out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i > 0) out += ", ";
    out += "{'Entity: " + pairs[i].entity +
           ", Sentiment Score: " + std::to_string(pairs[i].score) + "'}";
  }
  return out;
}

// --------------------------------------------------------------------------
// Consolidation replies: "1. Product Quality: why it matters" per line.
// Only enumerated/bulleted lines are read; preamble prose is skipped.

inline std::vector<std::string> parse_consolidation_list(std::string_view raw,
                                                         std::size_t k) {
  std::vector<std::string> names;
  std::map<std::string, bool> seen;
  std::size_t pos = 0;
  while (pos <= raw.size() && names.size() < k) {
    const std::size_t eol = raw.find('\n', pos);
    std::string_view line = raw.substr(
        pos, eol == std::string_view::npos ? raw.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? raw.size() + 1 : eol + 1;

    std::string t = text::trim(line);
    if (t.empty()) continue;
    // Require an enumeration marker: digits followed by '.' or ')', or a
    // bullet character.
    std::size_t b = 0;
    bool enumerated = false;
    while (b < t.size() && std::isdigit(static_cast<unsigned char>(t[b]))) ++b;
    if (b > 0 && b < t.size() && (t[b] == '.' || t[b] == ')')) {
      ++b;
      enumerated = true;
    } else if (!t.empty() && (t[0] == '-' || t[0] == '*')) {
      b = 1;
      enumerated = true;
    }
    if (!enumerated) continue;
    std::string rest = text::trim(std::string_view(t).substr(b));
    // Name runs until the explanation separator.
    std::size_t cut = rest.size();
    for (const std::string_view sep : {std::string_view(":"),
                                       std::string_view(" - "),
                                       std::string_view(" \xE2\x80\x94"),
                                       std::string_view("(")}) {
      const auto at = rest.find(sep);
      if (at != std::string::npos) cut = std::min(cut, at);
    }
    std::string name = detail::strip_decor(std::string_view(rest).substr(0, cut));
    if (name.empty()) continue;
    const std::string key = text::normalize_key(name);
    if (seen[key]) continue;
    seen[key] = true;
    names.push_back(name);
  }
  return names;
}

}  // namespace ugcs
