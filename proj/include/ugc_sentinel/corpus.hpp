#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "ugc_sentinel/csv.hpp"
#include "ugc_sentinel/error.hpp"
#include "ugc_sentinel/provenance.hpp"
#include "ugc_sentinel/rng.hpp"
#include "ugc_sentinel/sha256.hpp"
#include "ugc_sentinel/text.hpp"

namespace ugcs {

enum class Source { amazon, yelp, other };
enum class Label { authentic, disinformative, unknown };

inline const char* to_string(Source s) {
  switch (s) {
    case Source::amazon: return "amazon";
    case Source::yelp: return "yelp";
    default: return "other";
  }
}
inline const char* to_string(Label l) {
  switch (l) {
    case Label::authentic: return "authentic";
    case Label::disinformative: return "disinformative";
    default: return "unknown";
  }
}
inline std::optional<Source> source_from_string(std::string_view s) {
  if (s == "amazon") return Source::amazon;
  if (s == "yelp") return Source::yelp;
  if (s == "other") return Source::other;
  return std::nullopt;
}
inline std::optional<Label> label_from_string(std::string_view s) {
  if (s == "authentic") return Label::authentic;
  if (s == "disinformative") return Label::disinformative;
  if (s == "unknown") return Label::unknown;
  return std::nullopt;
}

// One piece of user-generated content. A disinformative review points back
// at its authentic template through pair_id.
struct Review {
  std::string id;
  std::string text;
  Source source = Source::other;
  Label label = Label::unknown;
  std::optional<std::string> pair_id;
  std::map<std::string, std::string> meta;

  bool operator==(const Review&) const = default;
};

struct Corpus {
  std::vector<Review> reviews;
  std::string source_tag;
  std::vector<std::string> provenance_notes;

  std::size_t size() const { return reviews.size(); }
  bool empty() const { return reviews.empty(); }
};

enum class Format { jsonl, csv };

struct Rejection {
  std::size_t line_no = 0;  // 1-based input line of the offending record
  std::string reason;
  std::string record_id;  // empty when the id itself was unusable
};

struct IngestResult {
  Corpus corpus;
  std::vector<Rejection> rejections;
};

namespace detail {

inline std::optional<std::string> validate_review(const Review& r) {
  if (text::trim(r.text).empty()) return "empty text";
  if (r.label == Label::disinformative && !r.pair_id.has_value())
    return "disinformative review without pair_id";
  return std::nullopt;
}

inline void ingest_one(Review&& r, std::size_t line_no,
                       std::unordered_set<std::string>& seen_ids,
                       IngestResult& out) {
  if (r.id.empty()) {
    out.rejections.push_back({line_no, "missing id", ""});
    return;
  }
  if (auto why = validate_review(r)) {
    out.rejections.push_back({line_no, *why, r.id});
    return;
  }
  if (!seen_ids.insert(r.id).second) {
    out.rejections.push_back({line_no, "duplicate id", r.id});
    return;
  }
  out.corpus.reviews.push_back(std::move(r));
}

}  // namespace detail

// JSONL schema: one object per line, required keys "id" and "text";
// optional "source", "label", "pair_id" and a string-valued "meta" map.
// A leading {"_provenance": ...} line is tolerated and skipped.
inline IngestResult ingest_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("ingest: cannot read file: " + path);
  IngestResult out;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      out.rejections.push_back({line_no, "malformed JSON", ""});
      continue;
    }
    if (line_no == 1 && j.contains("_provenance")) continue;
    Review r;
    if (j.contains("id") && j["id"].is_string()) r.id = j["id"];
    if (!j.contains("text") || !j["text"].is_string()) {
      out.rejections.push_back({line_no, "missing text", r.id});
      continue;
    }
    r.text = j["text"];
    if (j.contains("source")) {
      auto s = source_from_string(j["source"].get<std::string>());
      if (!s) {
        out.rejections.push_back({line_no, "unrecognized source", r.id});
        continue;
      }
      r.source = *s;
    }
    if (j.contains("label")) {
      auto l = label_from_string(j["label"].get<std::string>());
      if (!l) {
        out.rejections.push_back({line_no, "unrecognized label", r.id});
        continue;
      }
      r.label = *l;
    }
    if (j.contains("pair_id") && j["pair_id"].is_string())
      r.pair_id = j["pair_id"].get<std::string>();
    if (j.contains("meta") && j["meta"].is_object()) {
      for (const auto& [k, v] : j["meta"].items())
        r.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    detail::ingest_one(std::move(r), line_no, seen_ids, out);
  }
  return out;
}

// CSV: RFC-4180, header row required. Recognized columns: id, text,
// source, label, pair_id; any other column becomes a meta entry (empty
// cells mean "absent").
inline IngestResult ingest_csv(const std::string& path) {
  auto records = csv::parse_file(path);
  if (records.empty()) throw ValidationError("ingest: empty CSV: " + path);
  IngestResult out;
  std::unordered_set<std::string> seen_ids;
  const auto& header = records.front().fields;
  auto col = [&](std::string_view name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int c_id = col("id"), c_text = col("text"), c_source = col("source"),
            c_label = col("label"), c_pair = col("pair_id");
  if (c_id < 0 || c_text < 0)
    throw ValidationError("ingest: CSV header must contain id and text");
  for (std::size_t ri = 1; ri < records.size(); ++ri) {
    const auto& rec = records[ri];
    auto field = [&](int c) -> std::string {
      return (c >= 0 && c < static_cast<int>(rec.fields.size()))
                 ? rec.fields[static_cast<std::size_t>(c)]
                 : std::string();
    };
    Review r;
    r.id = field(c_id);
    r.text = field(c_text);
    if (!field(c_source).empty()) {
      auto s = source_from_string(field(c_source));
      if (!s) {
        out.rejections.push_back({rec.line_no, "unrecognized source", r.id});
        continue;
      }
      r.source = *s;
    }
    if (!field(c_label).empty()) {
      auto l = label_from_string(field(c_label));
      if (!l) {
        out.rejections.push_back({rec.line_no, "unrecognized label", r.id});
        continue;
      }
      r.label = *l;
    }
    if (!field(c_pair).empty()) r.pair_id = field(c_pair);
    for (std::size_t ci = 0; ci < header.size(); ++ci) {
      const int c = static_cast<int>(ci);
      if (c == c_id || c == c_text || c == c_source || c == c_label ||
          c == c_pair)
        continue;
      const auto v = (ci < rec.fields.size()) ? rec.fields[ci] : std::string();
      if (!v.empty()) r.meta[header[ci]] = v;
    }
    detail::ingest_one(std::move(r), rec.line_no, seen_ids, out);
  }
  return out;
}

inline IngestResult ingest(const std::string& path, Format format) {
  return format == Format::jsonl ? ingest_jsonl(path) : ingest_csv(path);
}

inline nlohmann::json review_to_json(const Review& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["source"] = to_string(r.source);
  j["label"] = to_string(r.label);
  if (r.pair_id) j["pair_id"] = *r.pair_id;
  if (!r.meta.empty()) j["meta"] = r.meta;
  return j;
}

inline void emit_jsonl(const Corpus& c, std::ostream& os,
                       const Provenance* prov = nullptr) {
  if (prov != nullptr) os << prov->jsonl_line();
  for (const auto& r : c.reviews) os << review_to_json(r).dump() << "\n";
}

inline void emit_jsonl(const Corpus& c, const std::string& path,
                       const Provenance* prov = nullptr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("emit: cannot write file: " + path);
  emit_jsonl(c, os, prov);
}

inline void emit_csv(const Corpus& c, std::ostream& os) {
  std::set<std::string> meta_keys;
  for (const auto& r : c.reviews)
    for (const auto& [k, v] : r.meta) meta_keys.insert(k);
  std::vector<std::string> header = {"id", "text", "source", "label",
                                     "pair_id"};
  header.insert(header.end(), meta_keys.begin(), meta_keys.end());
  os << csv::join_row(header);
  for (const auto& r : c.reviews) {
    std::vector<std::string> row = {r.id, r.text, to_string(r.source),
                                    to_string(r.label),
                                    r.pair_id.value_or("")};
    for (const auto& k : meta_keys) {
      auto it = r.meta.find(k);
      row.push_back(it == r.meta.end() ? "" : it->second);
    }
    os << csv::join_row(row);
  }
}

inline void emit_csv(const Corpus& c, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("emit: cannot write file: " + path);
  emit_csv(c, os);
}

inline void emit(const Corpus& c, const std::string& path, Format format,
                 const Provenance* prov = nullptr) {
  if (format == Format::jsonl) emit_jsonl(c, path, prov);
  else emit_csv(c, path);
}

// ---------------------------------------------------------------------------
// Filtering

struct FilterRules {
  bool non_english = true;
  bool length_quartiles = true;
  bool dedup = true;
  // A review is non-English when more than this fraction of its letters
  // fall outside ASCII. The threshold spares reviews that merely contain
  // an accented name.
  double foreign_fraction_threshold = 0.05;
};

struct FilterReport {
  std::size_t input_count = 0;
  std::size_t non_english_removed = 0;
  std::size_t length_removed = 0;
  std::size_t dedup_removed = 0;
  std::size_t output_count = 0;
  std::size_t length_q1 = 0;  // boundary values used by the length rule
  std::size_t length_q3 = 0;

  nlohmann::json to_json() const {
    return {{"input_count", input_count},
            {"non_english_removed", non_english_removed},
            {"length_removed", length_removed},
            {"dedup_removed", dedup_removed},
            {"output_count", output_count},
            {"length_q1", length_q1},
            {"length_q3", length_q3}};
  }
};

namespace detail {

// Character count in code points, so multibyte text is measured the same
// way regardless of encoding width.
inline std::size_t codepoint_length(std::string_view s) {
  std::size_t n = 0, i = 0;
  while (i < s.size()) {
    text::decode_utf8(s, i);
    ++n;
  }
  return n;
}

}  // namespace detail

// Applies the enabled rules in order: non-English, length quartiles, dedup.
//
// Length rule: reviews shorter than the lower-quartile boundary or longer
// than the upper-quartile boundary are dropped; reviews exactly at a
// boundary are kept. Boundaries are the sorted length values at ranks
// floor(n/4)+1 and n-floor(n/4) (1-based) of the corpus as it stands when
// this rule runs, so out of 4 distinct lengths the shortest and longest go.
// Dedup keeps the first occurrence, comparing whitespace-collapsed text.
inline std::pair<Corpus, FilterReport> filter_corpus(const Corpus& c,
                                                     const FilterRules& rules) {
  if (c.empty()) throw ValidationError("filter_corpus: empty corpus");
  FilterReport report;
  report.input_count = c.size();
  std::vector<Review> cur = c.reviews;

  if (rules.non_english) {
    std::vector<Review> kept;
    kept.reserve(cur.size());
    for (auto& r : cur) {
      if (text::foreign_letter_fraction(r.text) >
          rules.foreign_fraction_threshold)
        ++report.non_english_removed;
      else
        kept.push_back(std::move(r));
    }
    cur = std::move(kept);
  }

  if (rules.length_quartiles && !cur.empty()) {
    std::vector<std::size_t> lengths(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i)
      lengths[i] = detail::codepoint_length(cur[i].text);
    std::vector<std::size_t> sorted = lengths;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const std::size_t q = n / 4;
    const std::size_t q1 = sorted[q];              // rank floor(n/4)+1
    const std::size_t q3 = sorted[n - 1 - q];      // rank n-floor(n/4)
    report.length_q1 = q1;
    report.length_q3 = q3;
    std::vector<Review> kept;
    kept.reserve(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (lengths[i] < q1 || lengths[i] > q3)
        ++report.length_removed;
      else
        kept.push_back(std::move(cur[i]));
    }
    cur = std::move(kept);
  }

  if (rules.dedup) {
    std::unordered_set<std::string> seen;
    std::vector<Review> kept;
    kept.reserve(cur.size());
    for (auto& r : cur) {
      if (seen.insert(text::collapse_whitespace(r.text)).second)
        kept.push_back(std::move(r));
      else
        ++report.dedup_removed;
    }
    cur = std::move(kept);
  }

  if (cur.empty())
    throw ValidationError("filter_corpus: corpus empty after filtering");
  report.output_count = cur.size();

  Corpus out;
  out.reviews = std::move(cur);
  out.source_tag = c.source_tag;
  out.provenance_notes = c.provenance_notes;
  out.provenance_notes.push_back(
      "filters applied: non_english=" + std::to_string(rules.non_english) +
      " length_quartiles=" + std::to_string(rules.length_quartiles) +
      " dedup=" + std::to_string(rules.dedup));
  return {std::move(out), report};
}

// ---------------------------------------------------------------------------
// Sampling and splitting

inline Corpus sample(const Corpus& c, std::size_t n, std::uint64_t seed) {
  if (n > c.size())
    throw ValidationError("sample: n exceeds corpus size");
  Rng rng(seed);
  auto idx = rng.sample_indices(c.size(), n);
  Corpus out;
  out.source_tag = c.source_tag;
  out.provenance_notes = c.provenance_notes;
  out.provenance_notes.push_back("sample n=" + std::to_string(n) +
                                 " seed=" + std::to_string(seed) + " rng=" +
                                 Rng::kAlgorithm);
  out.reviews.reserve(n);
  for (auto i : idx) out.reviews.push_back(c.reviews[i]);
  return out;
}

struct SplitSpec {
  double train_frac = 0.8;
  double val_frac = 0.1;
  double test_frac = 0.1;
  std::uint64_t seed = 0;
  bool pair_aware = false;

  void validate() const {
    auto in_range = [](double f) { return f > 0.0 && f < 1.0; };
    if (!in_range(train_frac) || !in_range(val_frac) || !in_range(test_frac))
      throw ValidationError("split: fractions must lie in (0,1)");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
      throw ValidationError("split: fractions must sum to 1");
  }
};

namespace detail {

// Largest-remainder apportionment of n units across the three fractions.
inline std::array<std::size_t, 3> apportion(std::size_t n,
                                            const SplitSpec& spec) {
  const double fr[3] = {spec.train_frac, spec.val_frac, spec.test_frac};
  std::array<std::size_t, 3> sizes{};
  double rem[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fr[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(exact);
    rem[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  // Hand out the leftovers to the largest remainders; ties go to the
  // earlier partition for determinism.
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (rem[i] > rem[best]) best = i;
    ++sizes[best];
    rem[best] = -1.0;
    ++assigned;
  }
  return sizes;
}

}  // namespace detail

// Splits into train/val/test. Units are single reviews, or whole pairs when
// spec.pair_aware is set (both members of a pair always land together).
inline std::array<Corpus, 3> split(const Corpus& c, const SplitSpec& spec) {
  spec.validate();

  // Group reviews into units: indices of one review, or of both pair members.
  std::vector<std::vector<std::size_t>> units;
  if (spec.pair_aware) {
    std::map<std::string, std::vector<std::size_t>> by_pair;
    std::vector<std::size_t> order;  // unit creation order, for determinism
    std::map<std::string, std::size_t> unit_of_pair;
    for (std::size_t i = 0; i < c.reviews.size(); ++i) {
      const auto& r = c.reviews[i];
      // A pair is keyed by the authentic member's id.
      const std::string key = r.pair_id.value_or(r.id);
      auto it = unit_of_pair.find(key);
      if (it == unit_of_pair.end()) {
        unit_of_pair[key] = units.size();
        units.push_back({i});
      } else {
        units[it->second].push_back(i);
      }
    }
    for (const auto& u : units) {
      if (u.size() > 2)
        throw ValidationError("split: pair_id maps to more than 2 reviews");
    }
    // Dangling pair_id: a review referencing an id that is not present.
    std::unordered_set<std::string> ids;
    for (const auto& r : c.reviews) ids.insert(r.id);
    for (const auto& r : c.reviews) {
      if (r.pair_id && !ids.count(*r.pair_id))
        throw ValidationError("split: dangling pair_id " + *r.pair_id +
                              " on review " + r.id);
    }
  } else {
    units.reserve(c.size());
    for (std::size_t i = 0; i < c.reviews.size(); ++i) units.push_back({i});
  }

  Rng rng(spec.seed);
  rng.shuffle(units);
  const auto sizes = detail::apportion(units.size(), spec);

  std::array<Corpus, 3> out;
  const char* names[3] = {"train", "val", "test"};
  std::size_t u = 0;
  for (int p = 0; p < 3; ++p) {
    out[p].source_tag = c.source_tag;
    out[p].provenance_notes = c.provenance_notes;
    out[p].provenance_notes.push_back(
        std::string("split ") + names[p] + " seed=" +
        std::to_string(spec.seed) + " pair_aware=" +
        std::to_string(spec.pair_aware) + " rng=" + Rng::kAlgorithm);
    for (std::size_t k = 0; k < sizes[static_cast<std::size_t>(p)]; ++k, ++u)
      for (auto i : units[u]) out[p].reviews.push_back(c.reviews[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Token frequencies

struct TokenFrequencyTable {
  std::vector<std::pair<std::string, std::size_t>> entries;  // count desc
  std::string stopword_set_id;
};

inline TokenFrequencyTable token_frequencies(
    const Corpus& c, const std::set<std::string>& stopwords) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& r : c.reviews)
    for (auto& tok : text::tokenize(r.text))
      if (!stopwords.count(tok)) ++counts[tok];
  TokenFrequencyTable table;
  table.entries.assign(counts.begin(), counts.end());
  std::sort(table.entries.begin(), table.entries.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  if (stopwords.empty()) {
    table.stopword_set_id = "empty";
  } else {
    std::string joined;
    for (const auto& w : stopwords) {
      joined += w;
      joined.push_back('\n');
    }
    table.stopword_set_id = sha256_hex(joined).substr(0, 12);
  }
  return table;
}

inline std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("stopwords: cannot read file: " + path);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto w = text::trim(line);
    if (w.empty() || w[0] == '#') continue;
    words.insert(text::lowercase(w));
  }
  return words;
}

}  // namespace ugcs
