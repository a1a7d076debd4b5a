#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ugc_sentinel/corpus.hpp"
#include "ugc_sentinel/gateway.hpp"
#include "ugc_sentinel/parsers.hpp"

namespace ugcs {

// --------------------------------------------------------------------------
// Entity name normalization: case-fold, trim, collapse whitespace; one
// trailing 's' is stripped when the singular form is already present, so
// "Price" and "Prices" tabulate together.

namespace nese_detail {

inline std::vector<std::string> name_tokens(const std::string& normalized) {
  std::vector<std::string> toks;
  std::istringstream ss(normalized);
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

// True when one name's token sequence is a leading prefix of the other's
// ("brand" vs "brand name").
inline bool token_prefix_related(const std::string& a, const std::string& b) {
  const auto ta = name_tokens(a);
  const auto tb = name_tokens(b);
  const auto& shorter = ta.size() <= tb.size() ? ta : tb;
  const auto& longer = ta.size() <= tb.size() ? tb : ta;
  if (shorter.empty()) return false;
  for (std::size_t i = 0; i < shorter.size(); ++i)
    if (shorter[i] != longer[i]) return false;
  return true;
}

inline std::string strip_plural(const std::string& normalized) {
  if (normalized.size() > 1 && normalized.back() == 's' &&
      normalized[normalized.size() - 2] != 's')
    return normalized.substr(0, normalized.size() - 1);
  return normalized;
}

}  // namespace nese_detail

// --------------------------------------------------------------------------
// Types

struct EntityFrequencyTable {
  // Display spelling (first seen) with document counts, descending by
  // count, ties lexicographic.
  std::vector<std::pair<std::string, std::size_t>> entries;
  std::string source_corpus_id;
  std::vector<std::string> normalization_log;

  nlohmann::json to_json() const {
    nlohmann::json e = nlohmann::json::array();
    for (const auto& [name, count] : entries) e.push_back({name, count});
    return {{"entries", e},
            {"source_corpus_id", source_corpus_id},
            {"normalization_log", normalization_log}};
  }

  // The serialization the consolidation prompt describes:
  // 'entity1': 5, 'entity2': 3, ...
  std::string to_prompt_string() const {
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i > 0) out += ", ";
      out += "'" + entries[i].first + "': " + std::to_string(entries[i].second);
    }
    return out;
  }
};

struct EntityList {
  enum class Provenance { llm_consolidated, manual };
  std::vector<std::string> entities;  // canonical, no duplicates
  Provenance provenance = Provenance::manual;
  std::vector<std::string> flags;

  std::string joined() const {
    std::string out;
    for (std::size_t i = 0; i < entities.size(); ++i) {
      if (i > 0) out += ", ";
      out += entities[i];
    }
    return out;
  }

  bool contains(const std::string& name) const {
    const auto key = text::normalize_key(name);
    for (const auto& e : entities)
      if (text::normalize_key(e) == key) return true;
    return false;
  }

  nlohmann::json to_json() const {
    return {{"entities", entities},
            {"provenance", provenance == Provenance::llm_consolidated
                               ? "llm_consolidated"
                               : "manual"},
            {"flags", flags}};
  }

  static EntityList from_json(const nlohmann::json& j) {
    EntityList out;
    for (const auto& e : j.at("entities")) out.entities.push_back(e);
    out.provenance = j.value("provenance", "manual") == "llm_consolidated"
                         ? Provenance::llm_consolidated
                         : Provenance::manual;
    if (j.contains("flags"))
      for (const auto& f : j["flags"]) out.flags.push_back(f);
    return out;
  }
};

struct NeseResult {
  std::string id;
  Label label = Label::unknown;
  std::optional<std::string> pair_id;
  std::vector<EntitySentiment> detections;  // each entity at most once

  bool operator==(const NeseResult&) const = default;
};

struct EntityAggregate {
  std::string entity;
  std::size_t n_docs = 0;      // documents evaluated
  std::size_t n_mentions = 0;  // documents where the entity was detected
  std::int64_t score_sum = 0;  // integer sum of detected scores
  double mention_freq = 0.0;   // n_mentions / n_docs
  std::optional<double> avg_sentiment;  // undefined when n_mentions == 0
};

struct PerDocFailure {
  std::string id;
  std::string reason;
};

struct DiscoveryOutcome {
  // Parsed entity sets, one per successfully processed review, input order.
  std::vector<std::pair<std::string, ParsedEntities>> per_review;
  std::vector<PerDocFailure> failures;  // provider or parse failures
};

struct EvaluationOutcome {
  std::vector<NeseResult> results;  // input order, failed docs omitted
  std::vector<PerDocFailure> failures;
  std::vector<std::string> violation_log;  // lenient-parse reports
};

// --------------------------------------------------------------------------
// Operations

struct CallPolicy {
  int attempt_budget = 3;
  double max_failure_frac = 0.2;
};

inline void check_failure_threshold(std::size_t failures, std::size_t total,
                                    double max_frac, const char* op) {
  if (total == 0) return;
  const double frac =
      static_cast<double>(failures) / static_cast<double>(total);
  if (frac > max_frac)
    throw ProviderError(std::string(op) + ": failure fraction " +
                        std::to_string(frac) + " exceeds threshold " +
                        std::to_string(max_frac));
}

// One independent discovery call per review.
inline DiscoveryOutcome discover_entities(Gateway& gateway, const Corpus& c,
                                          const CallPolicy& policy = {}) {
  if (c.empty()) throw ValidationError("discover_entities: empty corpus");
  DiscoveryOutcome out;
  for (const auto& review : c.reviews) {
    CompletionRequest req;
    req.template_id = TemplateId::entity_discovery;
    req.vars = {{"id", review.id}, {"ugc", review.text}};
    req.decoding = default_decoding(TemplateId::entity_discovery);
    req.attempt_budget = policy.attempt_budget;
    try {
      auto completion = gateway.complete(req);
      auto parsed = parse_entity_list(completion.text);
      if (!parsed.ok()) {
        out.failures.push_back({review.id, "parse: " + parsed.error->code});
        continue;
      }
      out.per_review.push_back({review.id, std::move(*parsed.value)});
    } catch (const ProviderError& e) {
      out.failures.push_back({review.id, e.what()});
    }
  }
  check_failure_threshold(out.failures.size(), c.size(),
                          policy.max_failure_frac, "discover_entities");
  return out;
}

// Counts the documents contributing each normalized entity, merges plural
// forms, and drops entities seen fewer than min_count times.
inline EntityFrequencyTable tabulate_and_prune(
    const DiscoveryOutcome& discovery, std::size_t min_count = 5,
    const std::string& source_corpus_id = "") {
  EntityFrequencyTable table;
  table.source_corpus_id = source_corpus_id;

  std::map<std::string, std::size_t> counts;   // normalized -> doc count
  std::map<std::string, std::string> display;  // normalized -> first spelling
  for (const auto& [id, parsed] : discovery.per_review) {
    std::set<std::string> seen_in_doc;
    for (const auto& raw_name : parsed.entities) {
      const std::string key = text::normalize_key(raw_name);
      if (key.empty() || !seen_in_doc.insert(key).second) continue;
      ++counts[key];
      display.emplace(key, text::collapse_whitespace(raw_name));
    }
  }

  // Merge "prices" into "price" when both exist (iterating the sorted map
  // visits the singular first, so the merge target is always present).
  for (auto it = counts.begin(); it != counts.end();) {
    const std::string singular = nese_detail::strip_plural(it->first);
    if (singular != it->first && counts.count(singular)) {
      counts[singular] += it->second;
      table.normalization_log.push_back("merged '" + display[it->first] +
                                        "' into '" + display[singular] + "'");
      it = counts.erase(it);
    } else {
      ++it;
    }
  }

  std::size_t total_mass = 0, pruned_mass = 0, pruned_entities = 0;
  for (const auto& [key, count] : counts) total_mass += count;
  for (const auto& [key, count] : counts) {
    if (count < min_count) {
      ++pruned_entities;
      pruned_mass += count;
      continue;
    }
    table.entries.push_back({display[key], count});
  }
  std::sort(table.entries.begin(), table.entries.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  if (pruned_entities > 0) {
    std::ostringstream log;
    log << "pruned " << pruned_entities << " entities below count "
        << min_count << " (" << pruned_mass << " of " << total_mass
        << " occurrences, "
        << (total_mass == 0
                ? 0.0
                : 100.0 * static_cast<double>(pruned_mass) /
                      static_cast<double>(total_mass))
        << "% of the data)";
    table.normalization_log.push_back(log.str());
  }
  return table;
}

// One consolidation call over the serialized table; falls back to top-k by
// count when the reply cannot be parsed (flagged).
inline EntityList consolidate_top_entities(Gateway& gateway,
                                           const EntityFrequencyTable& table,
                                           std::size_t k = 10,
                                           bool fallback_on_failure = true,
                                           const CallPolicy& policy = {}) {
  if (table.entries.empty())
    throw ValidationError("consolidate_top_entities: empty table");

  auto top_k_by_count = [&] {
    EntityList list;
    list.provenance = EntityList::Provenance::llm_consolidated;
    for (std::size_t i = 0; i < table.entries.size() && i < k; ++i)
      list.entities.push_back(table.entries[i].first);
    return list;
  };

  CompletionRequest req;
  req.template_id = TemplateId::entity_consolidation;
  req.vars = {{"entity_frequencies", table.to_prompt_string()},
              {"k", std::to_string(k)}};
  req.decoding = default_decoding(TemplateId::entity_consolidation);
  req.attempt_budget = policy.attempt_budget;

  EntityList list;
  try {
    auto completion = gateway.complete(req);
    auto names = parse_consolidation_list(completion.text, k);
    if (names.empty()) {
      if (!fallback_on_failure)
        throw ProviderError("consolidate_top_entities: unparseable reply");
      list = top_k_by_count();
      list.flags.push_back("fallback_top_k");
    } else {
      list.entities = std::move(names);
      list.provenance = EntityList::Provenance::llm_consolidated;
    }
  } catch (const ProviderError&) {
    if (!fallback_on_failure) throw;
    list = top_k_by_count();
    list.flags.push_back("fallback_after_provider_failure");
  }
  if (list.entities.size() < k) list.flags.push_back("short_list");
  return list;
}

// Order-preserving union. Two names merge when their normalized forms are
// equal, differ by a trailing plural 's', or one is a leading token prefix
// of the other ("Brand" folds into "Brand Name"); the first-seen spelling
// wins.
inline EntityList union_entities(const EntityList& a, const EntityList& b) {
  EntityList out;
  out.provenance = (a.provenance == EntityList::Provenance::llm_consolidated &&
                    b.provenance == EntityList::Provenance::llm_consolidated)
                       ? EntityList::Provenance::llm_consolidated
                       : EntityList::Provenance::manual;
  auto is_duplicate = [&](const std::string& name) {
    const std::string key = nese_detail::strip_plural(text::normalize_key(name));
    for (const auto& existing : out.entities) {
      const std::string ekey =
          nese_detail::strip_plural(text::normalize_key(existing));
      if (ekey == key || nese_detail::token_prefix_related(ekey, key))
        return true;
    }
    return false;
  };
  for (const auto& list : {a, b})
    for (const auto& name : list.entities)
      if (!is_duplicate(name)) out.entities.push_back(name);
  return out;
}

// One independent NESE call per review, parsed against the entity list.
inline EvaluationOutcome evaluate_corpus(Gateway& gateway, const Corpus& c,
                                         const EntityList& entities,
                                         const CallPolicy& policy = {}) {
  if (entities.entities.empty())
    throw ValidationError("evaluate_corpus: empty entity list");
  EvaluationOutcome out;
  for (const auto& review : c.reviews) {
    CompletionRequest req;
    req.template_id = TemplateId::nese_eval;
    req.vars = {{"id", review.id},
                {"ugc", review.text},
                {"entities", entities.joined()},
                {"entity_count", std::to_string(entities.entities.size())}};
    req.decoding = default_decoding(TemplateId::nese_eval);
    req.attempt_budget = policy.attempt_budget;
    try {
      auto completion = gateway.complete(req);
      auto parsed = parse_entity_sentiments(completion.text, entities.entities);
      if (!parsed.ok()) {
        out.failures.push_back({review.id, "parse: " + parsed.error->code});
        continue;
      }
      for (const auto& v : parsed.value->violations)
        out.violation_log.push_back(review.id + ": " + v.kind + " " + v.detail);
      NeseResult r;
      r.id = review.id;
      r.label = review.label;
      r.pair_id = review.pair_id;
      r.detections = std::move(parsed.value->pairs);
      out.results.push_back(std::move(r));
    } catch (const ProviderError& e) {
      out.failures.push_back({review.id, e.what()});
    }
  }
  check_failure_threshold(out.failures.size(), c.size(),
                          policy.max_failure_frac, "evaluate_corpus");
  return out;
}

// Exact counting over a result list. The entity must belong to the run's
// entity list.
inline EntityAggregate aggregate(const std::vector<NeseResult>& results,
                                 const std::string& entity,
                                 const EntityList& run_entities) {
  if (results.empty()) throw ValidationError("aggregate: no results");
  if (!run_entities.contains(entity))
    throw ValidationError("aggregate: entity '" + entity +
                          "' unknown to the run's entity list");
  const std::string key = text::normalize_key(entity);
  EntityAggregate agg;
  agg.entity = entity;
  agg.n_docs = results.size();
  for (const auto& r : results) {
    for (const auto& d : r.detections) {
      if (text::normalize_key(d.entity) == key) {
        ++agg.n_mentions;
        agg.score_sum += d.score;
        break;  // at most one detection per entity per review
      }
    }
  }
  agg.mention_freq = static_cast<double>(agg.n_mentions) /
                     static_cast<double>(agg.n_docs);
  if (agg.n_mentions > 0)
    agg.avg_sentiment = static_cast<double>(agg.score_sum) /
                        static_cast<double>(agg.n_mentions);
  return agg;
}

// --------------------------------------------------------------------------
// Persistence: NESE results as JSONL {id, label, pair_id?, detections}.

inline nlohmann::json nese_result_to_json(const NeseResult& r) {
  nlohmann::json dets = nlohmann::json::array();
  for (const auto& d : r.detections)
    dets.push_back({{"entity", d.entity}, {"score", d.score}});
  nlohmann::json j;
  j["id"] = r.id;
  j["label"] = to_string(r.label);
  if (r.pair_id) j["pair_id"] = *r.pair_id;
  j["detections"] = dets;
  return j;
}

inline void write_nese_results(const std::vector<NeseResult>& results,
                               const std::string& path,
                               const Provenance* prov = nullptr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("write_nese_results: cannot write " + path);
  if (prov != nullptr) os << prov->jsonl_line();
  for (const auto& r : results) os << nese_result_to_json(r).dump() << "\n";
}

inline std::vector<NeseResult> read_nese_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("read_nese_results: cannot read " + path);
  std::vector<NeseResult> results;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ValidationError("read_nese_results: malformed JSON at line " +
                            std::to_string(line_no));
    if (line_no == 1 && j.contains("_provenance")) continue;
    NeseResult r;
    r.id = j.at("id");
    r.label = label_from_string(j.value("label", "unknown"))
                  .value_or(Label::unknown);
    if (j.contains("pair_id")) r.pair_id = j["pair_id"].get<std::string>();
    for (const auto& d : j.at("detections"))
      r.detections.push_back({d.at("entity"), d.at("score")});
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace ugcs
