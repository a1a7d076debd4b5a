#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "ugc_sentinel/corpus.hpp"

namespace ugcs {

struct Vocabulary {
  std::vector<std::string> tokens;  // index -> token, lexicographic
  std::unordered_map<std::string, int> index;
  std::vector<std::size_t> doc_freq;  // aligned with tokens
  int min_df = 1;
  double max_df_frac = 1.0;

  std::size_t size() const { return tokens.size(); }

  int lookup(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? -1 : it->second;
  }

  nlohmann::json to_json() const {
    return {{"tokens", tokens},
            {"doc_freq", doc_freq},
            {"min_df", min_df},
            {"max_df_frac", max_df_frac}};
  }

  static Vocabulary from_json(const nlohmann::json& j) {
    Vocabulary v;
    v.tokens = j.at("tokens").get<std::vector<std::string>>();
    v.doc_freq = j.at("doc_freq").get<std::vector<std::size_t>>();
    v.min_df = j.value("min_df", 1);
    v.max_df_frac = j.value("max_df_frac", 1.0);
    for (std::size_t i = 0; i < v.tokens.size(); ++i)
      v.index[v.tokens[i]] = static_cast<int>(i);
    return v;
  }
};

// Document-frequency pruning with deterministic lexicographic indexing.
inline Vocabulary build_vocab(const Corpus& c, int min_df = 1,
                              double max_df_frac = 1.0,
                              const std::set<std::string>& stopwords = {}) {
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& r : c.reviews) {
    std::set<std::string> seen;
    for (const auto& tok : text::tokenize(r.text))
      if (!stopwords.count(tok) && seen.insert(tok).second) ++df[tok];
  }
  const double max_df = max_df_frac * static_cast<double>(c.size());
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, freq] : df) {
    if (freq < static_cast<std::size_t>(min_df)) continue;
    if (static_cast<double>(freq) > max_df) continue;
    kept.push_back({tok, freq});
  }
  if (kept.empty()) throw ValidationError("build_vocab: empty vocabulary");
  std::sort(kept.begin(), kept.end());
  Vocabulary v;
  v.min_df = min_df;
  v.max_df_frac = max_df_frac;
  v.tokens.reserve(kept.size());
  v.doc_freq.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    v.tokens.push_back(kept[i].first);
    v.doc_freq.push_back(kept[i].second);
    v.index[kept[i].first] = static_cast<int>(i);
  }
  return v;
}

}  // namespace ugcs
