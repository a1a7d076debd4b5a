#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ugc_sentinel/corpus.hpp"
#include "ugc_sentinel/rng.hpp"
#include "ugc_sentinel/sha256.hpp"

namespace ugcs {

struct EmbeddingVector {
  std::string id;
  std::vector<double> values;

  bool operator==(const EmbeddingVector&) const = default;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  // One vector per input text, all of the same dimension.
  virtual std::vector<std::vector<double>> embed(
      const std::vector<std::string>& texts) = 0;
};

// Deterministic stand-in for offline runs: a unit-free Gaussian vector
// seeded by the text hash. Carries no semantics beyond determinism.
class SyntheticEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit SyntheticEmbeddingProvider(std::size_t dim = 64) : dim_(dim) {}

  std::string id() const override {
    return "synthetic-" + std::to_string(dim_);
  }

  std::vector<std::vector<double>> embed(
      const std::vector<std::string>& texts) override {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      Rng rng(fnv1a64(t));
      std::vector<double> v(dim_);
      for (auto& x : v) x = rng.next_gaussian();
      out.push_back(std::move(v));
    }
    return out;
  }

 private:
  std::size_t dim_;
};

// Fixture store: JSONL of {"id": ..., "vector": [...]}, used for offline
// tests and replays.
class FixtureEmbeddingStore {
 public:
  explicit FixtureEmbeddingStore(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw ValidationError("embedding fixture: cannot read " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded())
        throw ValidationError("embedding fixture: malformed JSON at line " +
                              std::to_string(line_no));
      if (line_no == 1 && j.contains("_provenance")) continue;
      std::vector<double> v = j.at("vector").get<std::vector<double>>();
      if (dim_ == 0) dim_ = v.size();
      if (v.size() != dim_)
        throw ValidationError(
            "embedding fixture: inconsistent dimension at line " +
            std::to_string(line_no));
      vectors_[j.at("id").get<std::string>()] = std::move(v);
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

  const std::vector<double>& lookup(const std::string& id) const {
    auto it = vectors_.find(id);
    if (it == vectors_.end())
      throw ValidationError("embedding fixture: no vector for id " + id);
    return it->second;
  }

 private:
  std::map<std::string, std::vector<double>> vectors_;
  std::size_t dim_ = 0;
};

// One embedding per review. Vectors are cached by text hash, so identical
// texts cost a single provider call; dimensions must agree within a run.
inline std::vector<EmbeddingVector> embed_corpus(
    EmbeddingProvider& provider, const Corpus& c,
    const std::string& cache_dir = "") {
  namespace fs = std::filesystem;
  const bool caching = !cache_dir.empty();
  if (caching) fs::create_directories(cache_dir);

  auto cache_path = [&](const std::string& text) {
    const std::string key =
        sha256_hex("embed|" + provider.id() + "|" + text);
    return fs::path(cache_dir) / key.substr(0, 2) / (key + ".json");
  };

  std::map<std::string, std::vector<double>> by_text;
  std::vector<std::string> to_compute;
  for (const auto& r : c.reviews) {
    if (by_text.count(r.text)) continue;
    if (caching) {
      std::ifstream in(cache_path(r.text), std::ios::binary);
      if (in) {
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (!j.is_discarded() && j.contains("vector")) {
          by_text[r.text] = j["vector"].get<std::vector<double>>();
          continue;
        }
      }
    }
    by_text[r.text] = {};
    to_compute.push_back(r.text);
  }

  if (!to_compute.empty()) {
    auto vectors = provider.embed(to_compute);
    if (vectors.size() != to_compute.size())
      throw ProviderError("embed_corpus: provider returned " +
                          std::to_string(vectors.size()) + " vectors for " +
                          std::to_string(to_compute.size()) + " texts");
    for (std::size_t i = 0; i < to_compute.size(); ++i) {
      by_text[to_compute[i]] = vectors[i];
      if (caching) {
        const auto p = cache_path(to_compute[i]);
        fs::create_directories(p.parent_path());
        nlohmann::json j;
        j["vector"] = vectors[i];
        const auto tmp = p.string() + ".tmp";
        {
          std::ofstream os(tmp, std::ios::binary);
          os << j.dump();
        }
        fs::rename(tmp, p);
      }
    }
  }

  std::size_t dim = 0;
  std::vector<EmbeddingVector> out;
  out.reserve(c.size());
  for (const auto& r : c.reviews) {
    const auto& v = by_text.at(r.text);
    if (dim == 0) dim = v.size();
    if (v.size() != dim)
      throw ValidationError("embed_corpus: inconsistent dimensions in run");
    out.push_back({r.id, v});
  }
  return out;
}

// Fixture-backed variant of embed_corpus: vectors come from a file keyed by
// review id.
inline std::vector<EmbeddingVector> embed_corpus_fixture(
    const FixtureEmbeddingStore& store, const Corpus& c) {
  std::vector<EmbeddingVector> out;
  out.reserve(c.size());
  for (const auto& r : c.reviews) out.push_back({r.id, store.lookup(r.id)});
  return out;
}

inline void write_embeddings(const std::vector<EmbeddingVector>& vectors,
                             const std::string& path,
                             const Provenance* prov = nullptr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("write_embeddings: cannot write " + path);
  if (prov != nullptr) os << prov->jsonl_line();
  for (const auto& v : vectors) {
    nlohmann::json j;
    j["id"] = v.id;
    j["vector"] = v.values;
    os << j.dump() << "\n";
  }
}

}  // namespace ugcs
