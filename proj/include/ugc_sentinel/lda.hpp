#pragma once

#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "ugc_sentinel/corpus.hpp"
#include "ugc_sentinel/rng.hpp"
#include "ugc_sentinel/sha256.hpp"
#include "ugc_sentinel/vocab.hpp"

namespace ugcs {

struct TopicDistribution {
  std::vector<double> theta;  // sums to 1
  bool oov_fallback = false;  // uniform because nothing was in vocabulary
};

struct LdaParams {
  int K = 10;
  double alpha = 5.0;  // symmetric document-topic prior (50/K at K=10)
  double beta = 0.01;  // symmetric topic-word prior
  int iters = 1000;
  int burn_in = 500;
  int thinning = 10;
  std::uint64_t seed = 0;
  // Re-sums the topic-word counts after every sweep and aborts on drift.
  bool check_conservation = false;

  void validate() const {
    if (K < 1) throw ValidationError("lda: K must be >= 1");
    if (alpha <= 0 || beta <= 0)
      throw ValidationError("lda: priors must be positive");
    if (iters <= burn_in)
      throw ValidationError("lda: iters must exceed burn_in");
    if (thinning < 1) throw ValidationError("lda: thinning must be >= 1");
  }
};

// Topic-word statistics averaged over post-burn-in Gibbs samples.
struct LdaModel {
  LdaParams params;
  Vocabulary vocab;
  std::vector<std::vector<double>> topic_word;  // K x V
  std::vector<double> topic_totals;             // K
  int samples_averaged = 0;
  std::vector<std::string> iteration_log;

  double phi(int k, int w) const {
    const double vbeta =
        static_cast<double>(vocab.size()) * params.beta;
    return (topic_word[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)] +
            params.beta) /
           (topic_totals[static_cast<std::size_t>(k)] + vbeta);
  }

  // Row of the smoothed topic-word distribution; sums to 1.
  std::vector<double> topic_distribution(int k) const {
    std::vector<double> row(vocab.size());
    for (std::size_t w = 0; w < vocab.size(); ++w)
      row[w] = phi(k, static_cast<int>(w));
    return row;
  }

  nlohmann::json to_json() const {
    return {{"K", params.K},
            {"alpha", params.alpha},
            {"beta", params.beta},
            {"iters", params.iters},
            {"burn_in", params.burn_in},
            {"thinning", params.thinning},
            {"seed", params.seed},
            {"vocab", vocab.to_json()},
            {"topic_word", topic_word},
            {"topic_totals", topic_totals},
            {"samples_averaged", samples_averaged}};
  }

  static LdaModel from_json(const nlohmann::json& j) {
    LdaModel m;
    m.params.K = j.at("K");
    m.params.alpha = j.at("alpha");
    m.params.beta = j.at("beta");
    m.params.iters = j.value("iters", 1000);
    m.params.burn_in = j.value("burn_in", 500);
    m.params.thinning = j.value("thinning", 10);
    m.params.seed = j.value("seed", 0ull);
    m.vocab = Vocabulary::from_json(j.at("vocab"));
    m.topic_word = j.at("topic_word").get<std::vector<std::vector<double>>>();
    m.topic_totals = j.at("topic_totals").get<std::vector<double>>();
    m.samples_averaged = j.value("samples_averaged", 0);
    return m;
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("LdaModel::save: cannot write " + path);
    os << to_json().dump() << "\n";
  }

  static LdaModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("LdaModel::load: cannot read " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }
};

struct LdaFitResult {
  LdaModel model;
  // Per training document (input order, excluded docs omitted): averaged
  // smoothed theta.
  std::vector<TopicDistribution> doc_thetas;
  std::vector<std::string> doc_ids;
  std::vector<std::string> excluded_doc_ids;  // zero in-vocabulary tokens
};

// Collapsed Gibbs sampling over token-topic assignments.
inline LdaFitResult fit_lda(const Corpus& c, const Vocabulary& vocab,
                            const LdaParams& params) {
  params.validate();
  if (vocab.size() == 0) throw ValidationError("fit_lda: empty vocabulary");

  LdaFitResult result;
  const int K = params.K;
  const auto V = vocab.size();

  // Tokenize and drop out-of-vocabulary tokens.
  std::vector<std::vector<int>> docs;
  for (const auto& r : c.reviews) {
    std::vector<int> ids;
    for (const auto& tok : text::tokenize(r.text)) {
      const int w = vocab.lookup(tok);
      if (w >= 0) ids.push_back(w);
    }
    if (ids.empty()) {
      result.excluded_doc_ids.push_back(r.id);
      continue;
    }
    result.doc_ids.push_back(r.id);
    docs.push_back(std::move(ids));
  }
  if (docs.empty())
    throw ValidationError("fit_lda: no documents with in-vocabulary tokens");

  const std::size_t D = docs.size();
  std::size_t total_tokens = 0;
  for (const auto& d : docs) total_tokens += d.size();

  Rng rng(params.seed);
  std::vector<std::vector<int>> z(D);
  std::vector<std::vector<int>> n_dk(D, std::vector<int>(K, 0));
  std::vector<std::vector<int>> n_kw(
      static_cast<std::size_t>(K), std::vector<int>(V, 0));
  std::vector<int> n_k(static_cast<std::size_t>(K), 0);

  for (std::size_t d = 0; d < D; ++d) {
    z[d].resize(docs[d].size());
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(K)));
      z[d][i] = k;
      ++n_dk[d][k];
      ++n_kw[static_cast<std::size_t>(k)][static_cast<std::size_t>(docs[d][i])];
      ++n_k[static_cast<std::size_t>(k)];
    }
  }

  const double vbeta = static_cast<double>(V) * params.beta;
  std::vector<double> p(static_cast<std::size_t>(K));

  std::vector<std::vector<double>> acc_kw(
      static_cast<std::size_t>(K), std::vector<double>(V, 0.0));
  std::vector<double> acc_k(static_cast<std::size_t>(K), 0.0);
  std::vector<std::vector<double>> acc_dk(D, std::vector<double>(K, 0.0));
  int samples = 0;

  for (int sweep = 0; sweep < params.iters; ++sweep) {
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t i = 0; i < docs[d].size(); ++i) {
        const int w = docs[d][i];
        const int old_k = z[d][i];
        --n_dk[d][old_k];
        --n_kw[static_cast<std::size_t>(old_k)][static_cast<std::size_t>(w)];
        --n_k[static_cast<std::size_t>(old_k)];

        double sum = 0.0;
        for (int k = 0; k < K; ++k) {
          const double val =
              (n_dk[d][k] + params.alpha) *
              (n_kw[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)] +
               params.beta) /
              (n_k[static_cast<std::size_t>(k)] + vbeta);
          sum += val;
          p[static_cast<std::size_t>(k)] = sum;
        }
        const double u = rng.next_double() * sum;
        int new_k = K - 1;
        for (int k = 0; k < K; ++k) {
          if (u < p[static_cast<std::size_t>(k)]) {
            new_k = k;
            break;
          }
        }
        z[d][i] = new_k;
        ++n_dk[d][new_k];
        ++n_kw[static_cast<std::size_t>(new_k)][static_cast<std::size_t>(w)];
        ++n_k[static_cast<std::size_t>(new_k)];
      }
    }

    if (params.check_conservation) {
      std::size_t matrix_sum = 0;
      for (int k = 0; k < K; ++k)
        matrix_sum += static_cast<std::size_t>(std::accumulate(
            n_kw[static_cast<std::size_t>(k)].begin(),
            n_kw[static_cast<std::size_t>(k)].end(), 0));
      if (matrix_sum != total_tokens)
        throw Error("fit_lda: token-count conservation violated at sweep " +
                    std::to_string(sweep));
    }

    if (sweep >= params.burn_in &&
        (sweep - params.burn_in) % params.thinning == 0) {
      for (int k = 0; k < K; ++k) {
        acc_k[static_cast<std::size_t>(k)] += n_k[static_cast<std::size_t>(k)];
        for (std::size_t w = 0; w < V; ++w)
          acc_kw[static_cast<std::size_t>(k)][w] +=
              n_kw[static_cast<std::size_t>(k)][w];
      }
      for (std::size_t d = 0; d < D; ++d)
        for (int k = 0; k < K; ++k) acc_dk[d][k] += n_dk[d][k];
      ++samples;
    }
  }

  LdaModel model;
  model.params = params;
  model.vocab = vocab;
  model.samples_averaged = samples;
  model.topic_word.assign(static_cast<std::size_t>(K),
                          std::vector<double>(V, 0.0));
  model.topic_totals.assign(static_cast<std::size_t>(K), 0.0);
  for (int k = 0; k < K; ++k) {
    model.topic_totals[static_cast<std::size_t>(k)] =
        acc_k[static_cast<std::size_t>(k)] / samples;
    for (std::size_t w = 0; w < V; ++w)
      model.topic_word[static_cast<std::size_t>(k)][w] =
          acc_kw[static_cast<std::size_t>(k)][w] / samples;
  }
  model.iteration_log.push_back(
      "sweeps=" + std::to_string(params.iters) + " burn_in=" +
      std::to_string(params.burn_in) + " thinning=" +
      std::to_string(params.thinning) + " samples=" + std::to_string(samples) +
      " docs=" + std::to_string(D) + " tokens=" + std::to_string(total_tokens) +
      " seed=" + std::to_string(params.seed) + " rng=" + Rng::kAlgorithm);

  result.doc_thetas.reserve(D);
  const double kalpha = static_cast<double>(K) * params.alpha;
  for (std::size_t d = 0; d < D; ++d) {
    TopicDistribution td;
    td.theta.resize(static_cast<std::size_t>(K));
    const double denom = static_cast<double>(docs[d].size()) + kalpha;
    for (int k = 0; k < K; ++k)
      td.theta[static_cast<std::size_t>(k)] =
          (acc_dk[d][k] / samples + params.alpha) / denom;
    result.doc_thetas.push_back(std::move(td));
  }
  result.model = std::move(model);
  return result;
}

// Fold-in inference: topic-word statistics stay frozen, only the document's
// own assignments are sampled. Deterministic for a given (model, text).
inline TopicDistribution infer_theta(const LdaModel& model, const Review& doc,
                                     int iters = 100) {
  const int K = model.params.K;
  std::vector<int> ids;
  for (const auto& tok : text::tokenize(doc.text)) {
    const int w = model.vocab.lookup(tok);
    if (w >= 0) ids.push_back(w);
  }
  TopicDistribution td;
  td.theta.assign(static_cast<std::size_t>(K),
                  1.0 / static_cast<double>(K));
  if (ids.empty()) {
    td.oov_fallback = true;
    return td;
  }

  Rng rng(model.params.seed ^ fnv1a64(doc.text));
  std::vector<int> z(ids.size());
  std::vector<int> n_dk(static_cast<std::size_t>(K), 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(K)));
    z[i] = k;
    ++n_dk[static_cast<std::size_t>(k)];
  }

  std::vector<double> p(static_cast<std::size_t>(K));
  std::vector<double> acc(static_cast<std::size_t>(K), 0.0);
  int samples = 0;
  const int half = iters / 2;
  for (int sweep = 0; sweep < iters; ++sweep) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int w = ids[i];
      --n_dk[static_cast<std::size_t>(z[i])];
      double sum = 0.0;
      for (int k = 0; k < K; ++k) {
        sum += (n_dk[static_cast<std::size_t>(k)] + model.params.alpha) *
               model.phi(k, w);
        p[static_cast<std::size_t>(k)] = sum;
      }
      const double u = rng.next_double() * sum;
      int new_k = K - 1;
      for (int k = 0; k < K; ++k) {
        if (u < p[static_cast<std::size_t>(k)]) {
          new_k = k;
          break;
        }
      }
      z[i] = new_k;
      ++n_dk[static_cast<std::size_t>(new_k)];
    }
    if (sweep >= half) {
      for (int k = 0; k < K; ++k)
        acc[static_cast<std::size_t>(k)] += n_dk[static_cast<std::size_t>(k)];
      ++samples;
    }
  }

  const double denom = static_cast<double>(ids.size()) +
                       static_cast<double>(K) * model.params.alpha;
  for (int k = 0; k < K; ++k)
    td.theta[static_cast<std::size_t>(k)] =
        (acc[static_cast<std::size_t>(k)] / samples + model.params.alpha) /
        denom;
  return td;
}

// --------------------------------------------------------------------------
// Classifier features: authentic-model theta followed by disinfo-model
// theta.

struct TopicFeatureVector {
  std::string id;
  Label label = Label::unknown;
  std::vector<double> values;  // 2K, halves each summing to 1

  bool operator==(const TopicFeatureVector&) const = default;
};

inline TopicFeatureVector build_features(const Review& doc,
                                         const LdaModel& m_auth,
                                         const LdaModel& m_dis,
                                         int infer_iters = 100) {
  if (m_auth.params.K != m_dis.params.K)
    throw ValidationError(
        "build_features: topic-count mismatch between models (" +
        std::to_string(m_auth.params.K) + " vs " +
        std::to_string(m_dis.params.K) + ")");
  auto ta = infer_theta(m_auth, doc, infer_iters);
  auto td = infer_theta(m_dis, doc, infer_iters);
  TopicFeatureVector f;
  f.id = doc.id;
  f.label = doc.label;
  f.values = ta.theta;
  f.values.insert(f.values.end(), td.theta.begin(), td.theta.end());
  return f;
}

inline void write_features(const std::vector<TopicFeatureVector>& features,
                           const std::string& path,
                           const Provenance* prov = nullptr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("write_features: cannot write " + path);
  if (prov != nullptr) os << prov->jsonl_line();
  for (const auto& f : features) {
    nlohmann::json j;
    j["id"] = f.id;
    j["label"] = to_string(f.label);
    j["values"] = f.values;
    os << j.dump() << "\n";
  }
}

inline std::vector<TopicFeatureVector> read_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("read_features: cannot read " + path);
  std::vector<TopicFeatureVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ValidationError("read_features: malformed JSON at line " +
                            std::to_string(line_no));
    if (line_no == 1 && j.contains("_provenance")) continue;
    TopicFeatureVector f;
    f.id = j.at("id");
    f.label =
        label_from_string(j.value("label", "unknown")).value_or(Label::unknown);
    f.values = j.at("values").get<std::vector<double>>();
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace ugcs
