#include "ugc_sentinel/lda.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "testutil.hpp"

using namespace ugcs;

namespace {

Corpus corpus_of(std::initializer_list<const char*> texts) {
  Corpus c;
  int i = 0;
  for (const char* t : texts) {
    Review r;
    r.id = "r" + std::to_string(i++);
    r.text = t;
    c.reviews.push_back(r);
  }
  return c;
}

// Two disjoint 50-word vocabularies; each document draws all its tokens
// from one of them.
struct PlantedCorpus {
  Corpus corpus;
  std::vector<int> doc_topic;
  std::vector<std::vector<std::string>> topic_words;
};

PlantedCorpus make_two_topic_corpus(int n_docs, int doc_len,
                                    std::uint64_t seed) {
  PlantedCorpus out;
  out.topic_words.resize(2);
  for (int t = 0; t < 2; ++t)
    for (int w = 0; w < 50; ++w)
      out.topic_words[static_cast<std::size_t>(t)].push_back(
          (t == 0 ? "alpha" : "beta") + std::to_string(w));
  Rng rng(seed);
  for (int d = 0; d < n_docs; ++d) {
    const int topic = static_cast<int>(rng.next_below(2));
    out.doc_topic.push_back(topic);
    std::string text;
    for (int i = 0; i < doc_len; ++i) {
      if (i > 0) text += " ";
      text += out.topic_words[static_cast<std::size_t>(topic)]
                             [rng.next_below(50)];
    }
    Review r;
    r.id = "doc" + std::to_string(d);
    r.text = text;
    out.corpus.reviews.push_back(r);
  }
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

TEST(Vocab, EveryTokenIndexedByDefault) {
  auto c = corpus_of({"good price today", "price was good"});
  auto v = build_vocab(c, 1, 1.0);
  EXPECT_EQ(v.size(), 4u);  // good, price, today, was
  EXPECT_GE(v.lookup("good"), 0);
  EXPECT_GE(v.lookup("price"), 0);
  // Lexicographic indexing.
  EXPECT_LT(v.lookup("good"), v.lookup("price"));
}

TEST(Vocab, UbiquitousTokenPruned) {
  auto c = corpus_of({"price good", "price bad", "price fine"});
  auto v = build_vocab(c, 1, 0.9);
  EXPECT_EQ(v.lookup("price"), -1);  // in 100% of docs, above 90% cap
  EXPECT_GE(v.lookup("good"), 0);
}

TEST(Vocab, DeterministicIndexAssignment) {
  auto c = corpus_of({"zeta alpha mid", "mid epsilon"});
  auto v1 = build_vocab(c, 1, 1.0);
  auto v2 = build_vocab(c, 1, 1.0);
  EXPECT_EQ(v1.tokens, v2.tokens);
}

TEST(Vocab, EmptyVocabularySignaled) {
  auto c = corpus_of({"the the the"});
  EXPECT_THROW(build_vocab(c, 2, 1.0, {"the"}), ValidationError);
}

TEST(Lda, RecoversPlantedTopics) {
  auto planted = make_two_topic_corpus(200, 20, 4242);
  auto vocab = build_vocab(planted.corpus, 1, 1.0);
  LdaParams params;
  params.K = 2;
  params.alpha = 1.0;
  params.beta = 0.01;
  params.iters = 300;
  params.burn_in = 150;
  params.thinning = 5;
  params.seed = 7;
  params.check_conservation = true;  // exact integer conservation each sweep
  auto fit = fit_lda(planted.corpus, vocab, params);

  // Ground-truth rows: uniform over each planted 50-word vocabulary.
  std::vector<std::vector<double>> truth(2,
                                         std::vector<double>(vocab.size(), 0.0));
  for (int t = 0; t < 2; ++t)
    for (const auto& w : planted.topic_words[static_cast<std::size_t>(t)])
      truth[static_cast<std::size_t>(t)]
           [static_cast<std::size_t>(vocab.lookup(w))] = 1.0 / 50.0;

  const auto row0 = fit.model.topic_distribution(0);
  const auto row1 = fit.model.topic_distribution(1);
  const double direct =
      std::min(cosine(row0, truth[0]), cosine(row1, truth[1]));
  const double flipped =
      std::min(cosine(row0, truth[1]), cosine(row1, truth[0]));
  EXPECT_GE(std::max(direct, flipped), 0.95);
}

TEST(Lda, SeedDeterminism) {
  auto planted = make_two_topic_corpus(60, 12, 99);
  auto vocab = build_vocab(planted.corpus, 1, 1.0);
  LdaParams params;
  params.K = 2;
  params.iters = 60;
  params.burn_in = 30;
  params.thinning = 2;
  params.seed = 123;
  auto f1 = fit_lda(planted.corpus, vocab, params);
  auto f2 = fit_lda(planted.corpus, vocab, params);
  EXPECT_EQ(f1.model.topic_word, f2.model.topic_word);
  EXPECT_EQ(f1.model.topic_totals, f2.model.topic_totals);
  for (std::size_t d = 0; d < f1.doc_thetas.size(); ++d)
    EXPECT_EQ(f1.doc_thetas[d].theta, f2.doc_thetas[d].theta);
}

// Permuting document order may relabel topics but not the multiset of
// topic-word distributions.
TEST(Lda, DocOrderPermutationRelabelsOnly) {
  auto planted = make_two_topic_corpus(120, 16, 31);
  auto vocab = build_vocab(planted.corpus, 1, 1.0);
  LdaParams params;
  params.K = 2;
  // Sharp posteriors keep the sampled counts essentially deterministic, so
  // the two runs agree beyond Monte Carlo noise.
  params.alpha = 0.1;
  params.beta = 0.001;
  params.iters = 200;
  params.burn_in = 100;
  params.thinning = 2;
  params.seed = 5;
  auto f1 = fit_lda(planted.corpus, vocab, params);

  Corpus reversed = planted.corpus;
  std::reverse(reversed.reviews.begin(), reversed.reviews.end());
  auto f2 = fit_lda(reversed, vocab, params);

  const auto a0 = f1.model.topic_distribution(0);
  const auto a1 = f1.model.topic_distribution(1);
  const auto b0 = f2.model.topic_distribution(0);
  const auto b1 = f2.model.topic_distribution(1);
  const double direct = std::min(cosine(a0, b0), cosine(a1, b1));
  const double swapped = std::min(cosine(a0, b1), cosine(a1, b0));
  EXPECT_GE(std::max(direct, swapped), 1.0 - 1e-6);
}

TEST(Lda, KOneIsDegenerate) {
  auto c = corpus_of({"a b c", "c d e"});
  auto vocab = build_vocab(c, 1, 1.0);
  LdaParams params;
  params.K = 1;
  params.iters = 20;
  params.burn_in = 10;
  params.seed = 1;
  auto fit = fit_lda(c, vocab, params);
  for (const auto& td : fit.doc_thetas) {
    ASSERT_EQ(td.theta.size(), 1u);
    EXPECT_DOUBLE_EQ(td.theta[0], 1.0);
  }
}

TEST(Lda, SingleDocumentCorpusRuns) {
  auto c = corpus_of({"solo document with several words"});
  auto vocab = build_vocab(c, 1, 1.0);
  LdaParams params;
  params.K = 2;
  params.iters = 40;
  params.burn_in = 20;
  params.seed = 3;
  auto fit = fit_lda(c, vocab, params);
  ASSERT_EQ(fit.doc_thetas.size(), 1u);
  double sum = 0;
  for (const double t : fit.doc_thetas[0].theta) sum += t;
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(Lda, ZeroInVocabDocsExcluded) {
  Corpus c = corpus_of({"alpha beta", "zzz zzz"});
  auto vocab = build_vocab(corpus_of({"alpha beta gamma"}), 1, 1.0);
  LdaParams params;
  params.K = 2;
  params.iters = 20;
  params.burn_in = 10;
  params.seed = 1;
  auto fit = fit_lda(c, vocab, params);
  ASSERT_EQ(fit.excluded_doc_ids.size(), 1u);
  EXPECT_EQ(fit.excluded_doc_ids[0], "r1");
  EXPECT_EQ(fit.doc_ids.size(), 1u);
}

TEST(Lda, ThetaIsProbabilityVector) {
  auto planted = make_two_topic_corpus(40, 10, 77);
  auto vocab = build_vocab(planted.corpus, 1, 1.0);
  LdaParams params;
  params.K = 3;
  params.iters = 60;
  params.burn_in = 30;
  params.seed = 9;
  auto fit = fit_lda(planted.corpus, vocab, params);
  for (const auto& td : fit.doc_thetas) {
    double sum = 0;
    for (const double t : td.theta) {
      EXPECT_GE(t, 0.0);
      sum += t;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
  // Topic-word rows are distributions too.
  for (int k = 0; k < params.K; ++k) {
    const auto row = fit.model.topic_distribution(k);
    double sum = 0;
    for (const double p : row) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

// Analytic fold-in bound: with one word owned exclusively by topic 0 and a
// small document-topic prior, theta_0 dominates.
TEST(InferTheta, PlantedSingleWordDocument) {
  auto planted = make_two_topic_corpus(100, 15, 11);
  auto vocab = build_vocab(planted.corpus, 1, 1.0);
  LdaParams params;
  params.K = 2;
  params.alpha = 0.1;  // small prior sharpens the posterior
  params.iters = 200;
  params.burn_in = 100;
  params.seed = 2;
  auto fit = fit_lda(planted.corpus, vocab, params);

  // Find which fitted topic owns the alpha-vocabulary.
  const auto row0 = fit.model.topic_distribution(0);
  const int alpha_idx = vocab.lookup("alpha0");
  ASSERT_GE(alpha_idx, 0);
  const auto row1 = fit.model.topic_distribution(1);
  const int alpha_topic =
      row0[static_cast<std::size_t>(alpha_idx)] >
              row1[static_cast<std::size_t>(alpha_idx)]
          ? 0
          : 1;

  Review doc;
  doc.id = "probe";
  doc.text = "alpha0 alpha1 alpha2 alpha0";
  auto td = infer_theta(fit.model, doc, 300);
  EXPECT_GT(td.theta[static_cast<std::size_t>(alpha_topic)], 0.9);
}

TEST(InferTheta, AllOovIsUniformFlagged) {
  auto planted = make_two_topic_corpus(40, 10, 13);
  auto vocab = build_vocab(planted.corpus, 1, 1.0);
  LdaParams params;
  params.K = 2;
  params.iters = 40;
  params.burn_in = 20;
  params.seed = 4;
  auto fit = fit_lda(planted.corpus, vocab, params);
  Review doc;
  doc.id = "oov";
  doc.text = "zzz qqq www";
  auto td = infer_theta(fit.model, doc);
  EXPECT_TRUE(td.oov_fallback);
  EXPECT_DOUBLE_EQ(td.theta[0], 0.5);
  EXPECT_DOUBLE_EQ(td.theta[1], 0.5);
}

// Self-consistency: re-inferring a training document lands near its
// training-time theta (total variation < 0.1).
TEST(InferTheta, TrainingDocSelfConsistency) {
  auto planted = make_two_topic_corpus(100, 20, 17);
  auto vocab = build_vocab(planted.corpus, 1, 1.0);
  LdaParams params;
  params.K = 2;
  params.alpha = 1.0;
  params.iters = 200;
  params.burn_in = 100;
  params.seed = 6;
  auto fit = fit_lda(planted.corpus, vocab, params);
  for (const std::size_t d : {0ul, 5ul, 17ul}) {
    auto td = infer_theta(fit.model, planted.corpus.reviews[d], 300);
    double tv = 0;
    for (std::size_t k = 0; k < td.theta.size(); ++k)
      tv += std::abs(td.theta[k] - fit.doc_thetas[d].theta[k]);
    EXPECT_LT(tv / 2.0, 0.1) << "doc " << d;
  }
}

TEST(InferTheta, DeterministicForSameInput) {
  auto planted = make_two_topic_corpus(40, 10, 19);
  auto vocab = build_vocab(planted.corpus, 1, 1.0);
  LdaParams params;
  params.K = 2;
  params.iters = 40;
  params.burn_in = 20;
  params.seed = 8;
  auto fit = fit_lda(planted.corpus, vocab, params);
  auto t1 = infer_theta(fit.model, planted.corpus.reviews[3]);
  auto t2 = infer_theta(fit.model, planted.corpus.reviews[3]);
  EXPECT_EQ(t1.theta, t2.theta);
}

TEST(Features, TwentyComponentsHalvesSumToOne) {
  auto planted = make_two_topic_corpus(80, 15, 23);
  auto vocab = build_vocab(planted.corpus, 1, 1.0);
  LdaParams params;
  params.K = 10;
  params.iters = 60;
  params.burn_in = 30;
  params.seed = 10;
  auto m_auth = fit_lda(planted.corpus, vocab, params).model;
  params.seed = 11;
  auto m_dis = fit_lda(planted.corpus, vocab, params).model;

  auto f = build_features(planted.corpus.reviews[0], m_auth, m_dis);
  ASSERT_EQ(f.values.size(), 20u);
  double first = 0, second = 0;
  for (int i = 0; i < 10; ++i) first += f.values[static_cast<std::size_t>(i)];
  for (int i = 10; i < 20; ++i) second += f.values[static_cast<std::size_t>(i)];
  EXPECT_NEAR(first, 1.0, 1e-9);
  EXPECT_NEAR(second, 1.0, 1e-9);
}

TEST(Features, KMismatchRejected) {
  auto planted = make_two_topic_corpus(40, 10, 29);
  auto vocab = build_vocab(planted.corpus, 1, 1.0);
  LdaParams params;
  params.K = 10;
  params.iters = 30;
  params.burn_in = 10;
  params.seed = 1;
  auto m10 = fit_lda(planted.corpus, vocab, params).model;
  params.K = 12;
  auto m12 = fit_lda(planted.corpus, vocab, params).model;
  EXPECT_THROW(build_features(planted.corpus.reviews[0], m10, m12),
               ValidationError);
}

TEST(Model, JsonRoundTrip) {
  testutil::TempDir tmp("ldamodel");
  auto planted = make_two_topic_corpus(30, 8, 37);
  auto vocab = build_vocab(planted.corpus, 1, 1.0);
  LdaParams params;
  params.K = 2;
  params.iters = 30;
  params.burn_in = 10;
  params.seed = 2;
  auto model = fit_lda(planted.corpus, vocab, params).model;
  model.save(tmp.path("m.json"));
  auto back = LdaModel::load(tmp.path("m.json"));
  EXPECT_EQ(back.topic_word, model.topic_word);
  EXPECT_EQ(back.vocab.tokens, model.vocab.tokens);
  // Inference under the reloaded model matches.
  auto t1 = infer_theta(model, planted.corpus.reviews[0]);
  auto t2 = infer_theta(back, planted.corpus.reviews[0]);
  EXPECT_EQ(t1.theta, t2.theta);
}

}  // namespace
