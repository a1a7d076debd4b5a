#include "ugc_sentinel/corpus.hpp"

#include <gtest/gtest.h>

#include <set>

#include "testutil.hpp"

using namespace ugcs;

namespace {

Corpus make_corpus(std::initializer_list<std::pair<const char*, const char*>>
                       id_text) {
  Corpus c;
  for (const auto& [id, text] : id_text) {
    Review r;
    r.id = id;
    r.text = text;
    c.reviews.push_back(r);
  }
  return c;
}

TEST(Ingest, JsonlPreservesOrder) {
  testutil::TempDir tmp("ingest1");
  testutil::write_file(tmp.path("in.jsonl"),
                       R"({"id":"a","text":"first review"})"
                       "\n"
                       R"({"id":"b","text":"second review"})"
                       "\n"
                       R"({"id":"c","text":"third review"})"
                       "\n");
  auto res = ingest(tmp.path("in.jsonl"), Format::jsonl);
  ASSERT_EQ(res.corpus.size(), 3u);
  EXPECT_TRUE(res.rejections.empty());
  EXPECT_EQ(res.corpus.reviews[0].id, "a");
  EXPECT_EQ(res.corpus.reviews[1].id, "b");
  EXPECT_EQ(res.corpus.reviews[2].id, "c");
  for (const auto& r : res.corpus.reviews)
    EXPECT_EQ(r.label, Label::unknown);
}

TEST(Ingest, MissingTextRejectedWithLineNumber) {
  testutil::TempDir tmp("ingest2");
  testutil::write_file(tmp.path("in.jsonl"),
                       R"({"id":"a","text":"fine"})"
                       "\n"
                       R"({"id":"b"})"
                       "\n"
                       R"({"id":"c","text":"also fine"})"
                       "\n");
  auto res = ingest(tmp.path("in.jsonl"), Format::jsonl);
  EXPECT_EQ(res.corpus.size(), 2u);
  ASSERT_EQ(res.rejections.size(), 1u);
  EXPECT_EQ(res.rejections[0].line_no, 2u);
  EXPECT_EQ(res.rejections[0].reason, "missing text");
}

TEST(Ingest, DuplicateIdRejected) {
  testutil::TempDir tmp("ingest3");
  testutil::write_file(tmp.path("in.jsonl"),
                       R"({"id":"a","text":"one"})"
                       "\n"
                       R"({"id":"a","text":"two"})"
                       "\n");
  auto res = ingest(tmp.path("in.jsonl"), Format::jsonl);
  EXPECT_EQ(res.corpus.size(), 1u);
  ASSERT_EQ(res.rejections.size(), 1u);
  EXPECT_EQ(res.rejections[0].reason, "duplicate id");
}

TEST(Ingest, UnreadableFileThrows) {
  EXPECT_THROW(ingest("/nonexistent/nope.jsonl", Format::jsonl),
               ValidationError);
}

TEST(Ingest, CsvQuotedNewlinesRoundTrip) {
  testutil::TempDir tmp("ingest4");
  Corpus c;
  Review r;
  r.id = "x1";
  r.text = "line one\nline two, with comma and \"quotes\"";
  r.source = Source::amazon;
  r.label = Label::authentic;
  r.meta["rating"] = "5";
  c.reviews.push_back(r);
  Review r2;
  r2.id = "x2";
  r2.text = "plain";
  r2.label = Label::disinformative;
  r2.pair_id = "x1";
  c.reviews.push_back(r2);

  emit(c, tmp.path("out.csv"), Format::csv);
  auto res = ingest(tmp.path("out.csv"), Format::csv);
  ASSERT_TRUE(res.rejections.empty());
  ASSERT_EQ(res.corpus.size(), 2u);
  EXPECT_EQ(res.corpus.reviews[0], c.reviews[0]);
  EXPECT_EQ(res.corpus.reviews[1], c.reviews[1]);
}

// Round-trip property: ingest(emit(c)) == c for generated corpora, both
// formats, byte-exact text.
TEST(Ingest, RoundTripPropertyJsonlAndCsv) {
  testutil::TempDir tmp("roundtrip");
  Rng rng(20240817);
  for (int iter = 0; iter < 20; ++iter) {
    Corpus c;
    const std::size_t n = 1 + rng.next_below(12);
    for (std::size_t i = 0; i < n; ++i) {
      Review r;
      r.id = "r" + std::to_string(iter) + "_" + std::to_string(i);
      std::string text = "t";
      const std::size_t len = 1 + rng.next_below(40);
      static const char* units[] = {"a",  "bc", " ",  "XYZ", ",", "\"", "'",
                                    "\n", "\xC3\xA9", ".",  "!", "?",  "0123",
                                    ";",  "  "};
      for (std::size_t k = 0; k < len; ++k)
        text += units[rng.next_below(std::size(units))];
      r.text = text;
      r.source = static_cast<Source>(rng.next_below(3));
      if (rng.next_below(2) == 0) r.meta["k"] = "v" + std::to_string(i);
      c.reviews.push_back(r);
    }
    emit(c, tmp.path("c.jsonl"), Format::jsonl);
    auto back = ingest(tmp.path("c.jsonl"), Format::jsonl);
    ASSERT_TRUE(back.rejections.empty());
    ASSERT_EQ(back.corpus.reviews, c.reviews) << "jsonl iter " << iter;

    emit(c, tmp.path("c.csv"), Format::csv);
    auto back2 = ingest(tmp.path("c.csv"), Format::csv);
    ASSERT_TRUE(back2.rejections.empty());
    ASSERT_EQ(back2.corpus.reviews, c.reviews) << "csv iter " << iter;
  }
}

TEST(Filter, LengthQuartilesKeepMiddle) {
  auto c = make_corpus({{"a", ""}, {"b", ""}, {"c", ""}, {"d", ""}});
  c.reviews[0].text = std::string(10, 'x');
  c.reviews[1].text = std::string(20, 'x');
  c.reviews[2].text = std::string(30, 'x');
  c.reviews[3].text = std::string(40, 'x');
  FilterRules rules;
  rules.non_english = false;
  rules.dedup = false;
  auto [out, report] = filter_corpus(c, rules);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.reviews[0].id, "b");
  EXPECT_EQ(out.reviews[1].id, "c");
  EXPECT_EQ(report.length_removed, 2u);
  EXPECT_EQ(report.length_q1, 20u);
  EXPECT_EQ(report.length_q3, 30u);
}

TEST(Filter, LengthBoundaryTiesKept) {
  Corpus c;
  for (int i = 0; i < 8; ++i) {
    Review r;
    r.id = "r" + std::to_string(i);
    // lengths: 5,10,10,10,10,10,10,50 -> q1 boundary 10, q3 boundary 10
    const int len = (i == 0) ? 5 : (i == 7 ? 50 : 10);
    r.text = std::string(len, 'a' + i);
    c.reviews.push_back(r);
  }
  FilterRules rules;
  rules.non_english = false;
  rules.dedup = false;
  auto [out, report] = filter_corpus(c, rules);
  EXPECT_EQ(out.size(), 6u);  // the six length-10 reviews survive
  EXPECT_EQ(report.length_removed, 2u);
}

TEST(Filter, DedupKeepsFirst) {
  auto c = make_corpus({{"a", "same   text"},
                        {"b", "same text"},
                        {"c", "different text"}});
  FilterRules rules;
  rules.non_english = false;
  rules.length_quartiles = false;
  auto [out, report] = filter_corpus(c, rules);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.reviews[0].id, "a");  // whitespace-collapsed match, first kept
  EXPECT_EQ(report.dedup_removed, 1u);
}

TEST(Filter, NonEnglishRemoved) {
  auto c = make_corpus(
      {{"fr", "Tr\xC3\xA8s bon produit tr\xC3\xA8s cher"},
       {"en", "Good product, works as expected and ships quickly"},
       {"name", "Bought this for Ren\xC3\xA9\x65 and she loves it, great "
                "quality for the price and shipping was fast"}});
  FilterRules rules;
  rules.length_quartiles = false;
  rules.dedup = false;
  auto [out, report] = filter_corpus(c, rules);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.reviews[0].id, "en");
  EXPECT_EQ(out.reviews[1].id, "name");  // single accented name is spared
  EXPECT_EQ(report.non_english_removed, 1u);
}

// Character-class counting oracle for the non-English rule.
TEST(Filter, NonEnglishThresholdOracle) {
  // 2 of 22 letters accented = 9.1% > 5% -> removed.
  const std::string fr = "Tr\xC3\xA8s bon produit tr\xC3\xA8s cher";
  std::size_t letters = 0, foreign = 0;
  std::size_t i = 0;
  while (i < fr.size()) {
    char32_t cp = text::decode_utf8(fr, i);
    if (text::is_ascii_letter(cp)) ++letters;
    else if (text::is_nonascii_letter(cp)) {
      ++letters;
      ++foreign;
    }
  }
  EXPECT_EQ(letters, 22u);
  EXPECT_EQ(foreign, 2u);
  EXPECT_GT(text::foreign_letter_fraction(fr), 0.05);
}

TEST(Filter, EmptyAfterFilteringSignaled) {
  auto c = make_corpus({{"a", "dup"}, {"b", "dup"}});
  FilterRules rules;
  rules.non_english = false;
  rules.length_quartiles = true;
  rules.dedup = true;
  // Two identical lengths: length filter keeps both; dedup removes one;
  // then force emptiness via non_english on pure CJK text instead.
  auto cjk = make_corpus({{"a", "\xE5\xBE\x88\xE5\xA5\xBD"}});
  FilterRules r2;
  EXPECT_THROW(filter_corpus(cjk, r2), ValidationError);
  (void)c;
}

TEST(Filter, NonEnglishAndDedupIdempotent) {
  auto c = make_corpus({{"a", "good product"},
                        {"b", "good  product"},
                        {"c", "tr\xC3\xA8s cher tr\xC3\xA8s"},
                        {"d", "another review entirely"}});
  FilterRules rules;
  rules.length_quartiles = false;
  auto [once, rep1] = filter_corpus(c, rules);
  auto [twice, rep2] = filter_corpus(once, rules);
  EXPECT_EQ(once.reviews, twice.reviews);
  EXPECT_EQ(rep2.non_english_removed, 0u);
  EXPECT_EQ(rep2.dedup_removed, 0u);
}

TEST(Sample, FullCorpusIsPermutation) {
  auto c = make_corpus({{"a", "1"}, {"b", "2"}, {"c", "3"}});
  auto s = sample(c, 3, 99);
  std::set<std::string> in_ids, out_ids;
  for (const auto& r : c.reviews) in_ids.insert(r.id);
  for (const auto& r : s.reviews) out_ids.insert(r.id);
  EXPECT_EQ(in_ids, out_ids);
}

TEST(Sample, DeterministicUnderSeed) {
  Corpus c;
  for (int i = 0; i < 10; ++i) {
    Review r;
    r.id = "r" + std::to_string(i);
    r.text = "text " + std::to_string(i);
    c.reviews.push_back(r);
  }
  auto s1 = sample(c, 5, 1234);
  auto s2 = sample(c, 5, 1234);
  ASSERT_EQ(s1.reviews.size(), 5u);
  EXPECT_EQ(s1.reviews, s2.reviews);
  // Member of original corpus, no duplicates.
  std::set<std::string> ids;
  for (const auto& r : s1.reviews) EXPECT_TRUE(ids.insert(r.id).second);
}

TEST(Sample, NTooLargeThrows) {
  auto c = make_corpus({{"a", "1"}});
  EXPECT_THROW(sample(c, 2, 0), ValidationError);
}

TEST(Split, TenReviews811) {
  Corpus c;
  for (int i = 0; i < 10; ++i) {
    Review r;
    r.id = "r" + std::to_string(i);
    r.text = "text";
    c.reviews.push_back(r);
  }
  SplitSpec spec;
  spec.seed = 7;
  auto parts = split(c, spec);
  EXPECT_EQ(parts[0].size(), 8u);
  EXPECT_EQ(parts[1].size(), 1u);
  EXPECT_EQ(parts[2].size(), 1u);
}

// Counting oracle at the paper's scale: 9,999 pairs split 80-10-10 by
// largest remainder gives 7,999/1,000/1,000 pairs.
TEST(Split, PairAwarePaperScaleCounts) {
  Corpus c;
  for (int i = 0; i < 9999; ++i) {
    Review a;
    a.id = "a" + std::to_string(i);
    a.text = "authentic";
    a.label = Label::authentic;
    Review d;
    d.id = "d" + std::to_string(i);
    d.text = "disinformative";
    d.label = Label::disinformative;
    d.pair_id = a.id;
    c.reviews.push_back(a);
    c.reviews.push_back(d);
  }
  SplitSpec spec;
  spec.seed = 21;
  spec.pair_aware = true;
  auto parts = split(c, spec);
  EXPECT_EQ(parts[0].size(), 2u * 7999u);
  EXPECT_EQ(parts[1].size(), 2u * 1000u);
  EXPECT_EQ(parts[2].size(), 2u * 1000u);

  // No pair straddles partitions.
  for (const auto& part : parts) {
    std::set<std::string> ids;
    for (const auto& r : part.reviews) ids.insert(r.id);
    for (const auto& r : part.reviews)
      if (r.pair_id) EXPECT_TRUE(ids.count(*r.pair_id));
  }
}

TEST(Split, DisjointExhaustiveDeterministic) {
  Corpus c;
  for (int i = 0; i < 23; ++i) {
    Review r;
    r.id = "r" + std::to_string(i);
    r.text = "text";
    c.reviews.push_back(r);
  }
  SplitSpec spec;
  spec.seed = 5;
  auto p1 = split(c, spec);
  auto p2 = split(c, spec);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(p1[k].reviews, p2[k].reviews);
  std::set<std::string> all;
  std::size_t total = 0;
  for (const auto& part : p1) {
    total += part.size();
    for (const auto& r : part.reviews)
      EXPECT_TRUE(all.insert(r.id).second) << "overlapping partitions";
  }
  EXPECT_EQ(total, c.size());
}

TEST(Split, DanglingPairIdThrows) {
  Corpus c;
  Review d;
  d.id = "d0";
  d.text = "x";
  d.label = Label::disinformative;
  d.pair_id = "missing";
  c.reviews.push_back(d);
  for (int i = 0; i < 9; ++i) {
    Review r;
    r.id = "r" + std::to_string(i);
    r.text = "y";
    c.reviews.push_back(r);
  }
  SplitSpec spec;
  spec.pair_aware = true;
  EXPECT_THROW(split(c, spec), ValidationError);
}

TEST(TokenFrequencies, BasicAndStopwords) {
  auto c = make_corpus({{"a", "good good price"}});
  auto t = token_frequencies(c, {});
  ASSERT_EQ(t.entries.size(), 2u);
  EXPECT_EQ(t.entries[0], (std::pair<std::string, std::size_t>{"good", 2}));
  EXPECT_EQ(t.entries[1], (std::pair<std::string, std::size_t>{"price", 1}));

  auto t2 = token_frequencies(c, {"good"});
  ASSERT_EQ(t2.entries.size(), 1u);
  EXPECT_EQ(t2.entries[0].first, "price");
}

TEST(TokenFrequencies, TiesBrokenLexicographically) {
  auto c = make_corpus({{"a", "beta alpha Beta ALPHA gamma"}});
  auto t = token_frequencies(c, {});
  ASSERT_EQ(t.entries.size(), 3u);
  EXPECT_EQ(t.entries[0].first, "alpha");
  EXPECT_EQ(t.entries[1].first, "beta");
  EXPECT_EQ(t.entries[2].first, "gamma");
}

// Naive per-document recount oracle.
TEST(TokenFrequencies, MatchesNaiveRecount) {
  auto c = make_corpus({{"a", "The price, the PRICE; don't ask!"},
                        {"b", "price quality price"},
                        {"c", "Tr\xC3\xA8s bien"}});
  auto t = token_frequencies(c, {"the"});
  std::map<std::string, std::size_t> naive;
  for (const auto& r : c.reviews)
    for (const auto& tok : text::tokenize(r.text))
      if (tok != "the") ++naive[tok];
  std::map<std::string, std::size_t> got(t.entries.begin(), t.entries.end());
  EXPECT_EQ(got, naive);
  EXPECT_EQ(naive["price"], 4u);
  EXPECT_EQ(naive.count("don't"), 1u);
}

}  // namespace
