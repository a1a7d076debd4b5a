#include "ugc_sentinel/blend.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "testutil.hpp"

using namespace ugcs;

namespace {

EntityList pricing_list() {
  EntityList l;
  l.entities = {"Pricing"};
  return l;
}

NeseResult doc(const std::string& id, std::optional<int> price_score,
               Label label = Label::authentic,
               std::optional<std::string> pair_id = std::nullopt) {
  NeseResult r;
  r.id = id;
  r.label = label;
  r.pair_id = pair_id;
  if (price_score) r.detections.push_back({"Pricing", *price_score});
  return r;
}

// Synthetic pools: authentic mentions with probability p_a and scores near
// s_a; disinformative likewise.
struct PoolPair {
  std::vector<NeseResult> auth;
  std::vector<NeseResult> dis;
};

PoolPair synthetic_pools(std::size_t n_a, std::size_t n_d, double p_a,
                         int s_a, double p_d, int s_d, std::uint64_t seed) {
  Rng rng(seed);
  PoolPair pools;
  for (std::size_t i = 0; i < n_a; ++i) {
    const bool hit = rng.next_double() < p_a;
    const int jitter = static_cast<int>(rng.next_below(3)) - 1;
    const int score = std::clamp(s_a + jitter, 1, 7);
    pools.auth.push_back(doc("a" + std::to_string(i),
                             hit ? std::optional<int>(score) : std::nullopt));
  }
  for (std::size_t i = 0; i < n_d; ++i) {
    const bool hit = rng.next_double() < p_d;
    const int jitter = static_cast<int>(rng.next_below(3)) - 1;
    const int score = std::clamp(s_d + jitter, 1, 7);
    pools.dis.push_back(doc("d" + std::to_string(i),
                            hit ? std::optional<int>(score) : std::nullopt,
                            Label::disinformative, "x" + std::to_string(i)));
  }
  return pools;
}

TEST(BuildSubsample, CounterpartExclusion) {
  std::vector<NeseResult> auth, dis;
  for (int i = 0; i < 6; ++i) {
    auth.push_back(doc("a" + std::to_string(i), 5));
    dis.push_back(doc("d" + std::to_string(i), 2, Label::disinformative,
                      "a" + std::to_string(i)));
  }
  auto pools = build_subsample(auth, dis, 2, 42);
  ASSERT_EQ(pools.authentic.size(), 2u);
  // No sampled authentic id may appear as pair_id in the disinformative pool.
  std::set<std::string> sampled;
  for (const auto& a : pools.authentic) sampled.insert(a.id);
  for (const auto& d : pools.disinformative)
    EXPECT_FALSE(sampled.count(*d.pair_id))
        << d.id << " co-occurs with its counterpart";
  EXPECT_FALSE(pools.exclusion_log.empty());
}

TEST(BuildSubsample, DeterministicUnderSeed) {
  auto p = synthetic_pools(50, 50, 0.3, 6, 0.8, 2, 9);
  auto pools1 = build_subsample(p.auth, p.dis, 10, 1234);
  auto pools2 = build_subsample(p.auth, p.dis, 10, 1234);
  EXPECT_EQ(pools1.authentic, pools2.authentic);
  EXPECT_EQ(pools1.disinformative, pools2.disinformative);
}

TEST(BuildSubsample, InsufficientPoolSignaled) {
  std::vector<NeseResult> auth, dis;
  for (int i = 0; i < 4; ++i)
    auth.push_back(doc("a" + std::to_string(i), 5));
  // Only 3 disinformative docs, all paired with authentic docs.
  for (int i = 0; i < 3; ++i)
    dis.push_back(doc("d" + std::to_string(i), 2, Label::disinformative,
                      "a" + std::to_string(i)));
  EXPECT_THROW(build_subsample(auth, dis, 3, 7), ValidationError);
}

TEST(Sweep, BaselineRowIsAuthenticAggregateBitForBit) {
  auto p = synthetic_pools(100, 100, 0.25, 6, 0.8, 2, 11);
  auto pools = build_subsample(p.auth, p.dis, 50, 3);
  auto grid = make_grid(0.05, 0.5, 17);
  auto table = sweep(pools, grid, "Pricing", pricing_list());
  const auto base = aggregate(pools.authentic, "Pricing", pricing_list());
  ASSERT_FALSE(table.rows.empty());
  EXPECT_EQ(table.rows[0].alpha, 0.0);
  EXPECT_EQ(table.rows[0].n_disinfo, 0u);
  // Bit-for-bit equality, not approximate.
  EXPECT_EQ(table.rows[0].mention_freq, base.mention_freq);
  ASSERT_EQ(table.rows[0].avg_sentiment.has_value(),
            base.avg_sentiment.has_value());
  if (base.avg_sentiment)
    EXPECT_EQ(*table.rows[0].avg_sentiment, *base.avg_sentiment);
}

TEST(Sweep, OracleExactnessAtEveryGridPoint) {
  auto p = synthetic_pools(200, 200, 0.3, 6, 0.75, 2, 23);
  auto pools = build_subsample(p.auth, p.dis, 100, 5);
  auto grid = make_grid(0.025, 0.5, 29);
  auto table = sweep(pools, grid, "Pricing", pricing_list());
  const auto agg_a = aggregate(pools.authentic, "Pricing", pricing_list());
  ASSERT_EQ(table.rows.size(), grid.rates.size());
  for (std::size_t i = 0; i < grid.rates.size(); ++i) {
    const double alpha = grid.rates[i];
    auto subset = injected_subset(pools, grid, alpha);
    EntityAggregate agg_d;
    if (subset.empty()) {
      agg_d.entity = "Pricing";  // empty aggregate at alpha = 0
    } else {
      agg_d = aggregate(subset, "Pricing", pricing_list());
    }
    auto mix = closed_form_mix(agg_a, agg_d, alpha);
    EXPECT_EQ(table.rows[i].mention_freq, mix.mention_freq) << "alpha " << alpha;
    ASSERT_EQ(table.rows[i].avg_sentiment.has_value(),
              mix.avg_sentiment.has_value());
    if (mix.avg_sentiment)
      EXPECT_EQ(*table.rows[i].avg_sentiment, *mix.avg_sentiment)
          << "alpha " << alpha;
  }
}

TEST(Sweep, NestedInjections) {
  auto p = synthetic_pools(60, 60, 0.3, 6, 0.8, 2, 31);
  auto pools = build_subsample(p.auth, p.dis, 30, 7);
  auto grid = make_grid(0.1, 0.5, 41);
  std::vector<std::set<std::string>> sets;
  for (const double alpha : grid.rates) {
    auto subset = injected_subset(pools, grid, alpha);
    std::set<std::string> ids;
    for (const auto& r : subset) ids.insert(r.id);
    sets.push_back(ids);
  }
  for (std::size_t i = 1; i < sets.size(); ++i)
    for (const auto& id : sets[i - 1])
      EXPECT_TRUE(sets[i].count(id)) << "injection not nested at step " << i;
}

TEST(Sweep, DeterministicBytes) {
  testutil::TempDir tmp("sweepbytes");
  auto p = synthetic_pools(80, 80, 0.25, 6, 0.8, 2, 13);
  auto pools = build_subsample(p.auth, p.dis, 40, 19);
  auto grid = make_grid(0.05, 0.5, 37);
  auto t1 = sweep(pools, grid, "Pricing", pricing_list());
  auto t2 = sweep(pools, grid, "Pricing", pricing_list());
  write_sweep_csv(t1, tmp.path("a.csv"));
  write_sweep_csv(t2, tmp.path("b.csv"));
  EXPECT_EQ(testutil::read_file(tmp.path("a.csv")),
            testutil::read_file(tmp.path("b.csv")));
}

TEST(Sweep, PoolExhaustionSignaled) {
  auto p = synthetic_pools(50, 50, 0.3, 6, 0.8, 2, 43);
  auto pools = build_subsample(p.auth, p.dis, 30, 3);
  // alpha = 0.5 needs 30 docs; shrink the pool below that.
  pools.disinformative.resize(10);
  auto grid = make_grid(0.25, 0.5, 3);
  EXPECT_THROW(sweep(pools, grid, "Pricing", pricing_list()),
               ValidationError);
}

// Bracketing: the blended frequency always lies between the authentic and
// injected-subset frequencies; likewise for the mention-weighted sentiment.
TEST(Sweep, BracketingInvariant) {
  auto p = synthetic_pools(150, 150, 0.3, 6, 0.8, 2, 51);
  auto pools = build_subsample(p.auth, p.dis, 75, 29);
  auto grid = make_grid(0.05, 0.5, 53);
  auto table = sweep(pools, grid, "Pricing", pricing_list());
  const auto agg_a = aggregate(pools.authentic, "Pricing", pricing_list());
  for (std::size_t i = 1; i < grid.rates.size(); ++i) {
    auto subset = injected_subset(pools, grid, grid.rates[i]);
    ASSERT_FALSE(subset.empty());
    const auto agg_d = aggregate(subset, "Pricing", pricing_list());
    const double lo = std::min(agg_a.mention_freq, agg_d.mention_freq);
    const double hi = std::max(agg_a.mention_freq, agg_d.mention_freq);
    EXPECT_GE(table.rows[i].mention_freq, lo);
    EXPECT_LE(table.rows[i].mention_freq, hi);
    if (agg_a.avg_sentiment && agg_d.avg_sentiment &&
        table.rows[i].avg_sentiment) {
      const double slo = std::min(*agg_a.avg_sentiment, *agg_d.avg_sentiment);
      const double shi = std::max(*agg_a.avg_sentiment, *agg_d.avg_sentiment);
      EXPECT_GE(*table.rows[i].avg_sentiment, slo);
      EXPECT_LE(*table.rows[i].avg_sentiment, shi);
    }
  }
}

TEST(ClosedFormMix, SymmetryWhenPoolsAgree) {
  // f_a = f_d and s_a = s_d: the mix equals the common values at any alpha.
  // Alphas chosen so n_d is a multiple of 5 and f_d = 2/5 is attainable
  // exactly.
  for (const double alpha : {0.0, 0.2, 0.5}) {
    EntityAggregate a;
    a.entity = "Pricing";
    a.n_docs = 100;
    a.n_mentions = 40;
    a.score_sum = 240;  // mean 6
    a.mention_freq = 0.4;
    a.avg_sentiment = 6.0;
    const std::size_t n_d = injected_count(alpha, a.n_docs);
    ASSERT_EQ(n_d % 5, 0u);
    EntityAggregate d;
    d.entity = "Pricing";
    d.n_docs = n_d;
    d.n_mentions = n_d * 2 / 5;
    d.score_sum = static_cast<std::int64_t>(6 * d.n_mentions);
    auto mix = closed_form_mix(a, d, alpha);
    EXPECT_NEAR(mix.mention_freq, 0.4, 1e-12) << alpha;
    if (n_d > 0 || a.n_mentions > 0)
      EXPECT_NEAR(*mix.avg_sentiment, 6.0, 1e-12) << alpha;
  }
}

// Hand arithmetic oracle: n_a=100, f_a=0.2, s_a=6.0; n_d=100, f_d=0.8,
// s_d=2.0 at alpha=0.5. Mentions: 20 and 80; joint frequency (20+80)/200 =
// 0.5; mention-weighted sentiment (20*6 + 80*2)/100 = 2.8.
TEST(ClosedFormMix, HandArithmeticOracle) {
  EntityAggregate a;
  a.entity = "Pricing";
  a.n_docs = 100;
  a.n_mentions = 20;
  a.score_sum = 120;
  a.mention_freq = 0.2;
  a.avg_sentiment = 6.0;
  EntityAggregate d;
  d.entity = "Pricing";
  d.n_docs = 100;
  d.n_mentions = 80;
  d.score_sum = 160;
  d.mention_freq = 0.8;
  d.avg_sentiment = 2.0;
  auto mix = closed_form_mix(a, d, 0.5);
  EXPECT_DOUBLE_EQ(mix.mention_freq, 0.5);
  ASSERT_TRUE(mix.avg_sentiment.has_value());
  EXPECT_DOUBLE_EQ(*mix.avg_sentiment, 2.8);
}

TEST(ClosedFormMix, AlphaZeroLeavesAuthenticUnchanged) {
  EntityAggregate a;
  a.entity = "Pricing";
  a.n_docs = 73;
  a.n_mentions = 20;
  a.score_sum = 111;
  a.mention_freq = 20.0 / 73.0;
  a.avg_sentiment = 111.0 / 20.0;
  EntityAggregate d;  // empty subset
  d.entity = "Pricing";
  auto mix = closed_form_mix(a, d, 0.0);
  EXPECT_DOUBLE_EQ(mix.mention_freq, a.mention_freq);
  EXPECT_DOUBLE_EQ(*mix.avg_sentiment, *a.avg_sentiment);
}

TEST(ClosedFormMix, NoMentionsAnywherePropagatesUndefined) {
  EntityAggregate a;
  a.entity = "Pricing";
  a.n_docs = 10;
  EntityAggregate d;
  d.entity = "Pricing";
  d.n_docs = 10;
  auto mix = closed_form_mix(a, d, 0.5);
  EXPECT_DOUBLE_EQ(mix.mention_freq, 0.0);
  EXPECT_FALSE(mix.avg_sentiment.has_value());
}

TEST(ClosedFormMix, WrongSubsetSizeRejected) {
  EntityAggregate a;
  a.entity = "Pricing";
  a.n_docs = 100;
  EntityAggregate d;
  d.entity = "Pricing";
  d.n_docs = 31;  // alpha 0.25 needs 33
  EXPECT_THROW(closed_form_mix(a, d, 0.25), ValidationError);
}

TEST(Grid, HundredOnePoints) {
  auto grid = make_grid(0.005, 0.5, 0);
  EXPECT_EQ(grid.rates.size(), 101u);
  EXPECT_EQ(grid.rates.front(), 0.0);
  EXPECT_EQ(grid.rates.back(), 0.5);
  grid.validate();
}

}  // namespace
