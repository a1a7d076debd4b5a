#include "ugc_sentinel/fabricator.hpp"

#include <gtest/gtest.h>

#include "testutil.hpp"

using namespace ugcs;

namespace {

Corpus authentic_corpus(int n) {
  Corpus c;
  for (int i = 0; i < n; ++i) {
    Review r;
    r.id = "a" + std::to_string(i);
    r.text = "Love this item number " + std::to_string(i) +
             ". Has worked great. Good quality for small price.";
    r.label = Label::authentic;
    c.reviews.push_back(r);
  }
  return c;
}

TEST(Fabricate, ProducesPairedVariant) {
  auto gateway = Gateway(std::make_shared<MockChatProvider>(), {});
  Review input;
  input.id = "a1";
  input.text = "Love this item. Has worked great. Good quality for small "
               "price. Would order again for gifts. Nothing else to say.";
  input.label = Label::authentic;
  auto out = fabricate(gateway, input, TemplateId::fabricate_value_negative,
                       default_decoding(TemplateId::fabricate_value_negative));
  EXPECT_EQ(out.label, Label::disinformative);
  ASSERT_TRUE(out.pair_id.has_value());
  EXPECT_EQ(*out.pair_id, "a1");
  EXPECT_NE(out.text, input.text);
  EXPECT_NE(out.text.find("value for money"), std::string::npos);
  // The variant stays close to the template: the tail is retained.
  EXPECT_NE(out.text.find("Nothing else to say."), std::string::npos);
}

TEST(Fabricate, EchoProviderIsIdentitySkip) {
  MockChatProvider::Options opts;
  opts.echo_var = "ugc";
  opts.synthesize = false;
  auto gateway = Gateway(std::make_shared<MockChatProvider>(opts), {});
  Review input;
  input.id = "a1";
  input.text = "Some review text.";
  input.label = Label::authentic;
  EXPECT_THROW(fabricate(gateway, input,
                         TemplateId::fabricate_value_negative, {}),
               IdentityOutputError);
}

TEST(Fabricate, EmptyTextIsPreconditionError) {
  auto gateway = Gateway(std::make_shared<MockChatProvider>(), {});
  Review input;
  input.id = "a1";
  input.text = "   ";
  EXPECT_THROW(
      fabricate(gateway, input, TemplateId::fabricate_value_negative, {}),
      ValidationError);
}

TEST(FabricateCorpus, TenInputsTenPairsStable) {
  testutil::TempDir tmp("fab1");
  FabricationJob job;
  job.input = authentic_corpus(10);

  GatewayConfig cfg;
  cfg.cache_dir = tmp.path("cache");
  auto run = [&] {
    Gateway gateway(std::make_shared<MockChatProvider>(), cfg);
    return fabricate_corpus(gateway, job);
  };
  auto r1 = run();
  auto r2 = run();  // second run comes out of the cache
  ASSERT_EQ(r1.pairs.size(), 10u);
  EXPECT_TRUE(r1.skips.empty());
  EXPECT_EQ(r1.pairs.reviews, r2.pairs.reviews);
  EXPECT_GT(r2.stats.cache_hits, 0u);

  // Pairing is a bijection between inputs and outputs.
  std::set<std::string> input_ids, paired_ids;
  for (const auto& r : job.input.reviews) input_ids.insert(r.id);
  for (const auto& r : r1.pairs.reviews) {
    ASSERT_TRUE(r.pair_id.has_value());
    EXPECT_TRUE(paired_ids.insert(*r.pair_id).second) << "duplicate pair_id";
  }
  EXPECT_EQ(input_ids, paired_ids);
}

TEST(FabricateCorpus, RefusalsBecomeSkips) {
  auto provider = std::make_shared<MockChatProvider>();
  FabricationJob job;
  job.input = authentic_corpus(10);
  job.max_failure_frac = 0.5;
  for (const auto& id : {"a3", "a7"}) {
    CompletionRequest probe;
    probe.template_id = TemplateId::fabricate_value_negative;
    probe.vars = {{"id", id}};
    provider->script(MockChatProvider::script_key(probe),
                     {ProviderReply::Status::refusal, "", "policy"});
  }
  Gateway gateway(provider, {});
  auto result = fabricate_corpus(gateway, job);
  EXPECT_EQ(result.pairs.size(), 8u);
  ASSERT_EQ(result.skips.size(), 2u);
  EXPECT_EQ(result.skips[0].id, "a3");
  EXPECT_EQ(result.skips[0].reason, "refusal");
  EXPECT_EQ(result.skips[1].id, "a7");
  // Conservation: outputs + skips == inputs.
  EXPECT_EQ(result.pairs.size() + result.skips.size(), job.input.size());
}

TEST(FabricateCorpus, FailureThresholdAborts) {
  auto provider = std::make_shared<MockChatProvider>();
  FabricationJob job;
  job.input = authentic_corpus(4);
  job.max_failure_frac = 0.25;
  for (const auto& id : {"a0", "a1"}) {
    CompletionRequest probe;
    probe.template_id = TemplateId::fabricate_value_negative;
    probe.vars = {{"id", id}};
    provider->script(MockChatProvider::script_key(probe),
                     {ProviderReply::Status::refusal, "", "policy"});
  }
  Gateway gateway(provider, {});
  EXPECT_THROW(fabricate_corpus(gateway, job), ProviderError);
}

TEST(FabricateCorpus, NonAuthenticInputRejected) {
  FabricationJob job;
  job.input = authentic_corpus(2);
  job.input.reviews[1].label = Label::unknown;
  Gateway gateway(std::make_shared<MockChatProvider>(), {});
  EXPECT_THROW(fabricate_corpus(gateway, job), ValidationError);
}

}  // namespace
