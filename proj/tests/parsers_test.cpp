#include "ugc_sentinel/parsers.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "ugc_sentinel/prompts.hpp"
#include "ugc_sentinel/rng.hpp"

using namespace ugcs;

namespace {

const std::vector<std::string> kFifteen = {
    "Product Quality", "Customer Experience", "Pricing",
    "Brand Name",      "Delivery Time",       "Product Functionality",
    "Customer Service", "Ease of Use",        "Product Features",
    "User Experience", "Food Quality",        "Service Quality",
    "Atmosphere",      "Cleanliness",         "Staff Friendliness"};

TEST(EntityListParser, BasicBlock) {
  auto p = parse_entity_list(
      "#####Identified Entities: Pricing, Product Quality#####");
  ASSERT_TRUE(p.ok());
  EXPECT_FALSE(p.value->none_flag);
  ASSERT_EQ(p.value->entities.size(), 2u);
  EXPECT_EQ(p.value->entities[0], "Pricing");
  EXPECT_EQ(p.value->entities[1], "Product Quality");
}

TEST(EntityListParser, NoneFlag) {
  auto p = parse_entity_list("#####Identified Entities: NONE#####");
  ASSERT_TRUE(p.ok());
  EXPECT_TRUE(p.value->none_flag);
  EXPECT_TRUE(p.value->entities.empty());
}

TEST(EntityListParser, NoBlockIsStructuredError) {
  auto p = parse_entity_list("I think the entities are Pricing.");
  ASSERT_FALSE(p.ok());
  EXPECT_EQ(p.error->code, "no_block");
}

TEST(EntityListParser, SurroundingProseAndBrackets) {
  auto p = parse_entity_list(
      "Sure! Here you go:\n#####Identified Entities: [Pricing , Delivery "
      "Time]#####\nHope that helps.");
  ASSERT_TRUE(p.ok());
  ASSERT_EQ(p.value->entities.size(), 2u);
  EXPECT_EQ(p.value->entities[0], "Pricing");
  EXPECT_EQ(p.value->entities[1], "Delivery Time");
}

TEST(EntityListParser, UnterminatedBlockThenValidBlock) {
  auto p = parse_entity_list(
      "#####Identified Entities: broken\n"
      "#####Identified Entities: Pricing#####");
  ASSERT_TRUE(p.ok());
  // The first marker closes at the second marker's #####; content includes
  // the word "broken" only.
  EXPECT_EQ(p.value->entities.size(), 1u);
}

TEST(SentimentParser, PaperFormat) {
  auto p = parse_entity_sentiments("{'Entity: Pricing, Sentiment Score: 2'}",
                                   kFifteen);
  ASSERT_TRUE(p.ok());
  ASSERT_EQ(p.value->pairs.size(), 1u);
  EXPECT_EQ(p.value->pairs[0], (EntitySentiment{"Pricing", 2}));
  EXPECT_TRUE(p.value->violations.empty());
}

TEST(SentimentParser, TwoPairsInOrder) {
  auto p = parse_entity_sentiments(
      "{'Entity: Pricing, Sentiment Score: 2'}, {'Entity: Product Quality, "
      "Sentiment Score: 6'}",
      kFifteen);
  ASSERT_TRUE(p.ok());
  ASSERT_EQ(p.value->pairs.size(), 2u);
  EXPECT_EQ(p.value->pairs[0].entity, "Pricing");
  EXPECT_EQ(p.value->pairs[1].entity, "Product Quality");
}

TEST(SentimentParser, OutOfRangeScoreReportedLenient) {
  auto p = parse_entity_sentiments("Entity: Pricing, Sentiment Score: 9",
                                   kFifteen);
  ASSERT_TRUE(p.ok());
  EXPECT_TRUE(p.value->pairs.empty());
  ASSERT_EQ(p.value->violations.size(), 1u);
  EXPECT_EQ(p.value->violations[0].kind, "score_out_of_range");
}

TEST(SentimentParser, StrictModeErrors) {
  SentimentParseOptions opts;
  opts.strict = true;
  auto p = parse_entity_sentiments("Entity: Pricing, Sentiment Score: 9",
                                   kFifteen, opts);
  ASSERT_FALSE(p.ok());
  EXPECT_EQ(p.error->code, "strict_violation");
}

TEST(SentimentParser, UnknownEntityReported) {
  auto p = parse_entity_sentiments(
      "Entity: Weather, Sentiment Score: 3, Entity: pricing, Sentiment Score: "
      "5",
      kFifteen);
  ASSERT_TRUE(p.ok());
  ASSERT_EQ(p.value->pairs.size(), 1u);
  EXPECT_EQ(p.value->pairs[0].entity, "Pricing");  // canonical spelling
  ASSERT_EQ(p.value->violations.size(), 1u);
  EXPECT_EQ(p.value->violations[0].kind, "unknown_entity");
}

TEST(SentimentParser, ZeroPairsWhenExpectedIsError) {
  SentimentParseOptions opts;
  opts.expect_at_least_one = true;
  auto p = parse_entity_sentiments("No entities detected.", kFifteen, opts);
  ASSERT_FALSE(p.ok());
  EXPECT_EQ(p.error->code, "zero_pairs");
}

TEST(SentimentParser, DuplicateKeepsFirst) {
  auto p = parse_entity_sentiments(
      "Entity: Pricing, Sentiment Score: 2, Entity: Pricing, Sentiment Score: "
      "6",
      kFifteen);
  ASSERT_TRUE(p.ok());
  ASSERT_EQ(p.value->pairs.size(), 1u);
  EXPECT_EQ(p.value->pairs[0].score, 2);
  ASSERT_EQ(p.value->violations.size(), 1u);
  EXPECT_EQ(p.value->violations[0].kind, "duplicate_entity");
}

// ---------------------------------------------------------------------------
// Grammar fuzzing. Valid serializations are produced by independent
// generators and must round-trip through parse -> serialize to canonical
// form; corrupted and random strings must never crash and must produce
// either a parse or a structured error.

std::string random_entity_name(Rng& rng) {
  static const char* words[] = {"Pricing",  "Quality", "Service", "Brand",
                                "Delivery", "Food",    "Staff",   "Value"};
  std::string name = words[rng.next_below(std::size(words))];
  if (rng.next_below(2) == 0) {
    name += " ";
    name += words[rng.next_below(std::size(words))];
  }
  return name;
}

TEST(ParserFuzz, EntityListGrammar) {
  Rng rng(777001);
  int valid_cases = 0;
  for (int iter = 0; iter < 6000; ++iter) {
    ParsedEntities truth;
    if (rng.next_below(5) == 0) {
      truth.none_flag = true;
    } else {
      const std::size_t n = rng.next_below(5);
      std::set<std::string> used;
      for (std::size_t i = 0; i < n; ++i) {
        auto name = random_entity_name(rng);
        if (used.insert(name).second) truth.entities.push_back(name);
      }
    }
    // Render with random decoration and spacing drift.
    std::string payload = truth.none_flag ? "NONE" : "";
    for (std::size_t i = 0; i < truth.entities.size(); ++i) {
      if (i > 0) payload += rng.next_below(2) ? ", " : " ,  ";
      payload += truth.entities[i];
    }
    std::string raw;
    if (rng.next_below(2)) raw += "Answer:\n";
    raw += "#####Identified Entities: ";
    if (!truth.none_flag && rng.next_below(3) == 0)
      raw += "[" + payload + "]";
    else
      raw += payload;
    raw += "#####";
    if (rng.next_below(2)) raw += "\nAnything else?";

    auto p = parse_entity_list(raw);
    ASSERT_TRUE(p.ok()) << raw;
    EXPECT_EQ(serialize_entity_list(*p.value), serialize_entity_list(truth))
        << raw;
    ++valid_cases;
  }
  EXPECT_GT(valid_cases, 0);

  // Corruption pass: random mutations must never crash.
  for (int iter = 0; iter < 6000; ++iter) {
    std::string raw;
    const std::size_t len = rng.next_below(120);
    static const char* pieces[] = {"#####", "Identified", "Entities", ":",
                                   ",",     "NONE",       "Pricing",  " ",
                                   "\n",    "\xFF",       "{",        "'"};
    for (std::size_t i = 0; i < len; ++i)
      raw += pieces[rng.next_below(std::size(pieces))];
    auto p = parse_entity_list(raw);
    EXPECT_TRUE(p.ok() || p.error.has_value());
  }
}

TEST(ParserFuzz, SentimentGrammar) {
  Rng rng(777002);
  for (int iter = 0; iter < 6000; ++iter) {
    std::vector<EntitySentiment> truth;
    std::set<std::string> used;
    const std::size_t n = rng.next_below(4);
    for (std::size_t i = 0; i < n; ++i) {
      std::string name = kFifteen[rng.next_below(kFifteen.size())];
      if (!used.insert(name).second) continue;
      truth.push_back({name, 1 + static_cast<int>(rng.next_below(7))});
    }
    std::string raw;
    if (rng.next_below(2)) raw += "Findings: ";
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (i > 0) raw += ", ";
      switch (rng.next_below(3)) {
        case 0:
          raw += "{'Entity: " + truth[i].entity +
                 ", Sentiment Score: " + std::to_string(truth[i].score) + "'}";
          break;
        case 1:
          raw += "Entity: " + truth[i].entity +
                 ", Sentiment Score: " + std::to_string(truth[i].score);
          break;
        default:
          raw += "\"Entity:  " + truth[i].entity +
                 " , Sentiment  Score : " + std::to_string(truth[i].score) +
                 "\"";
          break;
      }
    }
    auto p = parse_entity_sentiments(raw, kFifteen);
    ASSERT_TRUE(p.ok()) << raw;
    EXPECT_EQ(serialize_entity_sentiments(p.value->pairs),
              serialize_entity_sentiments(truth))
        << raw;
    EXPECT_TRUE(p.value->violations.empty()) << raw;
  }

  // Random garbage: totality and the 1..7 score wall.
  for (int iter = 0; iter < 6000; ++iter) {
    std::string raw;
    const std::size_t len = rng.next_below(100);
    static const char* pieces[] = {"Entity",    ":", ",", "Sentiment", "Score",
                                   "Pricing",   "9", "0", "-3",        "4",
                                   " ",         "\n", "{", "'",        "\xC3\xA9",
                                   "\xF0\x9F\x98\x80"};
    for (std::size_t i = 0; i < len; ++i)
      raw += pieces[rng.next_below(std::size(pieces))];
    auto p = parse_entity_sentiments(raw, kFifteen);
    if (p.ok()) {
      for (const auto& pair : p.value->pairs) {
        EXPECT_GE(pair.score, 1);
        EXPECT_LE(pair.score, 7);
      }
    } else {
      EXPECT_FALSE(p.error->code.empty());
    }
  }
}

TEST(ConsolidationParser, NumberedLines) {
  const std::string raw =
      "Here are the key entities:\n"
      "1. Product Quality: central to purchase decisions.\n"
      "2. Pricing - drives value perception.\n"
      "3. Brand Name (recognition matters)\n"
      "not a list line\n"
      "4. Delivery Time: logistics.\n";
  auto names = parse_consolidation_list(raw, 10);
  ASSERT_EQ(names.size(), 4u);
  EXPECT_EQ(names[0], "Product Quality");
  EXPECT_EQ(names[1], "Pricing");
  EXPECT_EQ(names[2], "Brand Name");
  EXPECT_EQ(names[3], "Delivery Time");
}

TEST(ConsolidationParser, CapsAtK) {
  std::string raw;
  for (int i = 1; i <= 12; ++i)
    raw += std::to_string(i) + ". Entity" + std::to_string(i) + ": x\n";
  auto names = parse_consolidation_list(raw, 10);
  EXPECT_EQ(names.size(), 10u);
}

// ---------------------------------------------------------------------------
// Prompt rendering

TEST(Prompts, FabricateContainsReviewVerbatim) {
  const std::string review = "Love this item. Has worked great.";
  auto prompt = render_prompt(TemplateId::fabricate_value_negative,
                              {{"ugc", review}});
  const auto at = prompt.find(review);
  ASSERT_NE(at, std::string::npos);
  // The review sits after the instruction block.
  EXPECT_GT(at, prompt.find("Execute these instructions"));
}

TEST(Prompts, UnboundPlaceholderNamesIt) {
  try {
    render_prompt(TemplateId::fabricate_value_negative, {});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("ugc"), std::string::npos);
  }
}

TEST(Prompts, NeseEvalContainsAllFifteenOnce) {
  std::string entities;
  for (std::size_t i = 0; i < kFifteen.size(); ++i) {
    if (i > 0) entities += ", ";
    entities += kFifteen[i];
  }
  auto prompt = render_prompt(TemplateId::nese_eval,
                              {{"entity_count", "15"},
                               {"entities", entities},
                               {"ugc", "Great price."}});
  for (const auto& name : kFifteen) {
    const auto first = prompt.find(name);
    ASSERT_NE(first, std::string::npos) << name;
  }
  // The canonical sentence from the prompt is reproduced byte-exactly.
  EXPECT_NE(
      prompt.find(
          "Identify if any of the following 15 marketing entities are "
          "mentioned in the UGC: Product Quality, Customer Experience, "
          "Pricing, Brand Name, Delivery Time, Product Functionality, "
          "Customer Service, Ease of Use, Product Features, User Experience, "
          "Food Quality, Service Quality, Atmosphere, Cleanliness, Staff "
          "Friendliness. Concentrate solely on these entities."),
      std::string::npos);
}

TEST(Prompts, RenderingIsDeterministic) {
  std::map<std::string, std::string> vars = {{"ugc", "Some text."}};
  auto a = render_prompt(TemplateId::entity_discovery, vars);
  auto b = render_prompt(TemplateId::entity_discovery, vars);
  EXPECT_EQ(a, b);
}

// Golden check: the shipped fixture files carry the same bytes as the
// embedded templates (fixtures end with a single trailing newline).
TEST(Prompts, FixtureFilesMatchEmbeddedTemplates) {
  const std::string repo = UGCS_REPO_DIR;
  const std::pair<TemplateId, std::string> files[] = {
      {TemplateId::fabricate_value_negative, "fabricate_value_negative.v1.txt"},
      {TemplateId::entity_discovery, "entity_discovery.v1.txt"},
      {TemplateId::entity_consolidation, "entity_consolidation.v1.txt"},
      {TemplateId::nese_eval, "nese_eval.v1.txt"},
  };
  for (const auto& [id, file] : files) {
    std::ifstream in(repo + "/prompts/" + file, std::ios::binary);
    ASSERT_TRUE(in) << file;
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    ASSERT_FALSE(content.empty());
    ASSERT_EQ(content.back(), '\n') << file;
    content.pop_back();
    EXPECT_EQ(content, get_template(id).body) << file;
  }
}

}  // namespace
