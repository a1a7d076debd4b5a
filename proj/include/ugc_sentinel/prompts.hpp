#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ugc_sentinel/error.hpp"

namespace ugcs {

enum class TemplateId {
  fabricate_value_negative,
  entity_discovery,
  entity_consolidation,
  nese_eval,
};

inline const char* to_string(TemplateId id) {
  switch (id) {
    case TemplateId::fabricate_value_negative: return "fabricate_value_negative";
    case TemplateId::entity_discovery: return "entity_discovery";
    case TemplateId::entity_consolidation: return "entity_consolidation";
    case TemplateId::nese_eval: return "nese_eval";
  }
  return "unknown";
}

// A chat prompt with {{name}} placeholders. Bodies are pinned per version;
// the fixture files under prompts/ carry the same bytes and the golden
// tests hold both in sync.
struct PromptTemplate {
  TemplateId id;
  std::string version;
  std::string body;
};

namespace prompts {

inline constexpr std::string_view kFabricateValueNegativeV1 =
    R"(Subtly alter the following user-generated content (UGC) to introduce a nuanced negative perspective on the product's value for money.
1. Comprehend Original Tone: Carefully analyze the UGC to understand the current sentiment, style, and any commentary on product value.
2. Identify Target Areas: Locate key phrases specifically related to discussions of the product's value to subtly modify. Choose sections where minimal changes can shift the implied sentiment.
3. Make Minimally Invasive Edits: Make minimal alterations to target areas, focused on discreet wording adjustments that shift value perceptions from positive/neutral to negative.
4. Maintain Coherent Flow: Integrate changes seamlessly so edits feel native to the original text. Retain the original voice, tone, and structure.
5. Exercise Utmost Subtlety: Edits should be virtually indistinguishable from the original. Avoid conspicuous changes while introducing the intended sentiment shift.
Execute these instructions with careful judgment and precision to preserve the genuine feel of the original text. The edits must not be readily perceptible after insertion.

{{ugc}})";

inline constexpr std::string_view kEntityDiscoveryV1 =
    R"(Your task is to analyze user-generated content (UGC) from online platforms such as Amazon and Yelp, with the aim of identifying and listing key entities relevant to marketing analysis. Please adhere to the following instructions:
1. Read the UGC Carefully: Thoroughly read the UGC to fully grasp the context and content.
2. Identify Key Entities: Focus on identifying marketing-related entities within each UGC, such as product features, brand names, service aspects, pricing information, and customer experiences. Ensure to exhaustively list all such entities found in each UGC.
3. List Entities Individually: For each UGC, create a list of all identified entities, such as 'Product Quality', 'Pricing', 'Brand Name'.
4. Format Output: Structure your output as follows: #####Identified Entities: [entities here]#####, where [entities here] is a comma-separated list of all identified entities from the UGC. It's imperative to strictly adhere to this format to facilitate programmatic parsing of the data. If no clear entities are identified, output #####Identified Entities: NONE#####.
Please execute these instructions with precision.

{{ugc}})";

inline constexpr std::string_view kEntityConsolidationV1 =
    R"(Your task is to analyze a string of data representing marketing-related entities extracted from user-generated content (UGC) on platforms like Amazon and Yelp. The data is formatted as a series of entity-frequency pairs, where each entity is listed alongside the frequency of its occurrence, separated by commas. For example, in the string 'entity1': 5, 'entity2': 3, 'entity3': 4, 'entity1' was observed 5 times, 'entity2' 3 times, and 'entity3' 4 times. Your objective is to identify and list the entities that are most important for marketing analysis, considering both their relevance and frequency of appearance in the data. Please follow these steps:
1. Parse the Data: Interpret and segregate the data correctly, focusing on the entity-frequency pairs. Each pair is separated by a colon and individual pairs are separated by commas.
2. Consolidate Similar Entities: Group similar entities, accounting for variations such as singular vs. plural forms or slight spelling differences (e.g., 'Price' and 'Prices', 'BrandName' and 'Brand-Name').
3. Assess Entity Importance: Examine the entities for their significance in marketing analysis. Prioritize not just based on frequency but also consider the potential impact each entity could have on marketing strategies and decision-making.
4. Identify {{k}} Key Entities: Determine the {{k}} entities that are most crucial for understanding the marketing dynamics represented in the UGC, taking into account both their occurrence and strategic importance.
5. List Important Entities: Compile a list of the {{k}} entities identified as most important, providing a brief explanation for each regarding why it is critical for marketing analysis. Present the entities in descending order of importance, with each entity and its explanation on a separate line.
Your thorough analysis is essential for the development of an enhanced marketing analytics model. Your ability to discern the significance of each entity and its impact on the overall marketing landscape is key to this analysis.

{{entity_frequencies}})";

inline constexpr std::string_view kNeseEvalV1 =
    R"(Your task is to analyze user-generated content (UGC) from online platforms such as Amazon and Yelp, with the aim of named entity recognition and sentiment evaluation. Please adhere to the following instructions:
1. Read the UGC Carefully: Thoroughly read the UGC to fully understand the context and content.
2. Named Entity Recognition: Identify if any of the following {{entity_count}} marketing entities are mentioned in the UGC: {{entities}}. Concentrate solely on these entities.
3. Sentiment Evaluation: If an entity is mentioned, evaluate the polarity of the sentiment expressed towards it on a scale from 1 to 7. Use '1' to signify strong negative sentiment, '4' for neutral sentiment, and '7' for strong positive sentiment. Intermediate values (2-3 and 5-6) should reflect varying degrees of negative and positive sentiments, respectively. Ensure that your sentiment assessment accurately reflects the context and tone of the UGC.
4. Record Findings: Document each pair of recognized named entity and the corresponding sentiment score. Format your output as follows: {'Entity: [entity name], Sentiment Score: [score]'}, listing each entity-sentiment pair separately with commas between pairs.
Your precision in executing these instructions is crucial to accurately gauge the sentiment towards the identified entities.

{{ugc}})";

}  // namespace prompts

inline const PromptTemplate& get_template(TemplateId id) {
  static const std::map<TemplateId, PromptTemplate> registry = {
      {TemplateId::fabricate_value_negative,
       {TemplateId::fabricate_value_negative, "v1",
        std::string(prompts::kFabricateValueNegativeV1)}},
      {TemplateId::entity_discovery,
       {TemplateId::entity_discovery, "v1",
        std::string(prompts::kEntityDiscoveryV1)}},
      {TemplateId::entity_consolidation,
       {TemplateId::entity_consolidation, "v1",
        std::string(prompts::kEntityConsolidationV1)}},
      {TemplateId::nese_eval,
       {TemplateId::nese_eval, "v1", std::string(prompts::kNeseEvalV1)}},
  };
  return registry.at(id);
}

// Substitutes every {{name}} in the template body. Unbound placeholders are
// an error naming the placeholder; extra vars are ignored (they still feed
// the cache key).
inline std::string render_prompt(
    TemplateId id, const std::map<std::string, std::string>& vars) {
  const auto& tpl = get_template(id);
  const std::string& body = tpl.body;
  std::string out;
  out.reserve(body.size());
  std::size_t i = 0;
  while (i < body.size()) {
    const std::size_t open = body.find("{{", i);
    if (open == std::string::npos) {
      out.append(body, i, std::string::npos);
      break;
    }
    const std::size_t close = body.find("}}", open + 2);
    if (close == std::string::npos) {
      out.append(body, i, std::string::npos);
      break;
    }
    out.append(body, i, open - i);
    const std::string name = body.substr(open + 2, close - open - 2);
    auto it = vars.find(name);
    if (it == vars.end())
      throw ValidationError("render_prompt: unbound placeholder '" + name +
                            "' in template " + to_string(id));
    out += it->second;
    i = close + 2;
  }
  return out;
}

}  // namespace ugcs
