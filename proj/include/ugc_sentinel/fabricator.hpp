#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ugc_sentinel/corpus.hpp"
#include "ugc_sentinel/gateway.hpp"

namespace ugcs {

// The model returned the template text unchanged, twice.
class IdentityOutputError : public Error {
 public:
  using Error::Error;
};

struct FabricationJob {
  Corpus input;  // all label=authentic
  TemplateId strategy = TemplateId::fabricate_value_negative;
  DecodingParams decoding = default_decoding(TemplateId::fabricate_value_negative);
  int attempt_budget = 3;
  // Abort when more than this fraction of inputs ends up skipped.
  double max_failure_frac = 0.2;
  std::string output_id_prefix = "d_";

  void validate() const {
    for (const auto& r : input.reviews)
      if (r.label != Label::authentic)
        throw ValidationError("fabricate: input review " + r.id +
                              " is not labeled authentic");
  }
};

struct FabricationSkip {
  std::string id;
  std::string reason;  // refusal | provider_failure | identity_output
};

struct FabricationStats {
  std::size_t calls = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
};

struct FabricationResult {
  Corpus pairs;  // label=disinformative, pair_id=input id, input order
  std::vector<FabricationSkip> skips;
  FabricationStats stats;
};

namespace detail {

// Strips whitespace and one layer of wrapping quotes some providers add
// around the rewritten text.
inline std::string strip_provider_framing(const std::string& raw) {
  std::string t = text::trim(raw);
  if (t.size() >= 2 &&
      ((t.front() == '"' && t.back() == '"') ||
       (t.front() == '\'' && t.back() == '\'')))
    t = text::trim(std::string_view(t).substr(1, t.size() - 2));
  return t;
}

}  // namespace detail

// Transforms one authentic review into its disinformative variant.
// An output identical to the template is retried once past the cache;
// a second identity raises IdentityOutputError.
inline Review fabricate(Gateway& gateway, const Review& review,
                        TemplateId strategy, const DecodingParams& decoding,
                        int attempt_budget = 3,
                        const std::string& output_id_prefix = "d_",
                        FabricationStats* stats = nullptr) {
  if (text::trim(review.text).empty())
    throw ValidationError("fabricate: review " + review.id + " has empty text");

  CompletionRequest req;
  req.template_id = strategy;
  req.vars = {{"id", review.id}, {"ugc", review.text}};
  req.decoding = decoding;
  req.attempt_budget = attempt_budget;

  std::string variant;
  for (int round = 0; round < 2; ++round) {
    if (round == 1) req.vars["retry_nonce"] = "1";
    auto completion = gateway.complete(req);
    if (stats != nullptr) {
      ++stats->calls;
      if (completion.from_cache) ++stats->cache_hits;
      if (completion.attempts > 1)
        stats->retries += static_cast<std::size_t>(completion.attempts - 1);
    }
    variant = detail::strip_provider_framing(completion.text);
    if (variant != review.text && !variant.empty()) break;
    if (round == 1)
      throw IdentityOutputError("fabricate: identity output for review " +
                                review.id + " after retry");
    if (stats != nullptr) ++stats->retries;
  }

  Review out;
  out.id = output_id_prefix + review.id;
  out.text = variant;
  out.source = review.source;
  out.label = Label::disinformative;
  out.pair_id = review.id;
  return out;
}

// One fabrication per input review, resumable through the gateway cache.
// Outputs preserve input order; every input lands either in pairs or in
// skips.
inline FabricationResult fabricate_corpus(Gateway& gateway,
                                          const FabricationJob& job) {
  job.validate();
  FabricationResult result;
  result.pairs.source_tag = job.input.source_tag;
  result.pairs.provenance_notes = job.input.provenance_notes;
  result.pairs.provenance_notes.push_back(
      std::string("fabricated strategy=") + to_string(job.strategy));

  for (const auto& review : job.input.reviews) {
    try {
      result.pairs.reviews.push_back(
          fabricate(gateway, review, job.strategy, job.decoding,
                    job.attempt_budget, job.output_id_prefix, &result.stats));
    } catch (const RefusalError&) {
      result.skips.push_back({review.id, "refusal"});
    } catch (const IdentityOutputError&) {
      result.skips.push_back({review.id, "identity_output"});
    } catch (const ProviderError&) {
      result.skips.push_back({review.id, "provider_failure"});
    }
  }

  const double failure_frac =
      job.input.reviews.empty()
          ? 0.0
          : static_cast<double>(result.skips.size()) /
                static_cast<double>(job.input.reviews.size());
  if (failure_frac > job.max_failure_frac)
    throw ProviderError(
        "fabricate_corpus: failure fraction " + std::to_string(failure_frac) +
        " exceeds threshold " + std::to_string(job.max_failure_frac));
  return result;
}

}  // namespace ugcs
