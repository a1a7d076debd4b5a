#pragma once

#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "ugc_sentinel/corpus.hpp"
#include "ugc_sentinel/metrics.hpp"

namespace ugcs {

// Adapter over an external AI-text detection service (Model 1). The service
// internals stay opaque; we only map its probability-of-AI field onto a
// Prediction score. Offline runs use score fixtures instead.

// Dot-separated field path; numeric segments index arrays, e.g.
// "documents.0.completely_generated_prob".
inline std::optional<double> extract_probability(const nlohmann::json& body,
                                                 const std::string& path) {
  const nlohmann::json* cur = &body;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    const auto dot = path.find('.', pos);
    const std::string seg =
        path.substr(pos, dot == std::string::npos ? std::string::npos
                                                  : dot - pos);
    if (seg.empty()) return std::nullopt;
    if (!seg.empty() && seg.find_first_not_of("0123456789") == std::string::npos) {
      if (!cur->is_array()) return std::nullopt;
      const auto idx = static_cast<std::size_t>(std::stoul(seg));
      if (idx >= cur->size()) return std::nullopt;
      cur = &(*cur)[idx];
    } else {
      if (!cur->is_object() || !cur->contains(seg)) return std::nullopt;
      cur = &(*cur)[seg];
    }
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  if (!cur->is_number()) return std::nullopt;
  const double v = cur->get<double>();
  if (v < 0.0 || v > 1.0) return std::nullopt;
  return v;
}

class ExternalDetector {
 public:
  virtual ~ExternalDetector() = default;
  virtual Prediction detect(const Review& doc) = 0;
};

// Offline scores keyed by review id (CSV fixture: id,score).
class FixtureExternalDetector : public ExternalDetector {
 public:
  explicit FixtureExternalDetector(std::map<std::string, double> scores)
      : scores_(std::move(scores)) {}

  static FixtureExternalDetector from_csv(const std::string& path) {
    return FixtureExternalDetector(read_score_fixture(path));
  }

  Prediction detect(const Review& doc) override {
    auto it = scores_.find(doc.id);
    if (it == scores_.end())
      throw ValidationError("external fixture: no score for id " + doc.id);
    return {doc.id, it->second, "external"};
  }

 private:
  std::map<std::string, double> scores_;
};

}  // namespace ugcs
