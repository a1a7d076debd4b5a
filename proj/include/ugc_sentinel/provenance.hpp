#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "ugc_sentinel/version.hpp"

namespace ugcs {

// Recorded at the top of every file a pipeline run emits: which tool,
// which configuration, which seed.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;

  nlohmann::json to_json() const {
    return {{"tool", kToolName},
            {"version", tool_version},
            {"config", config_hash},
            {"seed", seed}};
  }

  // Header line for line-oriented text formats (CSV, .dat).
  std::string comment_line() const {
    return "# " + std::string(kToolName) + " " + tool_version +
           " config=" + config_hash + " seed=" + std::to_string(seed) + "\n";
  }

  // Header line for JSONL files: a single object {"_provenance": ...}.
  std::string jsonl_line() const {
    nlohmann::json j;
    j["_provenance"] = to_json();
    return j.dump() + "\n";
  }
};

}  // namespace ugcs
