#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ugc_sentinel/error.hpp"
#include "ugc_sentinel/sha256.hpp"
#include "ugc_sentinel/text.hpp"

namespace ugcs {

// Flat key/value configuration with [section] headers, TOML-style. Values
// are strings; typed getters parse on demand. Precedence is CLI flag over
// config over built-in default, and each resolved lookup is logged.
class Config {
 public:
  static Config parse(const std::string& content, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(content);
    std::string line;
    std::string section = "global";
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string t = text::trim(line);
      if (t.empty() || t[0] == '#') continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw ValidationError(origin + ":" + std::to_string(line_no) +
                                ": malformed section header");
        section = text::trim(t.substr(1, t.size() - 2));
        if (section.empty())
          throw ValidationError(origin + ":" + std::to_string(line_no) +
                                ": empty section name");
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ValidationError(origin + ":" + std::to_string(line_no) +
                              ": expected key = value");
      std::string key = text::trim(t.substr(0, eq));
      std::string value = text::trim(t.substr(eq + 1));
      if (key.empty())
        throw ValidationError(origin + ":" + std::to_string(line_no) +
                              ": empty key");
      if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                                (value.front() == '\'' && value.back() == '\'')))
        value = value.substr(1, value.size() - 2);
      cfg.sections_[section][key] = value;
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("config: cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  // CLI overrides land here and win over file values.
  void set(const std::string& section, const std::string& key,
           const std::string& value) {
    overrides_[section][key] = value;
  }

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const {
    auto find_in =
        [&](const std::map<std::string, std::map<std::string, std::string>>& m,
            const char* source) -> const std::string* {
      auto s = m.find(section);
      if (s == m.end()) return nullptr;
      auto k = s->second.find(key);
      if (k == s->second.end()) return nullptr;
      resolution_log_.push_back(section + "." + key + " = " + k->second +
                                " (" + source + ")");
      return &k->second;
    };
    if (const auto* v = find_in(overrides_, "flag")) return *v;
    if (const auto* v = find_in(sections_, "config")) return *v;
    resolution_log_.push_back(section + "." + key + " = " + fallback +
                              " (default)");
    return fallback;
  }

  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const {
    const std::string v = get(section, key, std::to_string(fallback));
    try {
      return std::stoll(v);
    } catch (const std::exception&) {
      throw ValidationError("config: " + section + "." + key +
                            " is not an integer: " + v);
    }
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const {
    const std::string v = get(section, key, std::to_string(fallback));
    try {
      return std::stoull(v);
    } catch (const std::exception&) {
      throw ValidationError("config: " + section + "." + key +
                            " is not an unsigned integer: " + v);
    }
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    const std::string v = get(section, key, std::to_string(fallback));
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      throw ValidationError("config: " + section + "." + key +
                            " is not a number: " + v);
    }
  }

  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const {
    const std::string v = get(section, key, fallback ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config: " + section + "." + key +
                          " is not a boolean: " + v);
  }

  // Comma-separated list.
  std::vector<std::string> get_list(const std::string& section,
                                    const std::string& key,
                                    const std::string& fallback) const {
    const std::string v = get(section, key, fallback);
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
      const auto comma = v.find(',', pos);
      const std::string item = text::trim(
          comma == std::string::npos
              ? std::string_view(v).substr(pos)
              : std::string_view(v).substr(pos, comma - pos));
      if (!item.empty()) out.push_back(item);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return out;
  }

  // Canonical serialization (sections and keys sorted, overrides applied):
  // the basis of the config hash in provenance headers.
  std::string canonical() const {
    auto merged = sections_;
    for (const auto& [section, kv] : overrides_)
      for (const auto& [k, v] : kv) merged[section][k] = v;
    std::string out;
    for (const auto& [section, kv] : merged) {
      out += "[" + section + "]\n";
      for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    }
    return out;
  }

  std::string hash() const { return sha256_hex(canonical()).substr(0, 16); }

  const std::vector<std::string>& resolution_log() const {
    return resolution_log_;
  }

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::map<std::string, std::map<std::string, std::string>> overrides_;
  mutable std::vector<std::string> resolution_log_;
};

}  // namespace ugcs
