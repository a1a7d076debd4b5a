#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "ugc_sentinel/nese.hpp"
#include "ugc_sentinel/rng.hpp"

namespace ugcs {

// Counterpart-excluded subsample: sampled authentic results plus a
// disinformative pool that never contains their paired variants.
struct SubsamplePools {
  std::vector<NeseResult> authentic;
  std::vector<NeseResult> disinformative;
  std::uint64_t seed = 0;
  std::vector<std::string> exclusion_log;
};

inline SubsamplePools build_subsample(const std::vector<NeseResult>& auth,
                                      const std::vector<NeseResult>& dis,
                                      std::size_t n_per_side,
                                      std::uint64_t seed) {
  if (n_per_side == 0)
    throw ValidationError("build_subsample: n_per_side must be positive");
  if (auth.size() < n_per_side)
    throw ValidationError("build_subsample: authentic pool too small");
  for (const auto& d : dis)
    if (!d.pair_id)
      throw ValidationError("build_subsample: disinformative result " + d.id +
                            " lacks pair_id");

  SubsamplePools pools;
  pools.seed = seed;
  Rng rng(seed);

  auto auth_idx = rng.sample_indices(auth.size(), n_per_side);
  std::unordered_set<std::string> sampled_ids;
  for (auto i : auth_idx) {
    pools.authentic.push_back(auth[i]);
    sampled_ids.insert(auth[i].id);
  }

  std::vector<const NeseResult*> remainder;
  remainder.reserve(dis.size());
  for (const auto& d : dis) {
    if (sampled_ids.count(*d.pair_id)) {
      pools.exclusion_log.push_back("excluded " + d.id +
                                    " (counterpart of " + *d.pair_id + ")");
    } else {
      remainder.push_back(&d);
    }
  }
  if (remainder.size() < n_per_side)
    throw ValidationError(
        "build_subsample: insufficient disinformative pool after counterpart "
        "exclusion");
  auto dis_idx = rng.sample_indices(remainder.size(), n_per_side);
  for (auto i : dis_idx) pools.disinformative.push_back(*remainder[i]);
  return pools;
}

// --------------------------------------------------------------------------
// Infiltration sweep. Alpha is the disinformative fraction of the blended
// corpus, so n_d(alpha) = round(alpha * n_a / (1 - alpha)) documents join a
// fixed authentic base.

struct SweepGrid {
  std::vector<double> rates;  // strictly increasing, within [0, 0.5]
  double step = 0.005;
  std::uint64_t seed = 0;

  void validate() const {
    if (rates.empty()) throw ValidationError("sweep: empty grid");
    for (std::size_t i = 0; i < rates.size(); ++i) {
      if (rates[i] < 0.0 || rates[i] >= 1.0)
        throw ValidationError("sweep: rate out of range");
      if (i > 0 && rates[i] <= rates[i - 1])
        throw ValidationError("sweep: rates must be strictly increasing");
    }
  }
};

// 101 points: the baseline plus one hundred 0.5% increments up to 50%.
inline SweepGrid make_grid(double step = 0.005, double max_alpha = 0.5,
                           std::uint64_t seed = 0) {
  if (step <= 0 || max_alpha <= 0 || max_alpha >= 1)
    throw ValidationError("make_grid: bad step or max_alpha");
  SweepGrid grid;
  grid.step = step;
  grid.seed = seed;
  const auto n = static_cast<std::size_t>(std::llround(max_alpha / step));
  for (std::size_t i = 0; i <= n; ++i)
    grid.rates.push_back(static_cast<double>(i) * step);
  return grid;
}

inline std::size_t injected_count(double alpha, std::size_t n_authentic) {
  return static_cast<std::size_t>(
      std::llround(alpha * static_cast<double>(n_authentic) / (1.0 - alpha)));
}

struct SweepRow {
  double alpha = 0.0;
  std::size_t n_total = 0;
  std::size_t n_disinfo = 0;
  double mention_freq = 0.0;
  std::optional<double> avg_sentiment;
};

struct SweepTable {
  std::string entity;
  std::vector<SweepRow> rows;
  std::uint64_t seed = 0;
  EntityAggregate authentic_baseline;
  EntityAggregate disinfo_pool_stats;
};

// For each grid point, blends the full authentic pool with the first
// n_d(alpha) entries of one fixed seeded shuffle of the disinformative
// pool (injected sets nest as alpha grows) and aggregates per the NESE
// rules.
inline SweepTable sweep(const SubsamplePools& pools, const SweepGrid& grid,
                        const std::string& entity,
                        const EntityList& run_entities) {
  grid.validate();
  if (pools.authentic.empty())
    throw ValidationError("sweep: empty authentic pool");

  SweepTable table;
  table.entity = entity;
  table.seed = grid.seed;
  table.authentic_baseline = aggregate(pools.authentic, entity, run_entities);
  if (!pools.disinformative.empty())
    table.disinfo_pool_stats =
        aggregate(pools.disinformative, entity, run_entities);

  std::vector<NeseResult> injection_order = pools.disinformative;
  Rng rng(grid.seed);
  rng.shuffle(injection_order);

  const std::size_t n_a = pools.authentic.size();
  for (const double alpha : grid.rates) {
    const std::size_t n_d = injected_count(alpha, n_a);
    if (n_d > injection_order.size())
      throw ValidationError("sweep: alpha " + std::to_string(alpha) +
                            " needs " + std::to_string(n_d) +
                            " disinformative results, pool has " +
                            std::to_string(injection_order.size()));
    std::vector<NeseResult> blended = pools.authentic;
    blended.insert(blended.end(), injection_order.begin(),
                   injection_order.begin() + static_cast<std::ptrdiff_t>(n_d));
    const auto agg = aggregate(blended, entity, run_entities);
    table.rows.push_back(
        {alpha, n_a + n_d, n_d, agg.mention_freq, agg.avg_sentiment});
  }
  return table;
}

// Realized injected subset for one grid point, matching sweep's order.
inline std::vector<NeseResult> injected_subset(const SubsamplePools& pools,
                                               const SweepGrid& grid,
                                               double alpha) {
  std::vector<NeseResult> injection_order = pools.disinformative;
  Rng rng(grid.seed);
  rng.shuffle(injection_order);
  const std::size_t n_d = injected_count(alpha, pools.authentic.size());
  injection_order.resize(n_d);
  return injection_order;
}

// Analytic mix of two aggregates. Works on the integer counts the
// aggregates carry, so the result matches sweep's arithmetic exactly:
//   freq = (n_a f_a + n_d f_d) / (n_a + n_d)        with n f = mentions
//   sent = (n_a f_a s_a + n_d f_d s_d) / (n_a f_a + n_d f_d)
struct MixPoint {
  double mention_freq = 0.0;
  std::optional<double> avg_sentiment;
};

inline MixPoint closed_form_mix(const EntityAggregate& agg_a,
                                const EntityAggregate& agg_d_subset,
                                double alpha) {
  const std::size_t expected = injected_count(alpha, agg_a.n_docs);
  if (agg_d_subset.n_docs != expected)
    throw ValidationError(
        "closed_form_mix: disinformative aggregate covers " +
        std::to_string(agg_d_subset.n_docs) + " docs, expected " +
        std::to_string(expected) + " at alpha " + std::to_string(alpha));
  MixPoint out;
  const std::size_t n_total = agg_a.n_docs + agg_d_subset.n_docs;
  const std::size_t mentions = agg_a.n_mentions + agg_d_subset.n_mentions;
  out.mention_freq =
      static_cast<double>(mentions) / static_cast<double>(n_total);
  if (mentions > 0) {
    out.avg_sentiment =
        static_cast<double>(agg_a.score_sum + agg_d_subset.score_sum) /
        static_cast<double>(mentions);
  }
  return out;
}

// --------------------------------------------------------------------------
// Emission

namespace blend_detail {

inline std::string fmt_double(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace blend_detail

inline void write_sweep_csv(const SweepTable& table, const std::string& path,
                            const Provenance* prov = nullptr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("write_sweep_csv: cannot write " + path);
  if (prov != nullptr) os << prov->comment_line();
  os << "alpha,n_total,n_disinfo,mention_freq,avg_sentiment\n";
  for (const auto& row : table.rows) {
    os << blend_detail::fmt_double(row.alpha, "%.6g") << ","
       << row.n_total << "," << row.n_disinfo << ","
       << blend_detail::fmt_double(row.mention_freq) << ","
       << (row.avg_sentiment
               ? blend_detail::fmt_double(*row.avg_sentiment)
               : std::string())
       << "\n";
  }
}

inline nlohmann::json aggregate_to_json(const EntityAggregate& a) {
  nlohmann::json j;
  j["entity"] = a.entity;
  j["n_docs"] = a.n_docs;
  j["n_mentions"] = a.n_mentions;
  j["score_sum"] = a.score_sum;
  j["mention_freq"] = a.mention_freq;
  if (a.avg_sentiment) j["avg_sentiment"] = *a.avg_sentiment;
  else j["avg_sentiment"] = nullptr;
  return j;
}

inline void write_sweep_json(const SweepTable& table, const std::string& path,
                             const Provenance* prov = nullptr) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json r;
    r["alpha"] = row.alpha;
    r["n_total"] = row.n_total;
    r["n_disinfo"] = row.n_disinfo;
    r["mention_freq"] = row.mention_freq;
    if (row.avg_sentiment) r["avg_sentiment"] = *row.avg_sentiment;
    else r["avg_sentiment"] = nullptr;
    rows.push_back(r);
  }
  nlohmann::json j;
  if (prov != nullptr) j["_provenance"] = prov->to_json();
  j["entity"] = table.entity;
  j["seed"] = table.seed;
  j["rows"] = rows;
  j["authentic_baseline"] = aggregate_to_json(table.authentic_baseline);
  j["disinfo_pool_stats"] = aggregate_to_json(table.disinfo_pool_stats);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("write_sweep_json: cannot write " + path);
  os << j.dump(2) << "\n";
}

// Space-separated columns for external plotting tools.
inline void write_sweep_plot_dat(const SweepTable& table,
                                 const std::string& path,
                                 const Provenance* prov = nullptr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("write_sweep_plot_dat: cannot write " + path);
  if (prov != nullptr) os << prov->comment_line();
  os << "# alpha mention_freq avg_sentiment (entity: " << table.entity
     << ")\n";
  for (const auto& row : table.rows) {
    os << blend_detail::fmt_double(row.alpha, "%.6g") << " "
       << blend_detail::fmt_double(row.mention_freq, "%.10g") << " "
       << (row.avg_sentiment
               ? blend_detail::fmt_double(*row.avg_sentiment, "%.10g")
               : std::string("nan"))
       << "\n";
  }
}

}  // namespace ugcs
