#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ugc_sentinel/corpus.hpp"

namespace ugcs {

// Positive class = disinformative throughout.

struct Prediction {
  std::string id;
  double score = 0.0;  // probability of disinformative, in [0,1]
  std::string model_id;
};

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

// score >= threshold predicts disinformative. Labels must cover exactly the
// predicted ids.
inline ConfusionCounts confusion(const std::vector<Prediction>& preds,
                                 const std::map<std::string, Label>& labels,
                                 double threshold = 0.5) {
  ConfusionCounts c;
  for (const auto& p : preds) {
    auto it = labels.find(p.id);
    if (it == labels.end())
      throw ValidationError("confusion: no label for id " + p.id);
    const bool truth = it->second == Label::disinformative;
    const bool predicted = p.score >= threshold;
    if (truth && predicted) ++c.tp;
    else if (truth && !predicted) ++c.fn;
    else if (!truth && predicted) ++c.fp;
    else ++c.tn;
  }
  return c;
}

// Ratios with an empty denominator are reported as null, never as 0.
struct MetricsRow {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> f1;
  std::optional<double> auc_roc;
  double threshold = 0.5;
  ConfusionCounts counts;
};

inline MetricsRow metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw ValidationError("metrics: empty counts");
  MetricsRow row;
  row.counts = c;
  auto ratio = [](std::size_t num,
                  std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  row.accuracy = ratio(c.tp + c.tn, c.total());
  row.precision = ratio(c.tp, c.tp + c.fp);
  row.sensitivity = ratio(c.tp, c.tp + c.fn);
  row.specificity = ratio(c.tn, c.tn + c.fp);
  if (row.precision && row.sensitivity &&
      (*row.precision + *row.sensitivity) > 0.0) {
    row.f1 = 2.0 * *row.precision * *row.sensitivity /
             (*row.precision + *row.sensitivity);
  }
  return row;
}

// Rank-based (Mann-Whitney) AUC with average ranks for ties, equal to the
// pairwise P(score_pos > score_neg) + 0.5 P(equal) estimator.
inline double auc_roc(const std::vector<Prediction>& preds,
                      const std::vector<Label>& labels) {
  if (preds.size() != labels.size())
    throw ValidationError("auc_roc: predictions and labels differ in size");
  std::vector<std::pair<double, bool>> scored;
  scored.reserve(preds.size());
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool pos = labels[i] == Label::disinformative;
    n_pos += pos ? 1u : 0u;
    scored.push_back({preds[i].score, pos});
  }
  const std::size_t n_neg = scored.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw ValidationError("auc_roc: both classes required");
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    // Average rank of the tie group [i, j), 1-based ranks.
    const double avg_rank = (static_cast<double>(i + 1) +
                             static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (scored[k].second) rank_sum_pos += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Highest sensitivity attainable while holding specificity at or above the
// floor; returns the threshold achieving it, if any.
inline std::optional<double> sensitivity_max_threshold(
    const std::vector<Prediction>& preds,
    const std::map<std::string, Label>& labels,
    double specificity_floor = 0.9) {
  std::vector<double> candidates = {0.0, 1.0 + 1e-12};
  for (const auto& p : preds) candidates.push_back(p.score);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  std::optional<double> best_threshold;
  double best_sensitivity = -1.0;
  for (const double t : candidates) {
    const auto c = confusion(preds, labels, t);
    const auto row = metrics(c);
    if (!row.specificity || !row.sensitivity) continue;
    if (*row.specificity >= specificity_floor &&
        *row.sensitivity > best_sensitivity) {
      best_sensitivity = *row.sensitivity;
      best_threshold = t;
    }
  }
  return best_threshold;
}

// --------------------------------------------------------------------------
// Full evaluation grid: 6 metrics x models x datasets.

struct DetectionReport {
  // model id -> dataset id -> row
  std::map<std::string, std::map<std::string, MetricsRow>> cells;
  std::map<std::string, std::map<std::string, std::optional<double>>>
      sensitivity_thresholds;  // subject to specificity >= 0.9

  std::size_t metric_cell_count() const {
    std::size_t n = 0;
    for (const auto& [model, per_dataset] : cells) n += 6 * per_dataset.size();
    return n;
  }
};

struct LabeledPredictions {
  std::vector<Prediction> preds;
  std::map<std::string, Label> labels;
};

// Requires every (model, dataset) cell to be present and computable.
inline DetectionReport evaluate_suite(
    const std::vector<std::string>& models,
    const std::vector<std::string>& datasets,
    const std::map<std::string, std::map<std::string, LabeledPredictions>>&
        inputs,
    double threshold = 0.5) {
  DetectionReport report;
  for (const auto& model : models) {
    auto mit = inputs.find(model);
    for (const auto& dataset : datasets) {
      if (mit == inputs.end() || !mit->second.count(dataset))
        throw ValidationError("evaluate_suite: missing cell (" + model + ", " +
                              dataset + ")");
      const auto& lp = mit->second.at(dataset);
      auto row = metrics(confusion(lp.preds, lp.labels, threshold));
      row.threshold = threshold;
      std::vector<Label> label_vec;
      label_vec.reserve(lp.preds.size());
      for (const auto& p : lp.preds) label_vec.push_back(lp.labels.at(p.id));
      row.auc_roc = auc_roc(lp.preds, label_vec);
      report.cells[model][dataset] = row;
      report.sensitivity_thresholds[model][dataset] =
          sensitivity_max_threshold(lp.preds, lp.labels);
    }
  }
  return report;
}

namespace metrics_detail {

inline std::string cell(const std::optional<double>& v) {
  if (!v) return "null";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v);
  return buf;
}

}  // namespace metrics_detail

// Text table shaped like the paper's comparison table: metric rows, one
// column per (model, dataset).
inline std::string format_report_table(
    const DetectionReport& report, const std::vector<std::string>& models,
    const std::vector<std::string>& datasets) {
  const std::vector<std::pair<std::string,
                              std::optional<double> MetricsRow::*>>
      rows = {{"Accuracy", &MetricsRow::accuracy},
              {"Precision", &MetricsRow::precision},
              {"Specificity", &MetricsRow::specificity},
              {"Sensitivity", &MetricsRow::sensitivity},
              {"F1 Score", &MetricsRow::f1},
              {"AUC-ROC", &MetricsRow::auc_roc}};
  std::string out = "Metric";
  for (const auto& m : models)
    for (const auto& d : datasets) out += "\t" + m + "/" + d;
  out += "\n";
  for (const auto& [name, member] : rows) {
    out += name;
    for (const auto& m : models)
      for (const auto& d : datasets)
        out += "\t" + metrics_detail::cell(report.cells.at(m).at(d).*member);
    out += "\n";
  }
  return out;
}

inline nlohmann::json report_to_json(const DetectionReport& report) {
  nlohmann::json j;
  for (const auto& [model, per_dataset] : report.cells) {
    for (const auto& [dataset, row] : per_dataset) {
      nlohmann::json r;
      auto set = [&](const char* k, const std::optional<double>& v) {
        if (v) r[k] = *v;
        else r[k] = nullptr;
      };
      set("accuracy", row.accuracy);
      set("precision", row.precision);
      set("sensitivity", row.sensitivity);
      set("specificity", row.specificity);
      set("f1", row.f1);
      set("auc_roc", row.auc_roc);
      r["threshold"] = row.threshold;
      r["counts"] = {{"tp", row.counts.tp},
                     {"fp", row.counts.fp},
                     {"tn", row.counts.tn},
                     {"fn", row.counts.fn}};
      const auto& st = report.sensitivity_thresholds.at(model).at(dataset);
      if (st) r["sensitivity_max_threshold_at_specificity_0.9"] = *st;
      else r["sensitivity_max_threshold_at_specificity_0.9"] = nullptr;
      j[model][dataset] = r;
    }
  }
  return j;
}

inline void write_predictions_csv(const std::vector<Prediction>& preds,
                                  const std::map<std::string, Label>& labels,
                                  const std::string& path,
                                  const Provenance* prov = nullptr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("write_predictions_csv: cannot write " + path);
  if (prov != nullptr) os << prov->comment_line();
  os << "id,score,label\n";
  char buf[64];
  for (const auto& p : preds) {
    auto it = labels.find(p.id);
    std::snprintf(buf, sizeof(buf), "%.17g", p.score);
    os << csv::escape(p.id) << "," << buf << ","
       << (it == labels.end() ? "unknown" : to_string(it->second)) << "\n";
  }
}

// Fixture scores: CSV with header id,score.
inline std::map<std::string, double> read_score_fixture(
    const std::string& path) {
  auto records = csv::parse_file(path);
  if (records.empty())
    throw ValidationError("score fixture: empty file " + path);
  std::map<std::string, double> scores;
  std::size_t start = 0;
  if (!records[0].fields.empty() && records[0].fields[0] == "id") start = 1;
  for (std::size_t i = start; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() < 2)
      throw ValidationError("score fixture: bad record at line " +
                            std::to_string(rec.line_no));
    try {
      scores[rec.fields[0]] = std::stod(rec.fields[1]);
    } catch (const std::exception&) {
      throw ValidationError("score fixture: bad score at line " +
                            std::to_string(rec.line_no));
    }
  }
  return scores;
}

}  // namespace ugcs
