#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "ugc_sentinel/error.hpp"
#include "ugc_sentinel/lda.hpp"
#include "ugc_sentinel/metrics.hpp"
#include "ugc_sentinel/rng.hpp"

namespace ugcs {

// Feedforward classifier over topic features: input-hidden-1 with sigmoid
// activations and a sigmoid output. At the standard 20-16-1 shape the
// weight-only parameter count is 20*16 + 16*1 = 336 (353 with biases).
struct MlpConfig {
  int input = 20;
  int hidden = 16;
  std::string hidden_activation = "sigmoid";  // or "tanh"
};

struct TrainHyper {
  double lr = 0.05;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 200;
  int patience = 10;
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;
};

struct MlpModel {
  MlpConfig config;
  std::vector<double> w1;  // hidden x input, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;
  std::uint64_t seed = 0;
  std::vector<EpochStats> training_log;
  std::vector<std::string> notes;
  int best_epoch = -1;
  bool degenerate = false;

  std::size_t weight_parameter_count() const {
    return static_cast<std::size_t>(config.input * config.hidden +
                                    config.hidden);
  }
  std::size_t parameter_count() const {
    return weight_parameter_count() +
           static_cast<std::size_t>(config.hidden) + 1;
  }

  double activate(double a) const {
    if (config.hidden_activation == "tanh") return std::tanh(a);
    return 1.0 / (1.0 + std::exp(-a));
  }
  double activate_deriv(double h) const {
    if (config.hidden_activation == "tanh") return 1.0 - h * h;
    return h * (1.0 - h);
  }

  // Forward pass; optionally yields the hidden layer for backprop.
  double forward(const std::vector<double>& x,
                 std::vector<double>* hidden_out = nullptr) const {
    if (static_cast<int>(x.size()) != config.input)
      throw ValidationError("mlp: feature length " + std::to_string(x.size()) +
                            ", expected " + std::to_string(config.input));
    for (const double v : x)
      if (!std::isfinite(v))
        throw ValidationError("mlp: non-finite feature value");
    std::vector<double> h(static_cast<std::size_t>(config.hidden));
    for (int j = 0; j < config.hidden; ++j) {
      double a = b1[static_cast<std::size_t>(j)];
      const double* row = &w1[static_cast<std::size_t>(j * config.input)];
      for (int i = 0; i < config.input; ++i) a += row[i] * x[static_cast<std::size_t>(i)];
      h[static_cast<std::size_t>(j)] = activate(a);
    }
    double z = b2;
    for (int j = 0; j < config.hidden; ++j)
      z += w2[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(j)];
    if (hidden_out != nullptr) *hidden_out = std::move(h);
    return 1.0 / (1.0 + std::exp(-z));
  }

  nlohmann::json to_json() const {
    return {{"input", config.input},
            {"hidden", config.hidden},
            {"hidden_activation", config.hidden_activation},
            {"w1", w1},
            {"b1", b1},
            {"w2", w2},
            {"b2", b2},
            {"seed", seed},
            {"best_epoch", best_epoch},
            {"degenerate", degenerate}};
  }

  static MlpModel from_json(const nlohmann::json& j) {
    MlpModel m;
    m.config.input = j.at("input");
    m.config.hidden = j.at("hidden");
    m.config.hidden_activation = j.value("hidden_activation", "sigmoid");
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2");
    m.seed = j.value("seed", 0ull);
    m.best_epoch = j.value("best_epoch", -1);
    m.degenerate = j.value("degenerate", false);
    return m;
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("MlpModel::save: cannot write " + path);
    os << to_json().dump() << "\n";
  }
  static MlpModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("MlpModel::load: cannot read " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }
};

namespace mlp_detail {

inline double bce(double p, double y) {
  const double eps = 1e-12;
  return -(y * std::log(std::max(p, eps)) +
           (1.0 - y) * std::log(std::max(1.0 - p, eps)));
}

// Mean BCE over a batch plus analytic gradients. Gradients use the
// sigmoid-BCE simplification dL/dz = p - y.
struct Gradients {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;
  double loss = 0.0;
};

inline Gradients batch_gradients(const MlpModel& m,
                                 const std::vector<const std::vector<double>*>& xs,
                                 const std::vector<double>& ys) {
  Gradients g;
  g.w1.assign(m.w1.size(), 0.0);
  g.b1.assign(m.b1.size(), 0.0);
  g.w2.assign(m.w2.size(), 0.0);
  const double bsz = static_cast<double>(xs.size());
  std::vector<double> h;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    const auto& x = *xs[n];
    const double p = m.forward(x, &h);
    g.loss += bce(p, ys[n]);
    const double dz2 = (p - ys[n]) / bsz;
    for (int j = 0; j < m.config.hidden; ++j) {
      g.w2[static_cast<std::size_t>(j)] += dz2 * h[static_cast<std::size_t>(j)];
      const double dh = dz2 * m.w2[static_cast<std::size_t>(j)];
      const double dz1 = dh * m.activate_deriv(h[static_cast<std::size_t>(j)]);
      g.b1[static_cast<std::size_t>(j)] += dz1;
      double* wrow = &g.w1[static_cast<std::size_t>(j * m.config.input)];
      for (int i = 0; i < m.config.input; ++i)
        wrow[i] += dz1 * x[static_cast<std::size_t>(i)];
    }
    g.b2 += dz2;
  }
  g.loss /= bsz;
  return g;
}

inline double label_to_target(Label l) {
  return l == Label::disinformative ? 1.0 : 0.0;
}

}  // namespace mlp_detail

inline MlpModel init_mlp(const MlpConfig& config, std::uint64_t seed) {
  MlpModel m;
  m.config = config;
  m.seed = seed;
  Rng rng(seed);
  const auto xavier = [&](int fan_in, int fan_out) {
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return (2.0 * rng.next_double() - 1.0) * r;
  };
  m.w1.resize(static_cast<std::size_t>(config.input * config.hidden));
  for (auto& w : m.w1) w = xavier(config.input, config.hidden);
  m.b1.assign(static_cast<std::size_t>(config.hidden), 0.0);
  m.w2.resize(static_cast<std::size_t>(config.hidden));
  for (auto& w : m.w2) w = xavier(config.hidden, 1);
  m.b2 = 0.0;
  return m;
}

inline Prediction predict(const MlpModel& m, const TopicFeatureVector& f) {
  Prediction p;
  p.id = f.id;
  p.score = m.forward(f.values);
  p.model_id = "mlp";
  return p;
}

// Mini-batch SGD with momentum, early stopping on validation AUC with
// best-epoch weights restored. Seed-deterministic.
inline MlpModel train_mlp(const std::vector<TopicFeatureVector>& train,
                          const std::vector<TopicFeatureVector>& val,
                          const TrainHyper& hyper, MlpConfig config = {}) {
  if (train.empty() || val.empty())
    throw ValidationError("train_mlp: empty train or validation set");
  config.input = static_cast<int>(train[0].values.size());
  for (const auto& f : train)
    if (static_cast<int>(f.values.size()) != config.input)
      throw ValidationError("train_mlp: inconsistent feature lengths");

  std::size_t positives = 0;
  for (const auto& f : train)
    if (f.label == Label::disinformative) ++positives;
  const std::size_t negatives = train.size() - positives;

  MlpModel model = init_mlp(config, hyper.seed);
  if (positives == 0 || negatives == 0) {
    model.degenerate = true;
    model.notes.push_back("degenerate: single-class training labels");
    return model;
  }
  const double minority_frac =
      static_cast<double>(std::min(positives, negatives)) /
      static_cast<double>(train.size());
  if (minority_frac < 0.2)
    model.notes.push_back("warning: minority class below 20% of train");

  bool val_has_both = false;
  {
    bool pos = false, neg = false;
    for (const auto& f : val) {
      if (f.label == Label::disinformative) pos = true;
      else neg = true;
    }
    val_has_both = pos && neg;
    if (!val_has_both)
      model.notes.push_back(
          "warning: single-class validation set; early stopping on train loss");
  }

  Rng rng(hyper.seed + 0x9E3779B97F4A7C15ull);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> v_w1(model.w1.size(), 0.0), v_b1(model.b1.size(), 0.0),
      v_w2(model.w2.size(), 0.0);
  double v_b2 = 0.0;

  MlpModel best = model;
  double best_metric = -std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(hyper.batch_size)) {
      std::vector<const std::vector<double>*> xs;
      std::vector<double> ys;
      const std::size_t end = std::min(
          order.size(), at + static_cast<std::size_t>(hyper.batch_size));
      for (std::size_t i = at; i < end; ++i) {
        xs.push_back(&train[order[i]].values);
        ys.push_back(mlp_detail::label_to_target(train[order[i]].label));
      }
      auto g = mlp_detail::batch_gradients(model, xs, ys);
      if (!std::isfinite(g.loss))
        throw Error("train_mlp: non-finite loss at epoch " +
                    std::to_string(epoch) + " (lr too high?)");
      epoch_loss += g.loss;
      ++batches;
      for (std::size_t i = 0; i < model.w1.size(); ++i) {
        v_w1[i] = hyper.momentum * v_w1[i] - hyper.lr * g.w1[i];
        model.w1[i] += v_w1[i];
      }
      for (std::size_t i = 0; i < model.b1.size(); ++i) {
        v_b1[i] = hyper.momentum * v_b1[i] - hyper.lr * g.b1[i];
        model.b1[i] += v_b1[i];
      }
      for (std::size_t i = 0; i < model.w2.size(); ++i) {
        v_w2[i] = hyper.momentum * v_w2[i] - hyper.lr * g.w2[i];
        model.w2[i] += v_w2[i];
      }
      v_b2 = hyper.momentum * v_b2 - hyper.lr * g.b2;
      model.b2 += v_b2;
    }
    epoch_loss /= static_cast<double>(batches);

    double metric;
    double val_auc = 0.0;
    if (val_has_both) {
      std::vector<Prediction> preds;
      std::vector<Label> labels;
      for (const auto& f : val) {
        preds.push_back(predict(model, f));
        labels.push_back(f.label);
      }
      val_auc = auc_roc(preds, labels);
      metric = val_auc;
    } else {
      metric = -epoch_loss;
    }
    model.training_log.push_back({epoch, epoch_loss, val_auc});

    // Ties go to the later epoch: the ranking metric can saturate while the
    // decision threshold is still calibrating.
    if (metric >= best_metric) {
      if (metric > best_metric) since_best = 0;
      else ++since_best;
      best_metric = metric;
      best = model;
      best.best_epoch = epoch;
    } else {
      ++since_best;
    }
    if (since_best > hyper.patience) break;
  }
  auto log = model.training_log;
  auto notes = model.notes;
  best.training_log = std::move(log);
  best.notes = std::move(notes);
  return best;
}

// Compares analytic gradients against central finite differences over
// every parameter; returns the maximum relative error.
inline double grad_check(MlpModel model,
                         const std::vector<TopicFeatureVector>& batch,
                         double eps = 1e-5) {
  if (batch.empty()) throw ValidationError("grad_check: empty batch");
  std::vector<const std::vector<double>*> xs;
  std::vector<double> ys;
  for (const auto& f : batch) {
    xs.push_back(&f.values);
    ys.push_back(mlp_detail::label_to_target(f.label));
  }
  const auto analytic = mlp_detail::batch_gradients(model, xs, ys);

  std::vector<double*> params;
  std::vector<double> grads;
  for (std::size_t i = 0; i < model.w1.size(); ++i) {
    params.push_back(&model.w1[i]);
    grads.push_back(analytic.w1[i]);
  }
  for (std::size_t i = 0; i < model.b1.size(); ++i) {
    params.push_back(&model.b1[i]);
    grads.push_back(analytic.b1[i]);
  }
  for (std::size_t i = 0; i < model.w2.size(); ++i) {
    params.push_back(&model.w2[i]);
    grads.push_back(analytic.w2[i]);
  }
  params.push_back(&model.b2);
  grads.push_back(analytic.b2);

  auto loss_at = [&]() {
    double total = 0.0;
    for (std::size_t n = 0; n < xs.size(); ++n)
      total += mlp_detail::bce(model.forward(*xs[n]), ys[n]);
    return total / static_cast<double>(xs.size());
  };

  double max_rel = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = *params[i];
    *params[i] = saved + eps;
    const double up = loss_at();
    *params[i] = saved - eps;
    const double down = loss_at();
    *params[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom =
        std::max({std::abs(grads[i]), std::abs(numeric), 1e-10});
    max_rel = std::max(max_rel, std::abs(grads[i] - numeric) / denom);
  }
  return max_rel;
}

}  // namespace ugcs
