#pragma once

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "ugc_sentinel/blend.hpp"
#include "ugc_sentinel/clustering.hpp"
#include "ugc_sentinel/config.hpp"
#include "ugc_sentinel/corpus.hpp"
#include "ugc_sentinel/diffmap.hpp"
#include "ugc_sentinel/embedding.hpp"
#include "ugc_sentinel/external_detector.hpp"
#include "ugc_sentinel/fabricator.hpp"
#include "ugc_sentinel/gateway.hpp"
#include "ugc_sentinel/lda.hpp"
#include "ugc_sentinel/metrics.hpp"
#include "ugc_sentinel/mlp.hpp"
#include "ugc_sentinel/nese.hpp"
#include "ugc_sentinel/projection.hpp"
#include "ugc_sentinel/vocab.hpp"

namespace ugcs {

// Stage order is fixed; a subset request still honors dependencies by
// requiring the upstream artifacts on disk.
inline const std::vector<std::string>& pipeline_stage_order() {
  static const std::vector<std::string> order = {
      "ingest", "fabricate", "nese", "blend", "features", "detect", "report"};
  return order;
}

struct StageRecord {
  std::string name;
  std::map<std::string, std::string> input_hashes;   // path -> sha256
  std::map<std::string, std::string> output_hashes;  // path -> sha256
  double ms = 0.0;
  bool cached = false;
  std::vector<std::string> notes;
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  bool offline = false;
  std::vector<StageRecord> stages;

  nlohmann::json to_json() const {
    nlohmann::json js = nlohmann::json::array();
    for (const auto& s : stages) {
      js.push_back({{"name", s.name},
                    {"inputs", s.input_hashes},
                    {"outputs", s.output_hashes},
                    {"ms", s.ms},
                    {"cached", s.cached},
                    {"notes", s.notes}});
    }
    return {{"config_hash", config_hash},
            {"tool_version", tool_version},
            {"offline", offline},
            {"stages", js}};
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("manifest: cannot write " + path);
    os << to_json().dump(2) << "\n";
  }
};

struct PipelineOptions {
  Config config;
  std::string out_dir;
  bool offline = false;
  std::vector<std::string> stages;  // empty = all
};

namespace pipeline_detail {

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StageError("missing artifact: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

// Exclusive ownership of the output directory for the run's duration.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir)
      : path_(dir / ".lock") {
    std::filesystem::create_directories(dir);
    if (std::filesystem::exists(path_))
      throw ValidationError("output directory locked by another run: " +
                            path_.string());
    std::ofstream os(path_);
    os << "pid " << ::getpid() << "\n";
  }
  ~DirLock() { std::filesystem::remove(path_); }

 private:
  std::filesystem::path path_;
};

}  // namespace pipeline_detail

class Pipeline {
 public:
  explicit Pipeline(PipelineOptions opts)
      : cfg_(std::move(opts.config)),
        out_(opts.out_dir),
        offline_(opts.offline) {
    datasets_ = cfg_.get_list("corpus", "datasets", "default");
    if (datasets_.empty())
      throw ValidationError("pipeline: corpus.datasets is empty");
    prov_.config_hash = cfg_.hash();
    prov_.seed = cfg_.get_u64("corpus", "seed", 42);
    validate_providers();
  }

  RunManifest run(std::vector<std::string> stages) {
    if (stages.empty()) stages = pipeline_stage_order();
    pipeline_detail::DirLock lock(out_);
    RunManifest manifest;
    manifest.config_hash = cfg_.hash();
    manifest.offline = offline_;
    for (const auto& name : pipeline_stage_order()) {
      if (std::find(stages.begin(), stages.end(), name) == stages.end())
        continue;
      manifest.stages.push_back(run_stage(name));
    }
    manifest.save((out_ / "manifest.json").string());
    return manifest;
  }

  const Config& config() const { return cfg_; }

 private:
  // ----- plumbing ---------------------------------------------------------

  std::filesystem::path stage_dir(const std::string& name) const {
    return out_ / name;
  }

  std::filesystem::path spath(const std::string& stage,
                              const std::string& file) const {
    return stage_dir(stage) / file;
  }

  std::vector<std::string> stage_inputs(const std::string& name) const {
    std::vector<std::string> inputs;
    if (name == "ingest") {
      for (const auto& d : datasets_)
        inputs.push_back(cfg_.get("corpus", d + "_path", ""));
    } else if (name == "fabricate") {
      for (const auto& d : datasets_)
        inputs.push_back(spath("ingest", "corpus_" + d + ".jsonl").string());
    } else if (name == "nese") {
      for (const auto& d : datasets_) {
        inputs.push_back(spath("ingest", "corpus_" + d + ".jsonl").string());
        inputs.push_back(spath("fabricate", "pairs_" + d + ".jsonl").string());
      }
    } else if (name == "blend") {
      inputs.push_back(spath("nese", "entities.json").string());
      for (const auto& d : datasets_)
        inputs.push_back(spath("nese", "results_" + d + ".jsonl").string());
    } else if (name == "features") {
      for (const auto& d : datasets_)
        inputs.push_back(spath("fabricate", "pairs_" + d + ".jsonl").string());
    } else if (name == "detect") {
      for (const auto& d : datasets_) {
        for (const auto* split : {"train", "val", "test"}) {
          inputs.push_back(
              spath("features",
                    std::string("features_") + split + "_" + d + ".jsonl")
                  .string());
          inputs.push_back(
              spath("features",
                    std::string("efeatures_") + split + "_" + d + ".jsonl")
                  .string());
        }
        const std::string fixture =
            cfg_.get("detect", "external_scores_" + d, "");
        if (!fixture.empty()) inputs.push_back(fixture);
      }
    } else if (name == "report") {
      for (const auto& d : datasets_) {
        inputs.push_back(spath("blend", "sweep_" + d + ".csv").string());
        inputs.push_back(spath("features", "diffpoints_" + d + ".csv").string());
        inputs.push_back(spath("detect", "model_lda_" + d + ".json").string());
      }
    }
    return inputs;
  }

  StageRecord run_stage(const std::string& name) {
    StageRecord record;
    record.name = name;
    const auto t0 = std::chrono::steady_clock::now();

    // Hash inputs; a missing artifact is a dependency error.
    std::string key_material = cfg_.hash() + "|" + kToolVersion + "|" + name;
    for (const auto& path : stage_inputs(name)) {
      if (path.empty()) continue;
      if (!std::filesystem::exists(path))
        throw StageError("stage " + name + ": missing artifact: " + path);
      const auto h = pipeline_detail::hash_file(path);
      record.input_hashes[path] = h;
      key_material += "|" + h;
    }
    const std::string stage_key = sha256_hex(key_material);

    const auto dir = stage_dir(name);
    const auto key_file = dir / ".stage_hash";
    if (std::filesystem::exists(key_file)) {
      std::ifstream in(key_file);
      std::string existing;
      in >> existing;
      if (existing == stage_key) {
        record.cached = true;
        collect_outputs(dir, record);
        record.ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
        return record;
      }
    }

    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    if (name == "ingest") stage_ingest(record);
    else if (name == "fabricate") stage_fabricate(record);
    else if (name == "nese") stage_nese(record);
    else if (name == "blend") stage_blend(record);
    else if (name == "features") stage_features(record);
    else if (name == "detect") stage_detect(record);
    else if (name == "report") stage_report(record);
    else throw ValidationError("unknown stage: " + name);

    {
      std::ofstream os(key_file);
      os << stage_key << "\n";
    }
    collect_outputs(dir, record);
    record.ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    return record;
  }

  void collect_outputs(const std::filesystem::path& dir, StageRecord& record) {
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto name = entry.path().filename().string();
      if (!name.empty() && name[0] == '.') continue;
      files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
      record.output_hashes[f] = pipeline_detail::hash_file(f);
  }

  void validate_providers() const {
    const std::string provider = cfg_.get("gateway", "provider", "mock");
    const std::string embed = cfg_.get("features", "embedding_provider",
                                       "synthetic");
    if (offline_) {
      if (provider != "mock")
        throw ValidationError(
            "offline mode requires gateway.provider = mock, got " + provider);
      if (embed != "synthetic" && embed != "fixture")
        throw ValidationError(
            "offline mode requires features.embedding_provider = synthetic "
            "or fixture, got " +
            embed);
    }
  }

  Gateway make_gateway() const {
    const std::string provider_name = cfg_.get("gateway", "provider", "mock");
    std::shared_ptr<ChatProvider> provider;
    if (provider_name == "mock") {
      provider = std::make_shared<MockChatProvider>();
    } else {
      throw ValidationError(
          "gateway.provider = " + provider_name +
          " is not runnable inside the pipeline; use the CLI verbs with an "
          "explicit endpoint, or provider = mock");
    }
    GatewayConfig gw;
    gw.cache_dir = (out_ / "cache" / "chat").string();
    gw.backoff_base_ms = cfg_.get_double("gateway", "backoff_base_ms", 0.0);
    return Gateway(provider, gw);
  }

  std::unique_ptr<EmbeddingProvider> make_embedding_provider() const {
    const std::string name =
        cfg_.get("features", "embedding_provider", "synthetic");
    if (name == "synthetic") {
      return std::make_unique<SyntheticEmbeddingProvider>(
          static_cast<std::size_t>(cfg_.get_int("features", "embedding_dim", 32)));
    }
    throw ValidationError("features.embedding_provider = " + name +
                          " requires the features embed CLI verb");
  }

  Corpus load_corpus(const std::filesystem::path& path) const {
    auto res = ingest_jsonl(path.string());
    if (!res.rejections.empty())
      throw StageError("corrupt intermediate corpus: " + path.string());
    return std::move(res.corpus);
  }

  // ----- stages -----------------------------------------------------------

  void stage_ingest(StageRecord& record) {
    for (const auto& d : datasets_) {
      const std::string path = cfg_.get("corpus", d + "_path", "");
      if (path.empty())
        throw ValidationError("config: corpus." + d + "_path missing");
      const std::string format = cfg_.get("corpus", d + "_format", "jsonl");
      auto res = ingest(path, format == "csv" ? Format::csv : Format::jsonl);
      if (cfg_.get_bool("corpus", "assume_authentic", true)) {
        for (auto& r : res.corpus.reviews)
          if (r.label == Label::unknown) r.label = Label::authentic;
      }
      for (auto& r : res.corpus.reviews)
        if (r.source == Source::other) {
          if (d == "amazon") r.source = Source::amazon;
          else if (d == "yelp") r.source = Source::yelp;
        }

      FilterRules rules;
      rules.non_english = cfg_.get_bool("corpus", "filter_non_english", true);
      rules.length_quartiles =
          cfg_.get_bool("corpus", "filter_length_quartiles", false);
      rules.dedup = cfg_.get_bool("corpus", "filter_dedup", true);
      nlohmann::json filter_json;
      if (rules.non_english || rules.length_quartiles || rules.dedup) {
        auto [filtered, report] = filter_corpus(res.corpus, rules);
        res.corpus = std::move(filtered);
        filter_json = report.to_json();
      }

      const auto n = static_cast<std::size_t>(
          cfg_.get_int("corpus", "sample_n", 0));
      if (n > 0 && n < res.corpus.size())
        res.corpus = sample(res.corpus, n, prov_.seed);

      emit_jsonl(res.corpus, spath("ingest", "corpus_" + d + ".jsonl").string(),
                 &prov_);
      nlohmann::json meta;
      meta["_provenance"] = prov_.to_json();
      meta["rejections"] = nlohmann::json::array();
      for (const auto& rej : res.rejections)
        meta["rejections"].push_back({{"line", rej.line_no},
                                      {"reason", rej.reason},
                                      {"id", rej.record_id}});
      if (!filter_json.is_null()) meta["filter_report"] = filter_json;
      std::ofstream os(spath("ingest", "ingest_report_" + d + ".json"));
      os << meta.dump(2) << "\n";
      record.notes.push_back(d + ": " + std::to_string(res.corpus.size()) +
                             " reviews");
    }
  }

  void stage_fabricate(StageRecord& record) {
    auto gateway = make_gateway();
    for (const auto& d : datasets_) {
      FabricationJob job;
      job.input = load_corpus(spath("ingest", "corpus_" + d + ".jsonl"));
      job.decoding.temperature =
          cfg_.get_double("fabricate", "temperature", 0.7);
      job.max_failure_frac =
          cfg_.get_double("fabricate", "max_failure_frac", 0.2);
      auto result = fabricate_corpus(gateway, job);

      Corpus paired = job.input;
      for (const auto& r : result.pairs.reviews) paired.reviews.push_back(r);
      emit_jsonl(paired, spath("fabricate", "pairs_" + d + ".jsonl").string(),
                 &prov_);
      nlohmann::json skips = nlohmann::json::array();
      for (const auto& s : result.skips)
        skips.push_back({{"id", s.id}, {"reason", s.reason}});
      nlohmann::json meta;
      meta["_provenance"] = prov_.to_json();
      meta["skips"] = skips;
      meta["calls"] = result.stats.calls;
      meta["cache_hits"] = result.stats.cache_hits;
      std::ofstream os(spath("fabricate", "fabricate_report_" + d + ".json"));
      os << meta.dump(2) << "\n";
      record.notes.push_back(d + ": " +
                             std::to_string(result.pairs.size()) + " pairs, " +
                             std::to_string(result.skips.size()) + " skips");
    }
  }

  void stage_nese(StageRecord& record) {
    auto gateway = make_gateway();
    const auto min_count = static_cast<std::size_t>(
        cfg_.get_int("nese", "min_count", 5));
    const auto k =
        static_cast<std::size_t>(cfg_.get_int("nese", "k", 10));

    std::vector<EntityList> per_dataset;
    for (const auto& d : datasets_) {
      auto authentic = load_corpus(spath("ingest", "corpus_" + d + ".jsonl"));
      auto discovery = discover_entities(gateway, authentic);
      auto table = tabulate_and_prune(discovery, min_count, d);
      if (table.entries.empty())
        throw StageError("nese: no entities survive pruning for dataset " + d +
                         " (lower nese.min_count?)");
      {
        std::ofstream os(spath("nese", "table_" + d + ".json"));
        nlohmann::json j = table.to_json();
        j["_provenance"] = prov_.to_json();
        os << j.dump(2) << "\n";
      }
      per_dataset.push_back(consolidate_top_entities(gateway, table, k));
    }

    EntityList entities = per_dataset[0];
    for (std::size_t i = 1; i < per_dataset.size(); ++i)
      entities = union_entities(entities, per_dataset[i]);
    {
      std::ofstream os(spath("nese", "entities.json"));
      nlohmann::json j = entities.to_json();
      j["_provenance"] = prov_.to_json();
      os << j.dump(2) << "\n";
    }
    record.notes.push_back("entity list size " +
                           std::to_string(entities.entities.size()));

    for (const auto& d : datasets_) {
      auto paired = load_corpus(spath("fabricate", "pairs_" + d + ".jsonl"));
      auto outcome = evaluate_corpus(gateway, paired, entities);
      write_nese_results(outcome.results,
                         spath("nese", "results_" + d + ".jsonl").string(),
                         &prov_);
      nlohmann::json meta;
      meta["_provenance"] = prov_.to_json();
      meta["failures"] = nlohmann::json::array();
      for (const auto& f : outcome.failures)
        meta["failures"].push_back({{"id", f.id}, {"reason", f.reason}});
      meta["violations"] = outcome.violation_log;
      std::ofstream os(spath("nese", "nese_report_" + d + ".json"));
      os << meta.dump(2) << "\n";
    }
  }

  void stage_blend(StageRecord& record) {
    EntityList entities;
    {
      std::ifstream in(spath("nese", "entities.json"));
      nlohmann::json j;
      in >> j;
      entities = EntityList::from_json(j);
    }
    const std::string entity = cfg_.get("blend", "entity", "Pricing");
    const double step = cfg_.get_double("blend", "step", 0.005);
    const auto sweep_seed = cfg_.get_u64("blend", "seed", prov_.seed);

    for (const auto& d : datasets_) {
      auto results =
          read_nese_results(spath("nese", "results_" + d + ".jsonl").string());
      std::vector<NeseResult> auth, dis;
      for (auto& r : results) {
        if (r.label == Label::disinformative) dis.push_back(std::move(r));
        else auth.push_back(std::move(r));
      }
      auto n_per_side = static_cast<std::size_t>(
          cfg_.get_int("blend", "n_per_side", 1000));
      // Counterpart exclusion can strip up to n_per_side entries from the
      // injection pool, so cap at half of it.
      n_per_side = std::min({n_per_side, auth.size(), dis.size() / 2});
      if (n_per_side == 0)
        throw StageError("blend: pools too small for a subsample in " + d);
      auto pools = build_subsample(auth, dis, n_per_side, sweep_seed);
      auto grid = make_grid(step, 0.5, sweep_seed);
      auto table = sweep(pools, grid, entity, entities);
      write_sweep_csv(table, spath("blend", "sweep_" + d + ".csv").string(),
                      &prov_);
      write_sweep_json(table, spath("blend", "sweep_" + d + ".json").string(),
                       &prov_);
      write_sweep_plot_dat(table,
                           spath("blend", "sweep_" + d + ".dat").string(),
                           &prov_);
      record.notes.push_back(d + ": " + std::to_string(table.rows.size()) +
                             " grid points");
    }
  }

  std::array<Corpus, 3> split_paired(const Corpus& paired) const {
    SplitSpec spec;
    spec.train_frac = cfg_.get_double("split", "train", 0.8);
    spec.val_frac = cfg_.get_double("split", "val", 0.1);
    spec.test_frac = cfg_.get_double("split", "test", 0.1);
    spec.pair_aware = cfg_.get_bool("split", "pair_aware", true);
    spec.seed = cfg_.get_u64("split", "seed", prov_.seed);
    return split(paired, spec);
  }

  void stage_features(StageRecord& record) {
    auto embed_provider = make_embedding_provider();
    for (const auto& d : datasets_) {
      auto paired = load_corpus(spath("fabricate", "pairs_" + d + ".jsonl"));
      auto parts = split_paired(paired);

      // Topic models are trained on the training split only.
      Corpus auth_train, dis_train;
      for (const auto& r : parts[0].reviews) {
        if (r.label == Label::disinformative) dis_train.reviews.push_back(r);
        else auth_train.reviews.push_back(r);
      }
      if (auth_train.empty() || dis_train.empty())
        throw StageError("features: training split lacks one class for " + d);

      LdaParams params;
      params.K = static_cast<int>(cfg_.get_int("features", "k_topics", 10));
      params.alpha = cfg_.get_double("features", "alpha", 5.0);
      params.beta = cfg_.get_double("features", "beta", 0.01);
      params.iters = static_cast<int>(cfg_.get_int("features", "lda_iters", 1000));
      params.burn_in =
          static_cast<int>(cfg_.get_int("features", "lda_burn_in", 500));
      params.thinning =
          static_cast<int>(cfg_.get_int("features", "lda_thinning", 10));
      params.seed = cfg_.get_u64("features", "lda_seed", prov_.seed);
      const int min_df =
          static_cast<int>(cfg_.get_int("features", "min_df", 1));

      auto vocab_auth = build_vocab(auth_train, min_df);
      auto m_auth = fit_lda(auth_train, vocab_auth, params).model;
      m_auth.save(spath("features", "lda_auth_" + d + ".json").string());
      auto vocab_dis = build_vocab(dis_train, min_df);
      LdaParams params_dis = params;
      params_dis.seed = params.seed + 1;
      auto m_dis = fit_lda(dis_train, vocab_dis, params_dis).model;
      m_dis.save(spath("features", "lda_dis_" + d + ".json").string());

      const int infer_iters =
          static_cast<int>(cfg_.get_int("features", "infer_iters", 100));
      const char* split_names[3] = {"train", "val", "test"};
      for (int p = 0; p < 3; ++p) {
        std::vector<TopicFeatureVector> features;
        for (const auto& r : parts[static_cast<std::size_t>(p)].reviews)
          features.push_back(build_features(r, m_auth, m_dis, infer_iters));
        write_features(features,
                       spath("features", std::string("features_") +
                                             split_names[p] + "_" + d +
                                             ".jsonl")
                           .string(),
                       &prov_);
      }

      // Embedding route: reduce, cluster per class, membership features.
      auto embeddings = embed_corpus(*embed_provider, paired,
                                     (out_ / "cache" / "embed").string());
      write_embeddings(embeddings,
                       spath("features", "embeddings_" + d + ".jsonl").string(),
                       &prov_);
      std::map<std::string, const std::vector<double>*> by_id;
      for (const auto& e : embeddings) by_id[e.id] = &e.values;

      auto class_vectors = [&](const Corpus& c) {
        std::vector<std::vector<double>> v;
        for (const auto& r : c.reviews) v.push_back(*by_id.at(r.id));
        return v;
      };
      ClusterParams cparams;
      cparams.min_cluster_size = static_cast<std::size_t>(
          cfg_.get_int("features", "min_cluster_size", 5));
      auto auth_red = reduce_2d(class_vectors(auth_train));
      auto dis_red = reduce_2d(class_vectors(dis_train));
      auto to_2d = [](const Reduce2dResult& r) {
        std::vector<std::vector<double>> pts;
        for (const auto& [x, y] : r.points) pts.push_back({x, y});
        return pts;
      };
      auto auth_clusters = cluster_membership(to_2d(auth_red), cparams);
      auto dis_clusters = cluster_membership(to_2d(dis_red), cparams);

      for (int p = 0; p < 3; ++p) {
        std::vector<TopicFeatureVector> features;
        for (const auto& r : parts[static_cast<std::size_t>(p)].reviews) {
          const auto& vec = *by_id.at(r.id);
          const auto [ax, ay] = auth_red.projector.project(vec);
          const auto [dx, dy] = dis_red.projector.project(vec);
          TopicFeatureVector f;
          f.id = r.id;
          f.label = r.label;
          f.values = auth_clusters.membership_of({ax, ay});
          const auto dm = dis_clusters.membership_of({dx, dy});
          f.values.insert(f.values.end(), dm.begin(), dm.end());
          features.push_back(std::move(f));
        }
        write_features(features,
                       spath("features", std::string("efeatures_") +
                                             split_names[p] + "_" + d +
                                             ".jsonl")
                           .string(),
                       &prov_);
      }
      record.notes.push_back(d + ": embed clusters " +
                             std::to_string(auth_clusters.k) + "+" +
                             std::to_string(dis_clusters.k));

      // Disinformation embeddings: diffs of matched pairs, own projector.
      std::vector<PairedEmbedding> pairs;
      for (const auto& r : paired.reviews) {
        if (r.label != Label::disinformative || !r.pair_id) continue;
        auto ait = by_id.find(*r.pair_id);
        auto dit = by_id.find(r.id);
        if (ait == by_id.end() || dit == by_id.end()) continue;
        pairs.push_back({*r.pair_id, *ait->second, *dit->second});
      }
      if (pairs.size() >= 3) {
        auto diff_red = reduce_2d(diff_vectors(pairs));
        {
          std::ofstream os(spath("features", "projector_" + d + ".json"));
          nlohmann::json j = diff_red.projector.to_json();
          j["_provenance"] = prov_.to_json();
          os << j.dump(2) << "\n";
        }
        auto points = diff_points(pairs, diff_red.projector);
        std::ofstream os(spath("features", "diffpoints_" + d + ".csv"),
                         std::ios::binary);
        os << prov_.comment_line() << "pair_id,x,y\n";
        char buf[96];
        for (const auto& p : points) {
          std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", p.x, p.y);
          os << csv::escape(p.pair_id) << buf;
        }
      } else {
        throw StageError("features: fewer than 3 matched pairs for " + d);
      }
    }
  }

  static std::map<std::string, Label> labels_of(
      const std::vector<TopicFeatureVector>& fs) {
    std::map<std::string, Label> labels;
    for (const auto& f : fs) labels[f.id] = f.label;
    return labels;
  }

  void stage_detect(StageRecord& record) {
    TrainHyper hyper;
    hyper.lr = cfg_.get_double("detect", "lr", 0.1);
    hyper.momentum = cfg_.get_double("detect", "momentum", 0.9);
    hyper.batch_size = static_cast<int>(cfg_.get_int("detect", "batch", 32));
    hyper.epochs = static_cast<int>(cfg_.get_int("detect", "epochs", 200));
    hyper.patience = static_cast<int>(cfg_.get_int("detect", "patience", 10));
    hyper.seed = cfg_.get_u64("detect", "seed", prov_.seed);

    for (const auto& d : datasets_) {
      for (const auto* kind : {"lda", "embed"}) {
        const std::string prefix =
            std::string(kind) == "lda" ? "features_" : "efeatures_";
        auto train_f = read_features(
            spath("features", prefix + "train_" + d + ".jsonl").string());
        auto val_f = read_features(
            spath("features", prefix + "val_" + d + ".jsonl").string());
        auto test_f = read_features(
            spath("features", prefix + "test_" + d + ".jsonl").string());
        auto model = train_mlp(train_f, val_f, hyper);
        model.save(
            spath("detect", std::string("model_") + kind + "_" + d + ".json")
                .string());
        std::vector<Prediction> preds;
        for (const auto& f : test_f) {
          auto p = predict(model, f);
          p.model_id = std::string("mlp_") + kind;
          preds.push_back(p);
        }
        write_predictions_csv(preds, labels_of(test_f),
                              spath("detect", std::string("predictions_mlp_") +
                                                  kind + "_" + d + ".csv")
                                  .string(),
                              &prov_);
        record.notes.push_back(d + "/" + kind + ": best epoch " +
                               std::to_string(model.best_epoch));
      }

      // External detector: fixture scores when configured.
      const std::string fixture = cfg_.get("detect", "external_scores_" + d, "");
      if (!fixture.empty()) {
        auto detector = FixtureExternalDetector::from_csv(fixture);
        auto test_f = read_features(
            spath("features", "features_test_" + d + ".jsonl").string());
        auto paired = load_corpus(spath("fabricate", "pairs_" + d + ".jsonl"));
        std::map<std::string, const Review*> reviews;
        for (const auto& r : paired.reviews) reviews[r.id] = &r;
        std::vector<Prediction> preds;
        for (const auto& f : test_f)
          preds.push_back(detector.detect(*reviews.at(f.id)));
        write_predictions_csv(
            preds, labels_of(test_f),
            spath("detect", "predictions_external_" + d + ".csv").string(),
            &prov_);
      }
    }
  }

  LabeledPredictions load_predictions(const std::string& model,
                                      const std::string& d) const {
    const auto path =
        spath("detect", "predictions_" + model + "_" + d + ".csv");
    LabeledPredictions lp;
    auto records = csv::parse_file(path.string());
    for (const auto& rec : records) {
      if (rec.fields.empty() || rec.fields[0].empty()) continue;
      if (rec.fields[0][0] == '#' || rec.fields[0] == "id") continue;
      if (rec.fields.size() < 3) continue;
      Prediction p;
      p.id = rec.fields[0];
      p.score = std::stod(rec.fields[1]);
      p.model_id = model;
      lp.preds.push_back(p);
      lp.labels[p.id] =
          label_from_string(rec.fields[2]).value_or(Label::unknown);
    }
    return lp;
  }

  void stage_report(StageRecord& record) {
    // Detection table over every model with predictions for all datasets.
    std::vector<std::string> models;
    for (const auto* m : {"mlp_lda", "mlp_embed", "external"}) {
      bool complete = true;
      for (const auto& d : datasets_)
        if (!std::filesystem::exists(
                spath("detect", std::string("predictions_") + m + "_" + d +
                                    ".csv")))
          complete = false;
      if (complete) models.push_back(m);
    }
    if (models.empty()) throw StageError("report: no predictions found");

    std::map<std::string, std::map<std::string, LabeledPredictions>> inputs;
    for (const auto& m : models)
      for (const auto& d : datasets_) inputs[m][d] = load_predictions(m, d);
    const double threshold = cfg_.get_double("detect", "threshold", 0.5);
    auto report = evaluate_suite(models, datasets_, inputs, threshold);
    {
      std::ofstream os(spath("report", "detection_table.txt"));
      os << prov_.comment_line()
         << format_report_table(report, models, datasets_);
    }
    {
      std::ofstream os(spath("report", "detection_report.json"));
      nlohmann::json j = report_to_json(report);
      j["_provenance"] = prov_.to_json();
      os << j.dump(2) << "\n";
    }
    record.notes.push_back("detection cells: " +
                           std::to_string(report.metric_cell_count()));

    // Density grids and appendix-style extreme-pair tables per dataset.
    for (const auto& d : datasets_) {
      auto paired = load_corpus(spath("fabricate", "pairs_" + d + ".jsonl"));
      std::map<std::string, const Review*> reviews;
      for (const auto& r : paired.reviews) reviews[r.id] = &r;

      // Probability gain per pair under the LDA-feature model.
      auto model = MlpModel::load(spath("detect", "model_lda_" + d + ".json")
                                      .string());
      std::map<std::string, double> score_by_id;
      for (const auto* split : {"train", "val", "test"}) {
        auto fs = read_features(
            spath("features", std::string("features_") + split + "_" + d +
                                  ".jsonl")
                .string());
        for (const auto& f : fs) score_by_id[f.id] = model.forward(f.values);
      }

      std::vector<DisinfoPoint> points;
      {
        auto records = csv::parse_file(
            spath("features", "diffpoints_" + d + ".csv").string());
        for (const auto& rec : records) {
          if (rec.fields.empty() || rec.fields[0].empty()) continue;
          if (rec.fields[0][0] == '#' || rec.fields[0] == "pair_id") continue;
          DisinfoPoint p;
          p.pair_id = rec.fields[0];
          p.x = std::stod(rec.fields[1]);
          p.y = std::stod(rec.fields[2]);
          points.push_back(p);
        }
      }

      std::vector<double> weights;
      std::map<std::string, std::string> disinfo_of;  // pair_id -> variant id
      for (const auto& r : paired.reviews)
        if (r.label == Label::disinformative && r.pair_id)
          disinfo_of[*r.pair_id] = r.id;
      for (const auto& p : points) {
        double w = 0.0;
        auto dit = disinfo_of.find(p.pair_id);
        if (dit != disinfo_of.end() && score_by_id.count(dit->second) &&
            score_by_id.count(p.pair_id)) {
          w = std::max(score_by_id[dit->second] - score_by_id[p.pair_id], 0.0);
        }
        weights.push_back(w);
      }
      try {
        GridParams gp;
        gp.nx = static_cast<std::size_t>(cfg_.get_int("report", "grid_nx", 100));
        gp.ny = static_cast<std::size_t>(cfg_.get_int("report", "grid_ny", 100));
        auto grid = density_grid(points, weights, gp);
        write_density_csv(grid,
                          spath("report", "density_" + d + ".csv").string(),
                          &prov_);
      } catch (const ValidationError& e) {
        record.notes.push_back(d + ": density grid skipped (" +
                               std::string(e.what()) + ")");
      }

      const auto k =
          static_cast<std::size_t>(cfg_.get_int("report", "extremes_k", 3));
      for (const int axis : {1, 2}) {
        auto ex = extreme_pairs(points, axis, k);
        auto write_table = [&](const std::vector<std::string>& ids,
                               const std::string& which) {
          std::ofstream os(spath("report", "extremes_" + d + "_axis" +
                                               std::to_string(axis) + "_" +
                                               which + ".txt"));
          os << prov_.comment_line();
          os << "Extreme pairs, dimension " << axis << ", " << which
             << " (dataset " << d << ")\n\n";
          for (const auto& pair_id : ids) {
            os << "pair " << pair_id << "\n";
            auto ait = reviews.find(pair_id);
            auto dit = disinfo_of.find(pair_id);
            os << "  authentic: "
               << (ait != reviews.end() ? ait->second->text : "<missing>")
               << "\n";
            os << "  disinformative: "
               << (dit != disinfo_of.end() && reviews.count(dit->second)
                       ? reviews.at(dit->second)->text
                       : "<missing>")
               << "\n\n";
          }
        };
        write_table(ex.top, "top");
        write_table(ex.bottom, "bottom");
      }
    }
  }

  Config cfg_;
  std::filesystem::path out_;
  bool offline_;
  std::vector<std::string> datasets_;
  Provenance prov_;
};

inline RunManifest run_pipeline(PipelineOptions opts) {
  auto stages = opts.stages;
  Pipeline pipeline(std::move(opts));
  return pipeline.run(std::move(stages));
}

}  // namespace ugcs
