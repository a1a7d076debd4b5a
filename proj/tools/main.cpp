// ugc-sentinel command-line tool: corpus preparation, fabrication, NESE
// measurement, infiltration sweeps, feature building, detector training and
// evaluation, and config-driven pipeline runs.

#include <CLI11.hpp>
#include <iostream>

#include "ugc_sentinel/blend.hpp"
#include "ugc_sentinel/clustering.hpp"
#include "ugc_sentinel/config.hpp"
#include "ugc_sentinel/corpus.hpp"
#include "ugc_sentinel/diffmap.hpp"
#include "ugc_sentinel/embedding.hpp"
#include "ugc_sentinel/external_detector.hpp"
#include "ugc_sentinel/fabricator.hpp"
#include "ugc_sentinel/gateway.hpp"
#include "ugc_sentinel/http_providers.hpp"
#include "ugc_sentinel/lda.hpp"
#include "ugc_sentinel/metrics.hpp"
#include "ugc_sentinel/mlp.hpp"
#include "ugc_sentinel/nese.hpp"
#include "ugc_sentinel/pipeline.hpp"
#include "ugc_sentinel/projection.hpp"
#include "ugc_sentinel/version.hpp"
#include "ugc_sentinel/vocab.hpp"

namespace {

using namespace ugcs;

Format parse_format(const std::string& f) {
  if (f == "jsonl") return Format::jsonl;
  if (f == "csv") return Format::csv;
  throw ValidationError("unknown format: " + f + " (expected jsonl or csv)");
}

Corpus load_corpus_file(const std::string& path, const std::string& format) {
  auto res = ingest(path, parse_format(format));
  if (!res.rejections.empty()) {
    std::cerr << res.rejections.size() << " rejected record(s):\n";
    for (const auto& r : res.rejections)
      std::cerr << "  line " << r.line_no << ": " << r.reason
                << (r.record_id.empty() ? "" : " (id " + r.record_id + ")")
                << "\n";
  }
  return std::move(res.corpus);
}

struct ProviderFlags {
  std::string provider = "mock";
  std::string endpoint;
  std::string model = "gpt-4-turbo";
  std::string cache_dir;

  void attach(CLI::App* cmd) {
    cmd->add_option("--provider", provider, "mock or http");
    cmd->add_option("--endpoint", endpoint, "base URL for http provider");
    cmd->add_option("--model", model, "model name for http provider");
    cmd->add_option("--cache", cache_dir, "response cache directory");
  }

  Gateway make_gateway() const {
    std::shared_ptr<ChatProvider> p;
    if (provider == "mock") {
      p = std::make_shared<MockChatProvider>();
    } else if (provider == "http") {
      HttpProviderConfig cfg;
      cfg.base_url = endpoint;
      cfg.model = model;
      p = std::make_shared<HttpChatProvider>(cfg);
    } else {
      throw ValidationError("unknown provider: " + provider);
    }
    GatewayConfig gw;
    gw.cache_dir = cache_dir;
    return Gateway(p, gw);
  }
};

EntityList load_entities(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read entity list: " + path);
  nlohmann::json j;
  in >> j;
  return EntityList::from_json(j);
}

std::vector<std::vector<double>> load_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read vectors: " + path);
  std::vector<std::vector<double>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ValidationError("malformed JSON at line " +
                            std::to_string(line_no) + " of " + path);
    if (line_no == 1 && j.contains("_provenance")) continue;
    out.push_back(j.at("vector").get<std::vector<double>>());
  }
  return out;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"adversarial UGC analytics toolkit"};
  app.set_version_flag("--version",
                       std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  // Shared flags for standalone verbs.
  std::uint64_t seed = 42;
  std::string format = "jsonl";

  // ---- corpus verbs ----
  auto* c_ingest = app.add_subcommand("ingest", "read a corpus and re-emit it");
  std::string in_path, out_path;
  bool assume_authentic = false;
  c_ingest->add_option("--in", in_path, "input file")->required();
  c_ingest->add_option("--format", format, "jsonl or csv");
  c_ingest->add_option("--out", out_path, "output JSONL")->required();
  c_ingest->add_flag("--assume-authentic", assume_authentic,
                     "label unknown records authentic");
  c_ingest->callback([&] {
    auto corpus = load_corpus_file(in_path, format);
    if (assume_authentic)
      for (auto& r : corpus.reviews)
        if (r.label == Label::unknown) r.label = Label::authentic;
    emit_jsonl(corpus, out_path);
    std::cout << corpus.size() << " reviews -> " << out_path << "\n";
  });

  auto* c_filter = app.add_subcommand("filter", "apply preprocessing filters");
  bool no_non_english = false, no_length = false, no_dedup = false;
  std::string report_path;
  c_filter->add_option("--in", in_path)->required();
  c_filter->add_option("--format", format);
  c_filter->add_option("--out", out_path)->required();
  c_filter->add_option("--report", report_path, "filter report JSON");
  c_filter->add_flag("--no-non-english", no_non_english);
  c_filter->add_flag("--no-length", no_length);
  c_filter->add_flag("--no-dedup", no_dedup);
  c_filter->callback([&] {
    auto corpus = load_corpus_file(in_path, format);
    FilterRules rules;
    rules.non_english = !no_non_english;
    rules.length_quartiles = !no_length;
    rules.dedup = !no_dedup;
    auto [filtered, report] = filter_corpus(corpus, rules);
    emit_jsonl(filtered, out_path);
    if (!report_path.empty()) {
      std::ofstream os(report_path);
      os << report.to_json().dump(2) << "\n";
    }
    std::cout << report.input_count << " -> " << report.output_count
              << " reviews (non_english " << report.non_english_removed
              << ", length " << report.length_removed << ", dedup "
              << report.dedup_removed << ")\n";
  });

  auto* c_sample = app.add_subcommand("sample", "seeded uniform sample");
  std::size_t sample_n = 0;
  c_sample->add_option("--in", in_path)->required();
  c_sample->add_option("--format", format);
  c_sample->add_option("--n", sample_n)->required();
  c_sample->add_option("--seed", seed);
  c_sample->add_option("--out", out_path)->required();
  c_sample->callback([&] {
    auto corpus = load_corpus_file(in_path, format);
    auto s = sample(corpus, sample_n, seed);
    emit_jsonl(s, out_path);
    std::cout << s.size() << " reviews -> " << out_path << "\n";
  });

  auto* c_split = app.add_subcommand("split", "train/val/test split");
  double train_frac = 0.8, val_frac = 0.1, test_frac = 0.1;
  bool pair_aware = false;
  std::string out_prefix;
  c_split->add_option("--in", in_path)->required();
  c_split->add_option("--format", format);
  c_split->add_option("--train", train_frac);
  c_split->add_option("--val", val_frac);
  c_split->add_option("--test", test_frac);
  c_split->add_option("--seed", seed);
  c_split->add_flag("--pair-aware", pair_aware);
  c_split->add_option("--out-prefix", out_prefix)->required();
  c_split->callback([&] {
    auto corpus = load_corpus_file(in_path, format);
    SplitSpec spec{train_frac, val_frac, test_frac, seed, pair_aware};
    auto parts = split(corpus, spec);
    const char* names[3] = {"train", "val", "test"};
    for (int i = 0; i < 3; ++i) {
      const auto path = out_prefix + names[i] + ".jsonl";
      emit_jsonl(parts[static_cast<std::size_t>(i)], path);
      std::cout << names[i] << ": " << parts[static_cast<std::size_t>(i)].size()
                << " -> " << path << "\n";
    }
  });

  auto* c_tokfreq = app.add_subcommand("tokfreq", "token frequency table");
  std::string stopwords_path;
  std::size_t top = 0;
  c_tokfreq->add_option("--in", in_path)->required();
  c_tokfreq->add_option("--format", format);
  c_tokfreq->add_option("--stopwords", stopwords_path, "one word per line");
  c_tokfreq->add_option("--top", top, "emit only the top N tokens");
  c_tokfreq->add_option("--out", out_path, "CSV output (token,count)");
  c_tokfreq->callback([&] {
    auto corpus = load_corpus_file(in_path, format);
    std::set<std::string> stopwords;
    if (!stopwords_path.empty()) stopwords = load_stopwords(stopwords_path);
    auto table = token_frequencies(corpus, stopwords);
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path, std::ios::binary);
      os = &file;
    }
    *os << "token,count\n";
    std::size_t emitted = 0;
    for (const auto& [token, count] : table.entries) {
      if (top > 0 && emitted++ >= top) break;
      *os << csv::escape(token) << "," << count << "\n";
    }
  });

  // ---- fabricate ----
  auto* c_fab = app.add_subcommand("fabricate",
                                   "pair every authentic review with a "
                                   "disinformative variant");
  ProviderFlags fab_provider;
  std::string strategy = "fabricate_value_negative";
  std::string skips_path;
  double max_failure_frac = 0.2;
  c_fab->add_option("--in", in_path)->required();
  c_fab->add_option("--format", format);
  c_fab->add_option("--strategy", strategy);
  c_fab->add_option("--out", out_path, "paired corpus JSONL")->required();
  c_fab->add_option("--skips", skips_path, "skip report JSON");
  c_fab->add_option("--max-failure-frac", max_failure_frac);
  fab_provider.attach(c_fab);
  c_fab->callback([&] {
    if (strategy != "fabricate_value_negative")
      throw ValidationError("unknown strategy template: " + strategy);
    FabricationJob job;
    job.input = load_corpus_file(in_path, format);
    for (auto& r : job.input.reviews)
      if (r.label == Label::unknown) r.label = Label::authentic;
    job.max_failure_frac = max_failure_frac;
    auto gateway = fab_provider.make_gateway();
    auto result = fabricate_corpus(gateway, job);
    Corpus paired = job.input;
    for (const auto& r : result.pairs.reviews) paired.reviews.push_back(r);
    emit_jsonl(paired, out_path);
    if (!skips_path.empty()) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& s : result.skips)
        j.push_back({{"id", s.id}, {"reason", s.reason}});
      std::ofstream os(skips_path);
      os << j.dump(2) << "\n";
    }
    std::cout << result.pairs.size() << " pairs, " << result.skips.size()
              << " skips -> " << out_path << "\n";
  });

  // ---- nese ----
  auto* c_nese = app.add_subcommand("nese", "entity-sentiment measurement");
  c_nese->require_subcommand(1);

  auto* n_discover = c_nese->add_subcommand("discover", "per-review entities");
  ProviderFlags nese_provider;
  n_discover->add_option("--in", in_path)->required();
  n_discover->add_option("--format", format);
  n_discover->add_option("--out", out_path, "discovery JSONL")->required();
  nese_provider.attach(n_discover);
  n_discover->callback([&] {
    auto corpus = load_corpus_file(in_path, format);
    auto gateway = nese_provider.make_gateway();
    auto outcome = discover_entities(gateway, corpus);
    std::ofstream os(out_path, std::ios::binary);
    for (const auto& [id, parsed] : outcome.per_review) {
      nlohmann::json j;
      j["id"] = id;
      j["entities"] = parsed.entities;
      j["none"] = parsed.none_flag;
      os << j.dump() << "\n";
    }
    std::cout << outcome.per_review.size() << " reviews, "
              << outcome.failures.size() << " failures -> " << out_path
              << "\n";
  });

  auto* n_tab = c_nese->add_subcommand("tabulate", "count and prune entities");
  std::size_t min_count = 5;
  n_tab->add_option("--in", in_path, "discovery JSONL")->required();
  n_tab->add_option("--min-count", min_count);
  n_tab->add_option("--out", out_path, "frequency table JSON")->required();
  n_tab->callback([&] {
    DiscoveryOutcome outcome;
    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + in_path);
    std::string line;
    while (std::getline(in, line)) {
      if (text::trim(line).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || j.contains("_provenance")) continue;
      ParsedEntities p;
      p.none_flag = j.value("none", false);
      if (j.contains("entities"))
        p.entities = j["entities"].get<std::vector<std::string>>();
      outcome.per_review.push_back({j.value("id", ""), p});
    }
    auto table = tabulate_and_prune(outcome, min_count);
    std::ofstream os(out_path);
    os << table.to_json().dump(2) << "\n";
    std::cout << table.entries.size() << " entities -> " << out_path << "\n";
  });

  auto* n_cons = c_nese->add_subcommand("consolidate", "pick key entities");
  std::size_t k_entities = 10;
  n_cons->add_option("--table", in_path, "frequency table JSON")->required();
  n_cons->add_option("--k", k_entities);
  n_cons->add_option("--out", out_path, "entity list JSON")->required();
  nese_provider.attach(n_cons);
  n_cons->callback([&] {
    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + in_path);
    nlohmann::json j;
    in >> j;
    EntityFrequencyTable table;
    for (const auto& e : j.at("entries"))
      table.entries.push_back({e[0].get<std::string>(), e[1].get<std::size_t>()});
    auto gateway = nese_provider.make_gateway();
    auto list = consolidate_top_entities(gateway, table, k_entities);
    std::ofstream os(out_path);
    os << list.to_json().dump(2) << "\n";
    std::cout << list.entities.size() << " entities -> " << out_path << "\n";
  });

  auto* n_eval = c_nese->add_subcommand("evaluate", "entity sentiments");
  std::string entities_path;
  n_eval->add_option("--in", in_path)->required();
  n_eval->add_option("--format", format);
  n_eval->add_option("--entities", entities_path)->required();
  n_eval->add_option("--out", out_path, "NESE results JSONL")->required();
  nese_provider.attach(n_eval);
  n_eval->callback([&] {
    auto corpus = load_corpus_file(in_path, format);
    auto entities = load_entities(entities_path);
    auto gateway = nese_provider.make_gateway();
    auto outcome = evaluate_corpus(gateway, corpus, entities);
    write_nese_results(outcome.results, out_path);
    std::cout << outcome.results.size() << " results, "
              << outcome.failures.size() << " failures -> " << out_path
              << "\n";
  });

  auto* n_agg = c_nese->add_subcommand("aggregate", "mention freq + sentiment");
  std::string entity_name = "Pricing";
  n_agg->add_option("--results", in_path, "NESE results JSONL")->required();
  n_agg->add_option("--entity", entity_name);
  n_agg->add_option("--entities", entities_path)->required();
  n_agg->callback([&] {
    auto results = read_nese_results(in_path);
    auto entities = load_entities(entities_path);
    auto agg = aggregate(results, entity_name, entities);
    std::cout << aggregate_to_json(agg).dump(2) << "\n";
  });

  // ---- blend ----
  auto* c_blend = app.add_subcommand("blend", "infiltration simulation");
  c_blend->require_subcommand(1);

  auto* b_sub = c_blend->add_subcommand("subsample",
                                        "counterpart-excluded pools");
  std::string dis_path;
  std::size_t n_per_side = 1000;
  b_sub->add_option("--results", in_path, "NESE results JSONL (both labels)")
      ->required();
  b_sub->add_option("--n-per-side", n_per_side);
  b_sub->add_option("--seed", seed);
  b_sub->add_option("--out", out_path, "pools JSON")->required();
  b_sub->callback([&] {
    auto results = read_nese_results(in_path);
    std::vector<NeseResult> auth, dis;
    for (auto& r : results)
      (r.label == Label::disinformative ? dis : auth).push_back(std::move(r));
    auto pools = build_subsample(auth, dis, n_per_side, seed);
    nlohmann::json j;
    j["seed"] = pools.seed;
    j["authentic"] = nlohmann::json::array();
    for (const auto& r : pools.authentic)
      j["authentic"].push_back(nese_result_to_json(r));
    j["disinformative"] = nlohmann::json::array();
    for (const auto& r : pools.disinformative)
      j["disinformative"].push_back(nese_result_to_json(r));
    j["exclusions"] = pools.exclusion_log;
    std::ofstream os(out_path);
    os << j.dump(2) << "\n";
    std::cout << pools.authentic.size() << "+" << pools.disinformative.size()
              << " results -> " << out_path << "\n";
  });

  auto* b_sweep = c_blend->add_subcommand("sweep", "distortion curves");
  double step = 0.005;
  std::string sweep_out_prefix;
  b_sweep->add_option("--results", in_path, "NESE results JSONL")->required();
  b_sweep->add_option("--entities", entities_path)->required();
  b_sweep->add_option("--entity", entity_name);
  b_sweep->add_option("--step", step);
  b_sweep->add_option("--n-per-side", n_per_side);
  b_sweep->add_option("--seed", seed);
  b_sweep->add_option("--out-prefix", sweep_out_prefix)->required();
  b_sweep->callback([&] {
    auto results = read_nese_results(in_path);
    auto entities = load_entities(entities_path);
    std::vector<NeseResult> auth, dis;
    for (auto& r : results)
      (r.label == Label::disinformative ? dis : auth).push_back(std::move(r));
    auto pools = build_subsample(auth, dis, n_per_side, seed);
    auto table = sweep(pools, make_grid(step, 0.5, seed), entity_name,
                       entities);
    write_sweep_csv(table, sweep_out_prefix + ".csv");
    write_sweep_json(table, sweep_out_prefix + ".json");
    write_sweep_plot_dat(table, sweep_out_prefix + ".dat");
    std::cout << table.rows.size() << " grid points -> " << sweep_out_prefix
              << ".{csv,json,dat}\n";
  });

  // ---- features ----
  auto* c_features = app.add_subcommand("features", "feature builders");
  c_features->require_subcommand(1);

  auto* f_lda = c_features->add_subcommand("lda-train", "collapsed Gibbs LDA");
  LdaParams lda_params;
  int min_df = 1;
  f_lda->add_option("--in", in_path)->required();
  f_lda->add_option("--format", format);
  f_lda->add_option("--k", lda_params.K);
  f_lda->add_option("--alpha", lda_params.alpha);
  f_lda->add_option("--beta", lda_params.beta);
  f_lda->add_option("--iters", lda_params.iters);
  f_lda->add_option("--burn-in", lda_params.burn_in);
  f_lda->add_option("--thinning", lda_params.thinning);
  f_lda->add_option("--seed", lda_params.seed);
  f_lda->add_option("--min-df", min_df);
  f_lda->add_option("--model-out", out_path)->required();
  f_lda->callback([&] {
    auto corpus = load_corpus_file(in_path, format);
    auto vocab = build_vocab(corpus, min_df);
    auto fit = fit_lda(corpus, vocab, lda_params);
    fit.model.save(out_path);
    std::cout << "model: K=" << lda_params.K << " V=" << vocab.size() << " -> "
              << out_path << "\n";
    if (!fit.excluded_doc_ids.empty())
      std::cout << fit.excluded_doc_ids.size()
                << " documents had no in-vocabulary tokens\n";
  });

  auto* f_infer = c_features->add_subcommand("lda-infer", "fold-in thetas");
  std::string model_path, model_b_path;
  f_infer->add_option("--model", model_path)->required();
  f_infer->add_option("--model-b", model_b_path,
                      "second model: emit concatenated features");
  f_infer->add_option("--in", in_path)->required();
  f_infer->add_option("--format", format);
  f_infer->add_option("--out", out_path, "features JSONL")->required();
  f_infer->callback([&] {
    auto corpus = load_corpus_file(in_path, format);
    auto model = LdaModel::load(model_path);
    std::vector<TopicFeatureVector> features;
    if (!model_b_path.empty()) {
      auto model_b = LdaModel::load(model_b_path);
      for (const auto& r : corpus.reviews)
        features.push_back(build_features(r, model, model_b));
    } else {
      for (const auto& r : corpus.reviews) {
        auto theta = infer_theta(model, r);
        TopicFeatureVector f;
        f.id = r.id;
        f.label = r.label;
        f.values = theta.theta;
        features.push_back(std::move(f));
      }
    }
    write_features(features, out_path);
    std::cout << features.size() << " feature vectors -> " << out_path << "\n";
  });

  auto* f_embed = c_features->add_subcommand("embed", "document embeddings");
  std::string embed_provider = "synthetic";
  std::string fixture_path;
  std::size_t embed_dim = 64;
  std::string embed_endpoint, embed_model = "text-embedding-ada-002";
  std::string embed_cache;
  f_embed->add_option("--in", in_path)->required();
  f_embed->add_option("--format", format);
  f_embed->add_option("--provider", embed_provider,
                      "synthetic, fixture, or http");
  f_embed->add_option("--fixture", fixture_path, "JSONL {id, vector}");
  f_embed->add_option("--dim", embed_dim, "synthetic dimension");
  f_embed->add_option("--endpoint", embed_endpoint);
  f_embed->add_option("--model", embed_model);
  f_embed->add_option("--cache", embed_cache);
  f_embed->add_option("--out", out_path)->required();
  f_embed->callback([&] {
    auto corpus = load_corpus_file(in_path, format);
    std::vector<EmbeddingVector> vectors;
    if (embed_provider == "fixture") {
      FixtureEmbeddingStore store(fixture_path);
      vectors = embed_corpus_fixture(store, corpus);
    } else if (embed_provider == "synthetic") {
      SyntheticEmbeddingProvider p(embed_dim);
      vectors = embed_corpus(p, corpus, embed_cache);
    } else if (embed_provider == "http") {
      HttpEmbeddingConfig cfg;
      cfg.base_url = embed_endpoint;
      cfg.model = embed_model;
      HttpEmbeddingProvider p(cfg);
      vectors = embed_corpus(p, corpus, embed_cache);
    } else {
      throw ValidationError("unknown embedding provider: " + embed_provider);
    }
    write_embeddings(vectors, out_path);
    std::cout << vectors.size() << " vectors -> " << out_path << "\n";
  });

  auto* f_reduce = c_features->add_subcommand("reduce", "2-D projection");
  std::string projector_out, points_out;
  f_reduce->add_option("--vectors", in_path, "embeddings JSONL")->required();
  f_reduce->add_option("--projector-out", projector_out)->required();
  f_reduce->add_option("--points-out", points_out, "CSV x,y");
  f_reduce->callback([&] {
    auto vectors = load_vectors(in_path);
    auto res = reduce_2d(vectors);
    std::ofstream os(projector_out);
    os << res.projector.to_json().dump(2) << "\n";
    if (!points_out.empty()) {
      std::ofstream ps(points_out, std::ios::binary);
      ps << "x,y\n";
      char buf[80];
      for (const auto& [x, y] : res.points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", x, y);
        ps << buf;
      }
    }
    std::cout << "captured variance fraction "
              << res.projector.captured_fraction() << " -> " << projector_out
              << "\n";
  });

  auto* f_cluster = c_features->add_subcommand("cluster",
                                               "density-based memberships");
  std::size_t min_cluster_size = 5;
  f_cluster->add_option("--vectors", in_path, "embeddings JSONL")->required();
  f_cluster->add_option("--min-cluster-size", min_cluster_size);
  f_cluster->add_option("--out", out_path, "memberships JSON")->required();
  f_cluster->callback([&] {
    auto vectors = load_vectors(in_path);
    ClusterParams params;
    params.min_cluster_size = min_cluster_size;
    auto model = cluster_membership(vectors, params);
    nlohmann::json j;
    j["k"] = model.k;
    j["labels"] = model.labels;
    j["memberships"] = model.memberships;
    j["noise"] = model.noise;
    std::ofstream os(out_path);
    os << j.dump(2) << "\n";
    std::cout << model.k << " clusters -> " << out_path << "\n";
  });

  auto* f_diff = c_features->add_subcommand(
      "diffmap", "disinformation embeddings of matched pairs");
  std::string emb_path;
  f_diff->add_option("--pairs", in_path, "paired corpus JSONL")->required();
  f_diff->add_option("--embeddings", emb_path, "embeddings JSONL")->required();
  f_diff->add_option("--projector-out", projector_out)->required();
  f_diff->add_option("--points-out", points_out, "CSV pair_id,x,y")
      ->required();
  f_diff->callback([&] {
    auto corpus = load_corpus_file(in_path, "jsonl");
    std::map<std::string, std::vector<double>> by_id;
    {
      std::ifstream in(emb_path, std::ios::binary);
      if (!in) throw ValidationError("cannot read " + emb_path);
      std::string line;
      while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || j.contains("_provenance")) continue;
        by_id[j.at("id")] = j.at("vector").get<std::vector<double>>();
      }
    }
    std::vector<PairedEmbedding> pairs;
    for (const auto& r : corpus.reviews) {
      if (r.label != Label::disinformative || !r.pair_id) continue;
      if (!by_id.count(r.id) || !by_id.count(*r.pair_id)) continue;
      pairs.push_back({*r.pair_id, by_id[*r.pair_id], by_id[r.id]});
    }
    if (pairs.size() < 3)
      throw ValidationError("diffmap: need at least 3 matched pairs");
    auto res = reduce_2d(diff_vectors(pairs));
    {
      std::ofstream os(projector_out);
      os << res.projector.to_json().dump(2) << "\n";
    }
    auto points = diff_points(pairs, res.projector);
    std::ofstream os(points_out, std::ios::binary);
    os << "pair_id,x,y\n";
    char buf[96];
    for (const auto& p : points) {
      std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", p.x, p.y);
      os << csv::escape(p.pair_id) << buf;
    }
    std::cout << points.size() << " diff points -> " << points_out << "\n";
  });

  auto* f_ext = c_features->add_subcommand("extremes", "extreme pairs");
  int axis = 1;
  std::size_t extremes_k = 3;
  f_ext->add_option("--points", in_path, "CSV pair_id,x,y")->required();
  f_ext->add_option("--axis", axis);
  f_ext->add_option("--k", extremes_k);
  f_ext->callback([&] {
    std::vector<DisinfoPoint> points;
    for (const auto& rec : csv::parse_file(in_path)) {
      if (rec.fields.empty() || rec.fields[0].empty()) continue;
      if (rec.fields[0][0] == '#' || rec.fields[0] == "pair_id") continue;
      DisinfoPoint p;
      p.pair_id = rec.fields[0];
      p.x = std::stod(rec.fields[1]);
      p.y = std::stod(rec.fields[2]);
      points.push_back(p);
    }
    auto ex = extreme_pairs(points, axis, extremes_k);
    nlohmann::json j;
    j["axis"] = axis;
    j["top"] = ex.top;
    j["bottom"] = ex.bottom;
    std::cout << j.dump(2) << "\n";
  });

  auto* f_density = c_features->add_subcommand("density",
                                               "weighted density grid");
  std::string weights_path;
  std::size_t grid_n = 100;
  f_density->add_option("--points", in_path, "CSV pair_id,x,y")->required();
  f_density->add_option("--weights", weights_path,
                        "CSV pair_id,weight (default weight 1)");
  f_density->add_option("--grid", grid_n, "cells per axis");
  f_density->add_option("--out", out_path, "CSV x,y,density")->required();
  f_density->callback([&] {
    std::vector<DisinfoPoint> points;
    for (const auto& rec : csv::parse_file(in_path)) {
      if (rec.fields.empty() || rec.fields[0].empty()) continue;
      if (rec.fields[0][0] == '#' || rec.fields[0] == "pair_id") continue;
      DisinfoPoint p;
      p.pair_id = rec.fields[0];
      p.x = std::stod(rec.fields[1]);
      p.y = std::stod(rec.fields[2]);
      points.push_back(p);
    }
    std::vector<double> weights(points.size(), 1.0);
    if (!weights_path.empty()) {
      auto w = read_score_fixture(weights_path);
      for (std::size_t i = 0; i < points.size(); ++i) {
        auto it = w.find(points[i].pair_id);
        weights[i] = it == w.end() ? 0.0 : std::max(it->second, 0.0);
      }
    }
    GridParams params;
    params.nx = grid_n;
    params.ny = grid_n;
    auto grid = density_grid(points, weights, params);
    write_density_csv(grid, out_path);
    std::cout << "grid integral " << grid.integral() << " -> " << out_path
              << "\n";
  });

  // ---- detect ----
  auto* c_detect = app.add_subcommand("detect", "train and evaluate detectors");
  c_detect->require_subcommand(1);

  auto* d_train = c_detect->add_subcommand("train", "train the classifier");
  std::string train_path, val_path;
  TrainHyper hyper;
  d_train->add_option("--train", train_path, "features JSONL")->required();
  d_train->add_option("--val", val_path, "features JSONL")->required();
  d_train->add_option("--lr", hyper.lr);
  d_train->add_option("--momentum", hyper.momentum);
  d_train->add_option("--batch", hyper.batch_size);
  d_train->add_option("--epochs", hyper.epochs);
  d_train->add_option("--patience", hyper.patience);
  d_train->add_option("--seed", hyper.seed);
  d_train->add_option("--model-out", out_path)->required();
  d_train->callback([&] {
    auto train_f = read_features(train_path);
    auto val_f = read_features(val_path);
    auto model = train_mlp(train_f, val_f, hyper);
    model.save(out_path);
    std::cout << "best epoch " << model.best_epoch << ", "
              << model.training_log.size() << " epochs -> " << out_path
              << "\n";
  });

  auto* d_pred = c_detect->add_subcommand("predict", "score features");
  d_pred->add_option("--model", model_path)->required();
  d_pred->add_option("--features", in_path)->required();
  d_pred->add_option("--out", out_path, "CSV id,score,label")->required();
  d_pred->callback([&] {
    auto model = MlpModel::load(model_path);
    auto features = read_features(in_path);
    std::vector<Prediction> preds;
    std::map<std::string, Label> labels;
    for (const auto& f : features) {
      preds.push_back(predict(model, f));
      labels[f.id] = f.label;
    }
    write_predictions_csv(preds, labels, out_path);
    std::cout << preds.size() << " predictions -> " << out_path << "\n";
  });

  auto* d_ext = c_detect->add_subcommand("external",
                                         "external AI-text detector scores");
  std::string scores_path, ext_endpoint, prob_field =
                                             "documents.0.completely_generated_prob";
  d_ext->add_option("--in", in_path, "corpus JSONL")->required();
  d_ext->add_option("--format", format);
  d_ext->add_option("--scores", scores_path, "fixture CSV id,score");
  d_ext->add_option("--endpoint", ext_endpoint, "live detector endpoint");
  d_ext->add_option("--prob-field", prob_field);
  d_ext->add_option("--out", out_path, "CSV id,score,label")->required();
  d_ext->callback([&] {
    auto corpus = load_corpus_file(in_path, format);
    std::unique_ptr<ExternalDetector> detector;
    if (!scores_path.empty()) {
      detector = std::make_unique<FixtureExternalDetector>(
          FixtureExternalDetector::from_csv(scores_path));
    } else if (!ext_endpoint.empty()) {
      HttpExternalDetectorConfig cfg;
      cfg.base_url = ext_endpoint;
      cfg.prob_field = prob_field;
      detector = std::make_unique<HttpExternalDetector>(cfg);
    } else {
      throw ValidationError("detect external: need --scores or --endpoint");
    }
    std::vector<Prediction> preds;
    std::map<std::string, Label> labels;
    for (const auto& r : corpus.reviews) {
      preds.push_back(detector->detect(r));
      labels[r.id] = r.label;
    }
    write_predictions_csv(preds, labels, out_path);
    std::cout << preds.size() << " predictions -> " << out_path << "\n";
  });

  auto* d_eval = c_detect->add_subcommand("evaluate", "metric table");
  std::vector<std::string> cell_specs;
  double threshold = 0.5;
  d_eval->add_option("--cell", cell_specs,
                     "model=dataset=predictions.csv (repeatable)")
      ->required();
  d_eval->add_option("--threshold", threshold);
  d_eval->add_option("--out", out_path, "report JSON");
  d_eval->callback([&] {
    std::map<std::string, std::map<std::string, LabeledPredictions>> inputs;
    std::vector<std::string> models, datasets;
    for (const auto& spec : cell_specs) {
      const auto eq1 = spec.find('=');
      const auto eq2 = spec.find('=', eq1 + 1);
      if (eq1 == std::string::npos || eq2 == std::string::npos)
        throw ValidationError("bad --cell spec: " + spec);
      const std::string model = spec.substr(0, eq1);
      const std::string dataset = spec.substr(eq1 + 1, eq2 - eq1 - 1);
      const std::string path = spec.substr(eq2 + 1);
      LabeledPredictions lp;
      for (const auto& rec : csv::parse_file(path)) {
        if (rec.fields.empty() || rec.fields[0].empty()) continue;
        if (rec.fields[0][0] == '#' || rec.fields[0] == "id") continue;
        Prediction p;
        p.id = rec.fields[0];
        p.score = std::stod(rec.fields[1]);
        p.model_id = model;
        lp.preds.push_back(p);
        lp.labels[p.id] = label_from_string(rec.fields[2]).value_or(Label::unknown);
      }
      inputs[model][dataset] = std::move(lp);
      if (std::find(models.begin(), models.end(), model) == models.end())
        models.push_back(model);
      if (std::find(datasets.begin(), datasets.end(), dataset) ==
          datasets.end())
        datasets.push_back(dataset);
    }
    auto report = evaluate_suite(models, datasets, inputs, threshold);
    std::cout << format_report_table(report, models, datasets);
    if (!out_path.empty()) {
      std::ofstream os(out_path);
      os << report_to_json(report).dump(2) << "\n";
    }
  });

  // ---- pipeline ----
  std::string config_path, out_dir;
  bool offline = false;
  std::vector<std::string> stage_list;
  std::uint64_t seed_override = 0;
  bool seed_overridden = false;

  auto* c_run = app.add_subcommand("run", "config-driven pipeline");
  c_run->add_option("--config", config_path)->required();
  c_run->add_option("--out", out_dir)->required();
  c_run->add_flag("--offline", offline, "mock provider + fixtures only");
  c_run->add_option("--stages", stage_list,
                    "subset of ingest,fabricate,nese,blend,features,detect,"
                    "report");
  auto* seed_opt = c_run->add_option("--seed", seed_override);
  c_run->callback([&] {
    seed_overridden = seed_opt->count() > 0;
    PipelineOptions opts;
    opts.config = Config::load(config_path);
    if (seed_overridden)
      opts.config.set("corpus", "seed", std::to_string(seed_override));
    opts.out_dir = out_dir;
    opts.offline = offline;
    opts.stages = stage_list;
    auto manifest = run_pipeline(std::move(opts));
    std::cout << "pipeline complete: " << manifest.stages.size()
              << " stages -> " << out_dir << "/manifest.json\n";
    for (const auto& s : manifest.stages)
      std::cout << "  " << s.name << (s.cached ? " (cached)" : "") << "\n";
  });

  auto* c_report = app.add_subcommand("report",
                                      "re-emit the report bundle for a run");
  c_report->add_option("--config", config_path)->required();
  c_report->add_option("--out", out_dir, "existing pipeline output directory")
      ->required();
  c_report->add_flag("--offline", offline);
  c_report->callback([&] {
    PipelineOptions opts;
    opts.config = Config::load(config_path);
    opts.out_dir = out_dir;
    opts.offline = offline;
    opts.stages = {"report"};
    run_pipeline(std::move(opts));
    std::cout << "report bundle -> " << out_dir << "/report\n";
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ugcs::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ugcs::RefusalError& e) {
    std::cerr << "provider refusal: " << e.what() << "\n";
    return 4;
  } catch (const ugcs::ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return 4;
  } catch (const ugcs::StageError& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}
