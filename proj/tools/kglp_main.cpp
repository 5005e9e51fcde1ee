// kglp: train, evaluate, and analyze knowledge-graph link-prediction models.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or input error.
// Every run emits a JSON manifest (command, configuration snapshot, dataset
// digests, seed, timing) so results can be reproduced exactly.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kglp/analysis.hpp"
#include "kglp/dataset.hpp"
#include "kglp/errors.hpp"
#include "kglp/evaluation.hpp"
#include "kglp/models.hpp"
#include "kglp/training.hpp"
#include "kglp/version.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

std::string fnv1a64_hex(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw kglp::input_error("cannot open file: " + p.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

struct DatasetArgs {
  std::string dir;
  std::string train_name = "train.txt";
  std::string valid_name = "valid.txt";
  std::string test_name = "test.txt";

  void attach(CLI::App* cmd) {
    cmd->add_option("--dataset", dir, "dataset directory")->required();
    cmd->add_option("--train-file", train_name, "training split file name");
    cmd->add_option("--valid-file", valid_name, "validation split file name");
    cmd->add_option("--test-file", test_name, "test split file name");
  }

  fs::path train_path() const { return fs::path(dir) / train_name; }
  fs::path valid_path() const { return fs::path(dir) / valid_name; }
  fs::path test_path() const { return fs::path(dir) / test_name; }

  kglp::Dataset load() const {
    if (!fs::is_directory(dir)) {
      throw kglp::input_error("dataset directory not found: " + dir);
    }
    return kglp::Dataset::build(kglp::load_triples(train_path()),
                                kglp::load_triples(valid_path()),
                                kglp::load_triples(test_path()));
  }

  ordered_json manifest_entry() const {
    ordered_json files;
    files["train"] = {{"path", train_path().string()}, {"fnv1a64", fnv1a64_hex(train_path())}};
    files["valid"] = {{"path", valid_path().string()}, {"fnv1a64", fnv1a64_hex(valid_path())}};
    files["test"] = {{"path", test_path().string()}, {"fnv1a64", fnv1a64_hex(test_path())}};
    return {{"dir", dir}, {"files", files}};
  }
};

void write_manifest(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw kglp::error("cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw kglp::error("failed writing manifest: " + path.string());
}

ordered_json config_json(const kglp::TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"optimizer", std::string(kglp::to_string(cfg.optimizer))},
          {"loss", std::string(kglp::to_string(cfg.loss))},
          {"margin", cfg.margin},
          {"adv_temperature", cfg.adv_temperature},
          {"negatives", cfg.negatives},
          {"sampling", std::string(kglp::to_string(cfg.sampling))},
          {"regularization", std::string(kglp::to_string(cfg.regularization))},
          {"reg_lambda", cfg.reg_lambda},
          {"dim", cfg.dim},
          {"norm_p", cfg.norm_p},
          {"seed", cfg.seed}};
}

std::vector<kglp::TiePolicy> parse_policies(const std::vector<std::string>& names) {
  std::vector<kglp::TiePolicy> policies;
  for (const std::string& n : names) policies.push_back(kglp::tie_policy_from_string(n));
  if (policies.empty()) policies.push_back(kglp::kDefaultTiePolicy);
  return policies;
}

void print_metrics_table(std::ostream& out,
                         const std::map<kglp::TiePolicy, kglp::EvalResult>& results,
                         const std::vector<kglp::TiePolicy>& order) {
  char line[256];
  out << "policy     scenario   MR           MRR        H@1        H@3        H@5        H@10\n";
  for (kglp::TiePolicy p : order) {
    const kglp::EvalResult& res = results.at(p);
    for (int s = 0; s < 2; ++s) {
      const kglp::Metrics& m = s == 0 ? res.raw : res.filtered;
      std::snprintf(line, sizeof line, "%-10s %-10s %-12.6f %-10.6f %-10.6f %-10.6f %-10.6f %-10.6f\n",
                    std::string(kglp::to_string(p)).c_str(), s == 0 ? "raw" : "filtered", m.mr,
                    m.mrr, m.h1, m.h3, m.h5, m.h10);
      out << line;
    }
  }
}

void export_predictions(const std::string& path, const kglp::Dataset& ds,
                        const kglp::EvalResult& res) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw kglp::input_error("cannot write predictions CSV: " + path);
  kglp::write_predictions_csv(out, ds, res.records);
}

int resolve_threads(int threads) { return threads < 0 ? 0 : threads; }

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  DatasetArgs data;
  std::string model_kind;
  std::string config_path;
  std::string out_path;
  std::string manifest_path;
  kglp::TrainConfig overrides;
  std::string optimizer_name, loss_name, sampling_name, reg_name;
  CLI::App* cmd = nullptr;

  void attach(CLI::App* c) {
    cmd = c;
    data.attach(c);
    c->add_option("--model", model_kind, "model kind: transe|distmult|complex|simple|hole|rotate")
        ->required();
    c->add_option("--config", config_path, "key=value training configuration file");
    c->add_option("--out", out_path, "output model file")->required();
    c->add_option("--manifest", manifest_path, "manifest path (default: <out>.manifest.json)");
    c->add_option("--epochs", overrides.epochs, "training epochs");
    c->add_option("--batch-size", overrides.batch_size, "facts per optimizer step");
    c->add_option("--learning-rate", overrides.learning_rate, "optimizer step size");
    c->add_option("--optimizer", optimizer_name, "sgd|adagrad|adam");
    c->add_option("--loss", loss_name, "margin|logistic|self_adversarial");
    c->add_option("--margin", overrides.margin, "margin gamma");
    c->add_option("--adv-temperature", overrides.adv_temperature, "self-adversarial alpha");
    c->add_option("--negatives", overrides.negatives, "negative samples per positive");
    c->add_option("--sampling", sampling_name, "uniform|bernoulli");
    c->add_option("--regularization", reg_name, "none|l2|n3");
    c->add_option("--reg-lambda", overrides.reg_lambda, "regularization weight");
    c->add_option("--dim", overrides.dim, "embedding dimension");
    c->add_option("--norm-p", overrides.norm_p, "TransE norm (1 or 2)");
    c->add_option("--seed", overrides.seed, "random seed");
  }

  kglp::TrainConfig resolve_config() const {
    kglp::TrainConfig cfg;
    if (!config_path.empty()) cfg = kglp::load_train_config(config_path);
    auto take = [&](const char* flag, auto member) {
      if (cmd->count(flag) > 0) cfg.*member = overrides.*member;
    };
    take("--epochs", &kglp::TrainConfig::epochs);
    take("--batch-size", &kglp::TrainConfig::batch_size);
    take("--learning-rate", &kglp::TrainConfig::learning_rate);
    take("--margin", &kglp::TrainConfig::margin);
    take("--adv-temperature", &kglp::TrainConfig::adv_temperature);
    take("--negatives", &kglp::TrainConfig::negatives);
    take("--reg-lambda", &kglp::TrainConfig::reg_lambda);
    take("--dim", &kglp::TrainConfig::dim);
    take("--norm-p", &kglp::TrainConfig::norm_p);
    take("--seed", &kglp::TrainConfig::seed);
    if (!optimizer_name.empty()) cfg.optimizer = kglp::optimizer_kind_from_string(optimizer_name);
    if (!loss_name.empty()) cfg.loss = kglp::loss_kind_from_string(loss_name);
    if (!sampling_name.empty()) cfg.sampling = kglp::sampling_kind_from_string(sampling_name);
    if (!reg_name.empty()) cfg.regularization = kglp::reg_kind_from_string(reg_name);
    return cfg;
  }
};

int run_train(const TrainArgs& args) {
  const kglp::ModelKind kind = kglp::model_kind_from_string(args.model_kind);
  const kglp::TrainConfig cfg = args.resolve_config();
  cfg.validate();
  const kglp::Dataset dataset = args.data.load();

  const auto t0 = std::chrono::steady_clock::now();
  kglp::TrainResult result = kglp::train(dataset, kind, cfg);
  const auto t1 = std::chrono::steady_clock::now();
  const double hours = std::chrono::duration<double>(t1 - t0).count() / 3600.0;

  kglp::save_model(result.params, args.out_path);

  ordered_json manifest = {
      {"command", "train"},
      {"version", std::string(kglp::kVersion)},
      {"seed", cfg.seed},
      {"model", std::string(kglp::to_string(kind))},
      {"config", config_json(cfg)},
      {"dataset", args.data.manifest_entry()},
      {"output", args.out_path},
      {"timing", {{"training_hours", hours}, {"prediction_ms_per_fact", nullptr}}},
  };
  const fs::path mpath =
      args.manifest_path.empty() ? fs::path(args.out_path + ".manifest.json")
                                 : fs::path(args.manifest_path);
  write_manifest(mpath, manifest);

  std::cout << "trained " << kglp::to_string(kind) << " for " << cfg.epochs << " epochs";
  if (!result.epoch_losses.empty()) {
    std::cout << " (first epoch loss " << result.epoch_losses.front() << ", last "
              << result.epoch_losses.back() << ")";
  }
  std::cout << "\nmodel: " << args.out_path << "\nmanifest: " << mpath.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  DatasetArgs data;
  std::string model_path;
  std::string external_path;
  std::vector<std::string> policy_names;
  std::string export_path;
  std::string manifest_path;
  int threads = -1;
  std::uint64_t seed = 42;

  void attach(CLI::App* c) {
    data.attach(c);
    c->add_option("--model-file", model_path, "trained model file");
    c->add_option("--external", external_path,
                  "external partial-ranking file (replaces the model)");
    c->add_option("--policies", policy_names, "tie policies, comma separated")
        ->delimiter(',');
    c->add_option("--export", export_path, "per-prediction CSV output path");
    c->add_option("--manifest", manifest_path, "manifest path (default: evaluate.manifest.json)");
    c->add_option("--threads", threads, "evaluation threads (default: hardware)")
        ->envname("KGLP_THREADS");
    c->add_option("--seed", seed, "seed for the random tie policy");
  }
};

int run_evaluate(const EvaluateArgs& args) {
  if (args.model_path.empty() == args.external_path.empty()) {
    throw kglp::input_error("provide exactly one of --model-file or --external");
  }
  const kglp::Dataset dataset = args.data.load();
  const std::vector<kglp::TiePolicy> policies = parse_policies(args.policy_names);

  std::map<kglp::TiePolicy, kglp::EvalResult> results;
  double prediction_ms = 0;
  ordered_json source;
  if (!args.model_path.empty()) {
    const kglp::ModelParams params = kglp::load_model(args.model_path);
    kglp::EvalOptions options;
    options.seed = args.seed;
    options.threads = resolve_threads(args.threads);
    const auto t0 = std::chrono::steady_clock::now();
    results = kglp::evaluate(params, dataset, policies, options);
    const auto t1 = std::chrono::steady_clock::now();
    const double total_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    prediction_ms = dataset.test().empty()
                        ? 0.0
                        : total_ms / static_cast<double>(dataset.test().size());
    source = {{"model_file", args.model_path},
              {"model_digest", fnv1a64_hex(args.model_path)},
              {"kind", std::string(kglp::to_string(params.kind))},
              {"dim", params.dim}};
  } else {
    kglp::EvalResult res =
        kglp::ingest_external_rankings(args.external_path, dataset, policies.front(), args.seed);
    results.emplace(policies.front(), std::move(res));
    if (policies.size() > 1) {
      for (std::size_t i = 1; i < policies.size(); ++i) {
        results.emplace(policies[i], kglp::ingest_external_rankings(
                                         args.external_path, dataset, policies[i], args.seed));
      }
    }
    source = {{"external_file", args.external_path},
              {"external_digest", fnv1a64_hex(args.external_path)}};
  }

  print_metrics_table(std::cout, results, policies);
  if (!args.model_path.empty()) {
    std::cout << "prediction time: " << prediction_ms << " ms per test fact\n";
  }

  if (!args.export_path.empty()) {
    export_predictions(args.export_path, dataset, results.at(policies.front()));
    std::cout << "predictions: " << args.export_path << "\n";
  }

  ordered_json policy_names_json = ordered_json::array();
  for (kglp::TiePolicy p : policies) policy_names_json.push_back(std::string(kglp::to_string(p)));
  ordered_json manifest = {
      {"command", "evaluate"},
      {"version", std::string(kglp::kVersion)},
      {"seed", args.seed},
      {"config",
       {{"policies", policy_names_json},
        {"threads", resolve_threads(args.threads)},
        {"export", args.export_path}}},
      {"source", source},
      {"dataset", args.data.manifest_entry()},
      {"timing",
       {{"training_hours", nullptr},
        {"prediction_ms_per_fact",
         args.model_path.empty() ? ordered_json(nullptr) : ordered_json(prediction_ms)}}},
  };
  const fs::path mpath = args.manifest_path.empty() ? fs::path("evaluate.manifest.json")
                                                    : fs::path(args.manifest_path);
  write_manifest(mpath, manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeCommon {
  DatasetArgs data;
  std::string manifest_path;
};

void emit_analyze_manifest(const AnalyzeCommon& common, const std::string& subcommand,
                           ordered_json config, const std::string& default_name,
                           ordered_json seed = nullptr) {
  ordered_json manifest = {
      {"command", "analyze " + subcommand},
      {"version", std::string(kglp::kVersion)},
      {"seed", std::move(seed)},
      {"config", std::move(config)},
      {"dataset", common.data.manifest_entry()},
      {"timing", {{"training_hours", nullptr}, {"prediction_ms_per_fact", nullptr}}},
  };
  const fs::path mpath =
      common.manifest_path.empty() ? fs::path(default_name) : fs::path(common.manifest_path);
  write_manifest(mpath, manifest);
}

std::vector<kglp::FeatureRow> peer_features(const kglp::Dataset& ds, bool source_side) {
  std::vector<kglp::FeatureRow> rows;
  for (const kglp::Triple& t : ds.test()) {
    const kglp::PeerCounts pc = kglp::count_peers(ds, t);
    for (kglp::Direction dir : {kglp::Direction::head, kglp::Direction::tail}) {
      const kglp::DirectedPeers dp = kglp::directed_peers(pc, dir);
      kglp::FeatureRow row;
      row.head = ds.entity_label(t.head);
      row.relation = ds.relation_label(t.relation);
      row.tail = ds.entity_label(t.tail);
      row.direction = dir;
      row.value = static_cast<double>(source_side ? dp.source_peers : dp.target_peers);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_feature_file(const std::string& path, const std::vector<kglp::FeatureRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw kglp::input_error("cannot write feature CSV: " + path);
  kglp::write_feature_csv(out, rows);
}

int run_analyze_peers(const AnalyzeCommon& common, const std::string& out_source,
                      const std::string& out_target) {
  if (out_source.empty() && out_target.empty()) {
    throw kglp::input_error("provide --out-source and/or --out-target");
  }
  const kglp::Dataset ds = common.data.load();
  if (!out_source.empty()) write_feature_file(out_source, peer_features(ds, true));
  if (!out_target.empty()) write_feature_file(out_target, peer_features(ds, false));
  emit_analyze_manifest(common, "peers",
                        {{"out_source", out_source}, {"out_target", out_target}},
                        "analyze_peers.manifest.json");
  return 0;
}

int run_analyze_rps(const AnalyzeCommon& common, int max_len, const std::string& out_path,
                    bool as_model, std::int64_t sample, std::uint64_t seed,
                    const std::vector<std::string>& policy_names, int threads,
                    const std::string& export_path) {
  const kglp::Dataset ds = common.data.load();
  const kglp::RpsIndex index = kglp::RpsIndex::build(ds, max_len);

  if (!out_path.empty()) {
    std::vector<kglp::FeatureRow> rows;
    for (const kglp::Triple& t : ds.test()) {
      const double value = kglp::rps(index, ds, t);
      for (kglp::Direction dir : {kglp::Direction::head, kglp::Direction::tail}) {
        kglp::FeatureRow row;
        row.head = ds.entity_label(t.head);
        row.relation = ds.relation_label(t.relation);
        row.tail = ds.entity_label(t.tail);
        row.direction = dir;
        row.value = value;
        rows.push_back(std::move(row));
      }
    }
    write_feature_file(out_path, rows);
    std::cout << "rps features: " << out_path << "\n";
  }

  if (as_model) {
    std::vector<kglp::Triple> facts(ds.test().begin(), ds.test().end());
    if (sample > 0 && std::cmp_less(sample, facts.size())) {
      std::vector<kglp::Triple> chosen;
      std::mt19937_64 rng(seed);
      std::sample(facts.begin(), facts.end(), std::back_inserter(chosen),
                  static_cast<std::size_t>(sample), rng);
      facts = std::move(chosen);
    }
    const std::vector<kglp::TiePolicy> policies = parse_policies(policy_names);
    kglp::EvalOptions options;
    options.seed = seed;
    options.threads = resolve_threads(threads);
    kglp::ScoreAllFn scorer = [&index, &ds](kglp::EntityId source, kglp::RelationId rel,
                                            kglp::Direction dir, std::span<double> out) {
      const std::vector<double> scores = kglp::rps_score_all(index, ds, source, rel, dir);
      std::copy(scores.begin(), scores.end(), out.begin());
    };
    auto results = kglp::evaluate_scorer(scorer, ds, facts, policies, options);
    std::cout << "rps-as-model over " << facts.size() << " test facts\n";
    print_metrics_table(std::cout, results, policies);
    if (!export_path.empty()) {
      export_predictions(export_path, ds, results.at(policies.front()));
      std::cout << "predictions: " << export_path << "\n";
    }
  }

  emit_analyze_manifest(common, "rps",
                        {{"max_len", max_len},
                         {"out", out_path},
                         {"as_model", as_model},
                         {"sample", sample}},
                        "analyze_rps.manifest.json", seed);
  return 0;
}

int run_analyze_relprops(const AnalyzeCommon& common, double tolerance,
                         const std::string& out_path) {
  const kglp::Dataset ds = common.data.load();
  const kglp::RelationProperties props = kglp::detect_relation_properties(ds, tolerance);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) throw kglp::input_error("cannot write relation properties CSV: " + out_path);
    out = &file;
  }
  *out << "relation,reflexive,irreflexive,symmetric,anti_symmetric,transitive,granted\n";
  char buf[128];
  for (kglp::RelationId r = 0; r < ds.num_relations(); ++r) {
    const kglp::RelationPropertyRatios& q = props.ratios[static_cast<std::size_t>(r)];
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,%.6f,", q.reflexive, q.irreflexive,
                  q.symmetric, q.anti_symmetric, q.transitive);
    *out << ds.relation_label(r) << buf;
    const auto granted = props.granted_list(r);
    for (std::size_t i = 0; i < granted.size(); ++i) {
      if (i > 0) *out << ';';
      *out << kglp::to_string(granted[i]);
    }
    *out << "\n";
  }
  if (!*out) throw kglp::error("failed writing relation properties");

  emit_analyze_manifest(common, "relprops",
                        {{"tolerance", tolerance}, {"out", out_path}},
                        "analyze_relprops.manifest.json");
  return 0;
}

struct BucketArgs {
  std::string predictions_path;
  std::string feature;  // peers_source | peers_target | rps | file
  std::string feature_file;
  std::string mode = "cumulative";
  std::string scenario = "filtered";
  std::vector<double> edges;
  int max_len = 3;
  std::string out_path;
};

int run_analyze_buckets(const AnalyzeCommon& common, const BucketArgs& args) {
  const kglp::Dataset ds = common.data.load();

  std::ifstream pin(args.predictions_path, std::ios::binary);
  if (!pin) {
    throw kglp::input_error("cannot open predictions CSV: " + args.predictions_path);
  }
  const std::vector<kglp::CsvPrediction> preds =
      kglp::read_predictions_csv(pin, args.predictions_path);
  if (preds.empty()) throw kglp::input_error("predictions CSV has no rows");

  const bool use_filtered = args.scenario == "filtered";
  if (!use_filtered && args.scenario != "raw") {
    throw kglp::input_error("scenario must be raw or filtered");
  }

  // resolve labels against the dataset vocabulary
  struct Resolved {
    kglp::Triple triple;
    kglp::Direction direction;
  };
  std::vector<Resolved> rows;
  std::vector<double> ranks;
  for (const kglp::CsvPrediction& p : preds) {
    const kglp::EntityId h = ds.entity_id(p.head);
    const kglp::EntityId t = ds.entity_id(p.tail);
    const kglp::RelationId r = ds.relation_id(p.relation);
    if (h < 0 || t < 0 || r < 0) {
      throw kglp::input_error("prediction references unknown labels: " + p.head + " " +
                              p.relation + " " + p.tail);
    }
    rows.push_back({kglp::Triple{h, r, t}, p.direction});
    ranks.push_back(use_filtered ? p.filtered_rank : p.raw_rank);
  }

  std::vector<double> features(rows.size(), 0.0);
  if (args.feature == "peers_source" || args.feature == "peers_target") {
    const bool source_side = args.feature == "peers_source";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const kglp::DirectedPeers dp =
          kglp::directed_peers(kglp::count_peers(ds, rows[i].triple), rows[i].direction);
      features[i] = static_cast<double>(source_side ? dp.source_peers : dp.target_peers);
    }
  } else if (args.feature == "rps") {
    const kglp::RpsIndex index = kglp::RpsIndex::build(ds, args.max_len);
    std::map<kglp::Triple, double> cache;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto [it, inserted] = cache.try_emplace(rows[i].triple, 0.0);
      if (inserted) it->second = kglp::rps(index, ds, rows[i].triple);
      features[i] = it->second;
    }
  } else if (args.feature == "file") {
    if (args.feature_file.empty()) {
      throw kglp::input_error("--feature file requires --feature-file");
    }
    std::ifstream fin(args.feature_file, std::ios::binary);
    if (!fin) throw kglp::input_error("cannot open feature CSV: " + args.feature_file);
    const auto feature_rows = kglp::read_feature_csv(fin, args.feature_file);
    std::map<std::tuple<std::string, std::string, std::string, kglp::Direction>, double> lookup;
    for (const kglp::FeatureRow& fr : feature_rows) {
      lookup.emplace(std::tuple(fr.head, fr.relation, fr.tail, fr.direction), fr.value);
    }
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      auto it = lookup.find(
          std::tuple(preds[i].head, preds[i].relation, preds[i].tail, preds[i].direction));
      if (it == lookup.end()) {
        missing.push_back(preds[i].head + "\t" + preds[i].relation + "\t" + preds[i].tail + "\t" +
                          std::string(kglp::to_string(preds[i].direction)));
      } else {
        features[i] = it->second;
      }
    }
    if (!missing.empty()) {
      std::string msg = "feature file lacks " + std::to_string(missing.size()) +
                        " prediction(s), e.g.:";
      for (std::size_t i = 0; i < missing.size() && i < 5; ++i) msg += "\n  " + missing[i];
      throw kglp::input_error(msg);
    }
  } else {
    throw kglp::input_error("unknown feature '" + args.feature +
                            "' (expected peers_source|peers_target|rps|file)");
  }

  std::vector<double> edges = args.edges;
  if (edges.empty()) edges = {0, 1, 2, 4, 8, 16, 32, 64, 128, 256};
  const kglp::BucketMode mode = kglp::bucket_mode_from_string(args.mode);
  const auto report = kglp::bucket_report(ranks, features, mode, edges);

  if (args.out_path.empty()) {
    kglp::write_bucket_csv(std::cout, report);
  } else {
    std::ofstream out(args.out_path, std::ios::binary);
    if (!out) throw kglp::input_error("cannot write bucket CSV: " + args.out_path);
    kglp::write_bucket_csv(out, report);
    std::cout << "buckets: " << args.out_path << "\n";
  }

  ordered_json edges_json = ordered_json::array();
  for (double e : edges) edges_json.push_back(e);
  emit_analyze_manifest(common, "buckets",
                        {{"predictions", args.predictions_path},
                         {"feature", args.feature},
                         {"feature_file", args.feature_file},
                         {"mode", args.mode},
                         {"scenario", args.scenario},
                         {"edges", edges_json},
                         {"out", args.out_path}},
                        "analyze_buckets.manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-graph link prediction: training, ranking evaluation, and "
               "structural analysis"};
  app.set_version_flag("--version", std::string(kglp::kVersion));
  app.require_subcommand(1);

  TrainArgs train_args;
  train_args.attach(app.add_subcommand("train", "train an embedding model"));

  EvaluateArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "rank test facts and report metrics");
  eval_args.attach(eval_cmd);

  CLI::App* analyze = app.add_subcommand("analyze", "structural features and reports");
  analyze->require_subcommand(1);

  AnalyzeCommon peers_common;
  std::string peers_out_source, peers_out_target;
  CLI::App* peers_cmd = analyze->add_subcommand("peers", "per-prediction peer counts");
  peers_common.data.attach(peers_cmd);
  peers_cmd->add_option("--out-source", peers_out_source, "source-peers feature CSV");
  peers_cmd->add_option("--out-target", peers_out_target, "target-peers feature CSV");
  peers_cmd->add_option("--manifest", peers_common.manifest_path, "manifest path");

  AnalyzeCommon rps_common;
  int rps_max_len = 3;
  std::string rps_out, rps_export;
  bool rps_as_model = false;
  std::int64_t rps_sample = 0;
  std::uint64_t rps_seed = 42;
  std::vector<std::string> rps_policies;
  int rps_threads = -1;
  CLI::App* rps_cmd = analyze->add_subcommand("rps", "relational path support");
  rps_common.data.attach(rps_cmd);
  rps_cmd->add_option("--max-len", rps_max_len, "maximum path length (1-3)");
  rps_cmd->add_option("--out", rps_out, "per-prediction RPS feature CSV");
  rps_cmd->add_flag("--as-model", rps_as_model, "evaluate RPS as a standalone predictor");
  rps_cmd->add_option("--sample", rps_sample, "evaluate on a random sample of test facts");
  rps_cmd->add_option("--seed", rps_seed, "sampling / random-policy seed");
  rps_cmd->add_option("--policies", rps_policies, "tie policies for --as-model")->delimiter(',');
  rps_cmd->add_option("--threads", rps_threads, "evaluation threads")->envname("KGLP_THREADS");
  rps_cmd->add_option("--export", rps_export, "per-prediction CSV for --as-model");
  rps_cmd->add_option("--manifest", rps_common.manifest_path, "manifest path");

  AnalyzeCommon rel_common;
  double rel_tolerance = 0.5;
  std::string rel_out;
  CLI::App* rel_cmd = analyze->add_subcommand("relprops", "relation property detection");
  rel_common.data.attach(rel_cmd);
  rel_cmd->add_option("--tolerance", rel_tolerance, "granting threshold in [0,1]");
  rel_cmd->add_option("--out", rel_out, "output CSV (default: stdout)");
  rel_cmd->add_option("--manifest", rel_common.manifest_path, "manifest path");

  AnalyzeCommon bucket_common;
  BucketArgs bucket_args;
  CLI::App* bucket_cmd = analyze->add_subcommand("buckets", "bucketed metric reports");
  bucket_common.data.attach(bucket_cmd);
  bucket_cmd->add_option("--predictions", bucket_args.predictions_path, "per-prediction CSV")
      ->required();
  bucket_cmd->add_option("--feature", bucket_args.feature,
                         "peers_source|peers_target|rps|file")
      ->required();
  bucket_cmd->add_option("--feature-file", bucket_args.feature_file,
                         "external feature CSV (with --feature file)");
  bucket_cmd->add_option("--mode", bucket_args.mode, "cumulative|disjoint");
  bucket_cmd->add_option("--scenario", bucket_args.scenario, "raw|filtered ranks");
  bucket_cmd->add_option("--edges", bucket_args.edges, "bucket edges, comma separated")
      ->delimiter(',');
  bucket_cmd->add_option("--max-len", bucket_args.max_len, "path length for --feature rps");
  bucket_cmd->add_option("--out", bucket_args.out_path, "output CSV (default: stdout)");
  bucket_cmd->add_option("--manifest", bucket_common.manifest_path, "manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("train")) return run_train(train_args);
    if (app.got_subcommand("evaluate")) return run_evaluate(eval_args);
    if (*peers_cmd) return run_analyze_peers(peers_common, peers_out_source, peers_out_target);
    if (*rps_cmd) {
      return run_analyze_rps(rps_common, rps_max_len, rps_out, rps_as_model, rps_sample,
                             rps_seed, rps_policies, rps_threads, rps_export);
    }
    if (*rel_cmd) return run_analyze_relprops(rel_common, rel_tolerance, rel_out);
    if (*bucket_cmd) return run_analyze_buckets(bucket_common, bucket_args);
    throw kglp::input_error("no command given");
  } catch (const kglp::input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
