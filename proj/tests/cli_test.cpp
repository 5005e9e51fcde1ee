// End-to-end tests of the kglp command line tool.  Each case runs the real
// binary (path injected via KGLP_CLI_PATH) against a scratch dataset and
// inspects exit code, stdout/stderr and produced files.

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "kglp/analysis.hpp"
#include "kglp/dataset.hpp"
#include "kglp/evaluation.hpp"
#include "kglp/models.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace kglp;
using test::TempDir;
using test::read_file;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const TempDir& scratch, const std::string& args) {
  static int invocation = 0;
  const fs::path out_path = scratch.file("cli_out_" + std::to_string(invocation) + ".txt");
  const fs::path err_path = scratch.file("cli_err_" + std::to_string(invocation) + ".txt");
  ++invocation;
  const std::string cmd = std::string(KGLP_CLI_PATH) + " " + args + " >" + out_path.string() +
                          " 2>" + err_path.string();
  const int status = std::system(cmd.c_str());
  CliResult res;
  res.code = status < 0 ? status : WEXITSTATUS(status);
  res.out = read_file(out_path);
  res.err = read_file(err_path);
  return res;
}

// 8 entities, 2 relations; r1 has a deliberately symmetric shape.
void write_toy_dataset(const TempDir& dir) {
  dir.write("train.txt",
            "a\tr0\tb\n"
            "a\tr0\tc\n"
            "b\tr0\tc\n"
            "c\tr0\td\n"
            "d\tr0\te\n"
            "e\tr0\tf\n"
            "f\tr0\tg\n"
            "g\tr0\th\n"
            "a\tr1\tb\n"
            "b\tr1\ta\n"
            "c\tr1\td\n"
            "d\tr1\tc\n"
            "e\tr1\tf\n"
            "f\tr1\te\n");
  dir.write("valid.txt",
            "a\tr0\td\n"
            "g\tr1\th\n");
  dir.write("test.txt",
            "b\tr0\te\n"
            "c\tr0\tf\n"
            "h\tr1\tg\n");
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("version flag exits 0 and prints the toolkit version") {
  TempDir dir;
  const CliResult res = run_cli(dir, "--version");
  CHECK(res.code == 0);
  CHECK(res.out.find("0.1.0") != std::string::npos);
}

TEST_CASE("missing subcommand and unknown flags are usage errors (exit 2)") {
  TempDir dir;
  CHECK(run_cli(dir, "").code == 2);
  CHECK(run_cli(dir, "evaluate --bogus-flag 1").code == 2);
  CHECK(run_cli(dir, "frobnicate").code == 2);
}

TEST_CASE("train writes a loadable model and a manifest") {
  TempDir dir;
  write_toy_dataset(dir);
  const std::string model = dir.file("m.emb").string();
  const CliResult res = run_cli(dir, "train --dataset " + dir.path().string() +
                                         " --model distmult --dim 8 --epochs 4 --seed 11 --out " +
                                         model);
  CAPTURE(res.err);
  REQUIRE(res.code == 0);

  const ModelParams params = load_model(model);
  CHECK(params.kind == ModelKind::distmult);
  CHECK(params.dim == 8);
  CHECK(params.num_entities == 8);
  CHECK(params.num_relations == 2);

  const std::string manifest = read_file(model + ".manifest.json");
  CHECK(manifest.find("\"command\": \"train\"") != std::string::npos);
  CHECK(manifest.find("\"seed\": 11") != std::string::npos);
  CHECK(manifest.find("\"fnv1a64\"") != std::string::npos);
  CHECK(manifest.find("\"training_hours\"") != std::string::npos);
}

TEST_CASE("train is deterministic: same seed gives byte-identical model files") {
  TempDir dir;
  write_toy_dataset(dir);
  const std::string base = "train --dataset " + dir.path().string() +
                           " --model rotate --dim 6 --epochs 3 --negatives 2 --seed 7 --out ";
  REQUIRE(run_cli(dir, base + dir.file("one.emb").string()).code == 0);
  REQUIRE(run_cli(dir, base + dir.file("two.emb").string()).code == 0);
  const std::string one = read_file(dir.file("one.emb"));
  const std::string two = read_file(dir.file("two.emb"));
  REQUIRE_FALSE(one.empty());
  CHECK(one == two);

  // a different seed must change the bytes
  REQUIRE(run_cli(dir, "train --dataset " + dir.path().string() +
                           " --model rotate --dim 6 --epochs 3 --negatives 2 --seed 8 --out " +
                           dir.file("three.emb").string())
              .code == 0);
  CHECK(read_file(dir.file("three.emb")) != one);
}

TEST_CASE("train on a missing dataset directory exits 2 naming the path") {
  TempDir dir;
  const CliResult res = run_cli(dir, "train --dataset " + dir.file("absent").string() +
                                         " --model transe --out " + dir.file("m.emb").string());
  CHECK(res.code == 2);
  CHECK(res.err.find("absent") != std::string::npos);
}

TEST_CASE("train rejects invalid hyperparameters with exit 2") {
  TempDir dir;
  write_toy_dataset(dir);
  const std::string base =
      "train --dataset " + dir.path().string() + " --model transe --out " +
      dir.file("m.emb").string();
  CHECK(run_cli(dir, base + " --epochs -1").code == 2);
  CHECK(run_cli(dir, base + " --dim 0").code == 2);
  CHECK(run_cli(dir, base + " --norm-p 3").code == 2);
  CHECK(run_cli(dir, base + " --regularization l2").code == 2);  // reg_lambda still 0
}

TEST_CASE("train config file keys are overridden by flags") {
  TempDir dir;
  write_toy_dataset(dir);
  dir.write("cfg.txt",
            "# toy configuration\n"
            "epochs = 2\n"
            "dim = 5\n"
            "optimizer = sgd\n"
            "seed = 3\n");
  const std::string model = dir.file("m.emb").string();
  const CliResult res =
      run_cli(dir, "train --dataset " + dir.path().string() + " --model transe --config " +
                       dir.file("cfg.txt").string() + " --dim 7 --out " + model);
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  CHECK(load_model(model).dim == 7);  // flag wins over file
  const std::string manifest = read_file(model + ".manifest.json");
  CHECK(manifest.find("\"optimizer\": \"sgd\"") != std::string::npos);  // file key kept
  CHECK(manifest.find("\"epochs\": 2") != std::string::npos);
}

TEST_CASE("evaluate prints 6-decimal metric tables and exports predictions") {
  TempDir dir;
  write_toy_dataset(dir);
  const std::string model = dir.file("m.emb").string();
  REQUIRE(run_cli(dir, "train --dataset " + dir.path().string() +
                           " --model complex --dim 6 --epochs 5 --seed 2 --out " + model)
              .code == 0);
  const std::string preds = dir.file("preds.csv").string();
  const CliResult res =
      run_cli(dir, "evaluate --dataset " + dir.path().string() + " --model-file " + model +
                       " --policies min,average,max --export " + preds + " --manifest " +
                       dir.file("eval.json").string() + " --threads 2");
  CAPTURE(res.err);
  REQUIRE(res.code == 0);

  // one raw and one filtered row per policy, 6 decimal places
  for (const char* policy : {"min", "average", "max"}) {
    CHECK(res.out.find(std::string(policy) + " ") != std::string::npos);
  }
  CHECK(count_lines(res.out) >= 7);
  CHECK(res.out.find("raw") != std::string::npos);
  CHECK(res.out.find("filtered") != std::string::npos);
  CHECK(res.out.find("prediction time:") != std::string::npos);
  // 6-decimal formatting somewhere in the table
  CHECK(res.out.find(".000000") != std::string::npos);

  // export: header + 2 rows per test fact (3 facts)
  const std::string csv = read_file(preds);
  CHECK(count_lines(csv) == 1 + 2 * 3);
  CHECK(csv.rfind("head,relation,tail,direction,raw_rank,filtered_rank,outranking", 0) == 0);

  const std::string manifest = read_file(dir.file("eval.json"));
  CHECK(manifest.find("\"command\": \"evaluate\"") != std::string::npos);
  CHECK(manifest.find("\"prediction_ms_per_fact\"") != std::string::npos);
}

TEST_CASE("evaluate separates tie policies on a constant-score model") {
  TempDir dir;
  write_toy_dataset(dir);
  // all-zero DistMult parameters: every candidate scores 0, so every
  // prediction is one big tie over all 8 entities.
  ModelParams params = init_params(ModelKind::distmult, 8, 2, 4, 1);
  std::fill(params.entity_store.begin(), params.entity_store.end(), 0.0);
  std::fill(params.relation_store.begin(), params.relation_store.end(), 0.0);
  const std::string model = dir.file("zero.emb").string();
  save_model(params, model);

  const CliResult res = run_cli(dir, "evaluate --dataset " + dir.path().string() +
                                         " --model-file " + model + " --policies min,max,average");
  CAPTURE(res.out);
  REQUIRE(res.code == 0);
  // min: rank 1 everywhere -> raw H@1 = 1, MR = 1; max: raw rank 8 -> H@1 = 0
  CHECK(res.out.find("min        raw        1.000000     1.000000   1.000000") !=
        std::string::npos);
  CHECK(res.out.find("max        raw        8.000000") != std::string::npos);
  // average: raw rank (1 + 8) / 2 = 4.5 for every prediction
  CHECK(res.out.find("average    raw        4.500000") != std::string::npos);
}

TEST_CASE("evaluate rejects a model whose vocabulary disagrees with the dataset") {
  TempDir dir;
  write_toy_dataset(dir);
  ModelParams params = init_params(ModelKind::distmult, 5, 2, 4, 1);  // 5 != 8 entities
  const std::string model = dir.file("bad.emb").string();
  save_model(params, model);
  const CliResult res =
      run_cli(dir, "evaluate --dataset " + dir.path().string() + " --model-file " + model);
  CHECK(res.code == 2);
  CHECK(res.err.find("5") != std::string::npos);
  CHECK(res.err.find("8") != std::string::npos);
}

TEST_CASE("evaluate requires exactly one of --model-file and --external") {
  TempDir dir;
  write_toy_dataset(dir);
  CHECK(run_cli(dir, "evaluate --dataset " + dir.path().string()).code == 2);
}

TEST_CASE("evaluate ingests external partial rankings") {
  TempDir dir;
  write_toy_dataset(dir);
  // Rank the tail prediction of <b, r0, e> perfectly and leave everything
  // else unlisted (score 0).  convention=lower: smaller is better.
  dir.write("ext.topk",
            "convention=lower\n"
            "b\tr0\te\ttail\n"
            "e\t1\n"
            "a\t2\n"
            "b\t3\n");
  const CliResult res = run_cli(dir, "evaluate --dataset " + dir.path().string() +
                                         " --external " + dir.file("ext.topk").string() +
                                         " --policies min");
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("min") != std::string::npos);
  // the listed block has its target at raw rank 1; unlisted predictions tie.
  CHECK(res.out.find("raw") != std::string::npos);
}

TEST_CASE("analyze peers emits feature files matching the library counts") {
  TempDir dir;
  write_toy_dataset(dir);
  const CliResult res = run_cli(dir, "analyze peers --dataset " + dir.path().string() +
                                         " --out-source " + dir.file("src.csv").string() +
                                         " --out-target " + dir.file("tgt.csv").string());
  CAPTURE(res.err);
  REQUIRE(res.code == 0);

  const Dataset ds = load_dataset_dir(dir.path());
  std::ifstream in(dir.file("src.csv"));
  const auto rows = read_feature_csv(in, "src.csv");
  REQUIRE(rows.size() == 2 * ds.test().size());
  for (const FeatureRow& row : rows) {
    const Triple t{ds.entity_id(row.head), ds.relation_id(row.relation), ds.entity_id(row.tail)};
    const DirectedPeers dp = directed_peers(count_peers(ds, t), row.direction);
    CHECK(row.value == static_cast<double>(dp.source_peers));
  }
}

TEST_CASE("analyze rps writes features and can act as a model on a sample") {
  TempDir dir;
  write_toy_dataset(dir);
  const CliResult res = run_cli(dir, "analyze rps --dataset " + dir.path().string() +
                                         " --max-len 2 --out " + dir.file("rps.csv").string() +
                                         " --as-model --sample 2 --seed 5 --policies average");
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("rps-as-model over 2 test facts") != std::string::npos);
  CHECK(res.out.find("filtered") != std::string::npos);

  const Dataset ds = load_dataset_dir(dir.path());
  const RpsIndex index = RpsIndex::build(ds, 2);
  std::ifstream in(dir.file("rps.csv"));
  const auto rows = read_feature_csv(in, "rps.csv");
  REQUIRE(rows.size() == 2 * ds.test().size());
  for (const FeatureRow& row : rows) {
    const Triple t{ds.entity_id(row.head), ds.relation_id(row.relation), ds.entity_id(row.tail)};
    CHECK(row.value == doctest::Approx(rps(index, ds, t)).epsilon(1e-12));
  }
}

TEST_CASE("analyze relprops grants symmetry for the symmetric relation") {
  TempDir dir;
  write_toy_dataset(dir);
  const CliResult res = run_cli(dir, "analyze relprops --dataset " + dir.path().string());
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  std::istringstream lines(res.out);
  std::string line;
  bool saw_r1 = false;
  while (std::getline(lines, line)) {
    if (line.rfind("r1,", 0) == 0) {
      saw_r1 = true;
      CHECK(line.find("symmetric") != std::string::npos);
      CHECK(line.find("1.000000") != std::string::npos);  // r1 is fully symmetric in train
    }
  }
  CHECK(saw_r1);
}

TEST_CASE("analyze buckets aggregates an exported prediction file") {
  TempDir dir;
  write_toy_dataset(dir);
  const std::string model = dir.file("m.emb").string();
  REQUIRE(run_cli(dir, "train --dataset " + dir.path().string() +
                           " --model simple --dim 4 --epochs 2 --seed 9 --out " + model)
              .code == 0);
  const std::string preds = dir.file("preds.csv").string();
  REQUIRE(run_cli(dir, "evaluate --dataset " + dir.path().string() + " --model-file " + model +
                           " --export " + preds)
              .code == 0);

  const CliResult res =
      run_cli(dir, "analyze buckets --dataset " + dir.path().string() + " --predictions " +
                       preds + " --feature peers_source --mode cumulative --edges 0,1,2,4,8");
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  CHECK(res.out.rfind("edge,count,coverage_pct,h1,mrr", 0) == 0);
  // the last cumulative edge is wide enough to cover all 6 predictions
  CHECK(res.out.find("\n8,6,100,") != std::string::npos);
}

TEST_CASE("analyze buckets with a feature file reports missing predictions") {
  TempDir dir;
  write_toy_dataset(dir);
  const std::string model = dir.file("m.emb").string();
  REQUIRE(run_cli(dir, "train --dataset " + dir.path().string() +
                           " --model transe --dim 4 --epochs 1 --seed 1 --out " + model)
              .code == 0);
  const std::string preds = dir.file("preds.csv").string();
  REQUIRE(run_cli(dir, "evaluate --dataset " + dir.path().string() + " --model-file " + model +
                           " --export " + preds)
              .code == 0);

  // feature file covering only one of the six predictions
  dir.write("partial.csv",
            "head,relation,tail,direction,value\n"
            "b,r0,e,head,1.5\n");
  const CliResult res = run_cli(dir, "analyze buckets --dataset " + dir.path().string() +
                                         " --predictions " + preds +
                                         " --feature file --feature-file " +
                                         dir.file("partial.csv").string());
  CHECK(res.code == 2);
  CHECK(res.err.find("5 prediction(s)") != std::string::npos);

  // completing the file makes the join succeed
  std::ostringstream full;
  full << "head,relation,tail,direction,value\n";
  const Dataset ds = load_dataset_dir(dir.path());
  for (const Triple& t : ds.test()) {
    for (const char* d : {"head", "tail"}) {
      full << ds.entity_label(t.head) << ',' << ds.relation_label(t.relation) << ','
           << ds.entity_label(t.tail) << ',' << d << ",1.0\n";
    }
  }
  dir.write("full.csv", full.str());
  const CliResult ok = run_cli(dir, "analyze buckets --dataset " + dir.path().string() +
                                        " --predictions " + preds +
                                        " --feature file --feature-file " +
                                        dir.file("full.csv").string() + " --edges 0,2");
  CAPTURE(ok.err);
  CHECK(ok.code == 0);
  CHECK(ok.out.find("\n2,6,100,") != std::string::npos);
}

TEST_CASE("every command writes a manifest naming itself") {
  TempDir dir;
  write_toy_dataset(dir);
  const std::string mpath = dir.file("man.json").string();
  REQUIRE(run_cli(dir, "analyze relprops --dataset " + dir.path().string() + " --manifest " +
                           mpath)
              .code == 0);
  const std::string manifest = read_file(mpath);
  CHECK(manifest.find("\"command\": \"analyze relprops\"") != std::string::npos);
  CHECK(manifest.find("\"version\": \"0.1.0\"") != std::string::npos);
  CHECK(manifest.find("\"fnv1a64\"") != std::string::npos);
}

}  // TEST_SUITE("cli")
