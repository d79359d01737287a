#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "icdlab/corpus_io.hpp"
#include "icdlab/csv.hpp"
#include "icdlab/digest.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code = -1;
  std::string err;
};

// Runs the CLI with stdout/stderr captured under `dir`.
Outcome cli(const fs::path& dir, const std::string& args) {
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(ICDLAB_CLI_PATH) + " " + args + " >" + (dir / "stdout.txt").string() + " 2>" +
                          err.string();
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.err = icdlab::read_text_file(err);
  return o;
}

std::string slurp(const fs::path& p) { return icdlab::read_text_file(p); }

size_t corpus_notes(const fs::path& p) { return icdlab::read_corpus(p).size(); }

// Small but complete configuration used by the end-to-end tests.
fs::path small_config(const fs::path& dir) {
  const json cfg = {{"corpus", {{"gold_notes", 120}, {"pool_notes", 60}}},
                    {"explain", {{"top_n", 5}}},
                    {"augmentation", {{"folds", 3}, {"steps", {0, 30, 60}}, {"repeats", 2}, {"tiers", {1, 3}}}}};
  icdlab::write_json_file(dir / "config.json", cfg);
  return dir / "config.json";
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    if (std::string(ICDLAB_CLI_PATH).empty()) GTEST_SKIP() << "built without the command-line tool";
  }
};

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  const auto dir = icdlab::testing::scratch_dir("cli_usage");
  auto o = cli(dir, "");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("Usage"), std::string::npos);
  EXPECT_EQ(cli(dir, "frobnicate --out " + dir.string()).code, 1);
  EXPECT_EQ(cli(dir, "gen --out " + dir.string() + " --bogus").code, 1);
  EXPECT_EQ(cli(dir, "gen").code, 1);
  EXPECT_EQ(cli(dir, "gen --seed notanumber --out " + dir.string()).code, 1);
}

TEST_F(Cli, IoAndValidationExitCodes) {
  const auto dir = icdlab::testing::scratch_dir("cli_codes");
  EXPECT_EQ(cli(dir, "split --corpus " + (dir / "missing.jsonl").string() + " --out " + dir.string()).code, 2);
  EXPECT_EQ(cli(dir, "gen --config " + (dir / "missing.json").string() + " --out " + dir.string()).code, 2);
  icdlab::write_json_file(dir / "bad.json", {{"nonsense", json::object()}});
  const auto o = cli(dir, "gen --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string());
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("nonsense"), std::string::npos);
  icdlab::write_text_file(dir / "broken.jsonl", "{\"format\": 1}\n");
  EXPECT_EQ(cli(dir, "split --corpus " + (dir / "broken.jsonl").string() + " --out " + dir.string()).code, 1);
}

TEST_F(Cli, GenIsDeterministicAndSplitsChildrenCorpus) {
  const auto dir = icdlab::testing::scratch_dir("cli_gen");
  icdlab::write_json_file(dir / "c.json", {{"corpus", {{"pool_notes", 40}}}});
  const std::string cfg = " --config " + (dir / "c.json").string();
  ASSERT_EQ(cli(dir, "gen --seed 7" + cfg + " --out " + (dir / "a").string()).code, 0);
  ASSERT_EQ(cli(dir, "gen --seed 7" + cfg + " --out " + (dir / "b").string()).code, 0);
  for (const char* f : {"corpus.jsonl", "pool.jsonl", "catalog.json"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  EXPECT_EQ(corpus_notes(dir / "a" / "corpus.jsonl"), 303u);
  EXPECT_EQ(corpus_notes(dir / "a" / "pool.jsonl"), 40u);

  const auto manifest = icdlab::read_json_file(dir / "a" / "manifest.json");
  EXPECT_EQ(manifest.at("command"), "gen");
  EXPECT_EQ(manifest.at("seeds").at("seed"), 7);
  EXPECT_EQ(manifest.at("outputs").size(), 3u);
  EXPECT_TRUE(manifest.contains("wall_clock_seconds"));
  EXPECT_EQ(manifest.at("outputs")[1].at("digest"), icdlab::hex_digest(slurp(dir / "a" / "corpus.jsonl")));

  const auto corpus = (dir / "a" / "corpus.jsonl").string();
  const auto before = slurp(corpus);
  ASSERT_EQ(cli(dir, "split --seed 3 --corpus " + corpus + " --out " + (dir / "s").string()).code, 0);
  EXPECT_EQ(corpus_notes(dir / "s" / "train.jsonl"), 237u);
  EXPECT_EQ(corpus_notes(dir / "s" / "validation.jsonl"), 33u);
  EXPECT_EQ(corpus_notes(dir / "s" / "test.jsonl"), 33u);
  EXPECT_EQ(slurp(corpus), before);
}

TEST_F(Cli, EndToEndChain) {
  const auto dir = icdlab::testing::scratch_dir("cli_chain");
  const std::string cfg = " --config " + small_config(dir).string();
  auto run = [&](const std::string& args) {
    const auto o = cli(dir, args + cfg);
    EXPECT_EQ(o.code, 0) << args << "\n" << o.err;
    return o;
  };
  const auto d = [&](const char* s) { return (dir / s).string(); };

  run("gen --seed 11 --out " + d("gen"));
  run("split --seed 11 --corpus " + d("gen/corpus.jsonl") + " --out " + d("split"));
  run("train-extractor --train " + d("split/train.jsonl") + " --catalog " + d("gen/catalog.json") + " --out " +
      d("ex"));
  run("eval-extractor --model " + d("ex/model.json") + " --test " + d("split/test.jsonl") + " --catalog " +
      d("gen/catalog.json") + " --out " + d("exeval"));
  const auto report = icdlab::read_json_file(dir / "exeval" / "report.json");
  for (const char* k : {"span_f1", "binary_mcc", "impossible_mcc"}) EXPECT_TRUE(report.contains(k)) << k;
  EXPECT_GT(report.at("span_f1").get<double>(), 0.9);

  run("impute --corpus " + d("split/train.jsonl") + " --catalog " + d("gen/catalog.json") + " --out " + d("ftrain"));
  run("impute --corpus " + d("gen/pool.jsonl") + " --model " + d("ex/model.json") + " --stats-from " +
      d("split/train.jsonl") + " --catalog " + d("gen/catalog.json") + " --out " + d("fpool"));
  run("impute --corpus " + d("split/test.jsonl") + " --stats-from " + d("split/train.jsonl") + " --catalog " +
      d("gen/catalog.json") + " --out " + d("ftest"));
  EXPECT_TRUE(fs::exists(dir / "fpool" / "features.schema.json"));

  run("train-clf --features " + d("ftrain/features.csv") + " " + d("fpool/features.csv") + " --out " + d("clf"));
  run("eval-clf --model " + d("clf/model.json") + " --features " + d("ftest/features.csv") + " --out " + d("clfeval"));
  const auto rows = icdlab::parse_csv(slurp(dir / "clfeval" / "class_report.csv"));
  EXPECT_EQ(rows.back()[0], "weighted average");

  run("explain --model " + d("clf/model.json") + " --features " + d("ftest/features.csv") + " --out " + d("shap"));
  const auto shap = icdlab::parse_csv(slurp(dir / "shap" / "shap_summary.csv"));
  EXPECT_EQ(shap.size(), 1u + 5u * 6u);

  run("augment --jobs 1 --gold " + d("gen/corpus.jsonl") + " --pool " + d("gen/pool.jsonl") + " --catalog " +
      d("gen/catalog.json") + " --out " + d("aug1"));
  run("augment --jobs 3 --gold " + d("gen/corpus.jsonl") + " --pool " + d("gen/pool.jsonl") + " --catalog " +
      d("gen/catalog.json") + " --out " + d("aug3"));
  EXPECT_EQ(slurp(dir / "aug1" / "curves.csv"), slurp(dir / "aug3" / "curves.csv"));
  EXPECT_EQ(icdlab::parse_csv(slurp(dir / "aug1" / "curves.csv")).size(), 1u + 2u * 3u * 2u);

  for (const char* out : {"gen", "split", "ex", "exeval", "ftrain", "fpool", "clf", "clfeval", "shap", "aug1"}) {
    EXPECT_TRUE(fs::exists(dir / out / "manifest.json")) << out;
  }
}
