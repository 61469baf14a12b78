#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "lfgen/corpus_io.hpp"
#include "support/files.hpp"

namespace fs = std::filesystem;
using namespace lfgen;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run lfgen_cli(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + LFGEN_CLI + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testfs::slurp(out);
  r.err = testfs::slurp(err);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST(Cli, HelpListsDefaults) {
  const auto dir = testfs::scratch("cli_help");
  const auto r = lfgen_cli("--help", dir);
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"0.8", "0.55", "0.7", "0.4", "0.3,0.2,0.5", "experiment", "export"})
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
  fs::remove_all(dir);
}

TEST(Cli, BadInvocationsExitOne) {
  const auto dir = testfs::scratch("cli_bad");
  EXPECT_EQ(lfgen_cli("", dir).code, 1);
  EXPECT_EQ(lfgen_cli("frobnicate", dir).code, 1);
  EXPECT_EQ(lfgen_cli("experiment rq9 --dataset " + q(LFGEN_TOY_DATA), dir).code, 1);
  EXPECT_EQ(lfgen_cli("experiment rq1 --dataset /nonexistent.yml", dir).code, 1);
  const auto r = lfgen_cli("experiment rq1 --dataset " + q(LFGEN_TOY_DATA) + " --holdout 1.5 --reps 1", dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("holdout"), std::string::npos) << r.err;
  fs::remove_all(dir);
}

TEST(Cli, MissingEmbeddingNamesTheText) {
  const auto dir = testfs::scratch("cli_missing_embedding");
  {
    std::ofstream e(dir / "emb.jsonl");
    e << "#dim=2\n{\"text\":\"who created [Makefile]\",\"vec\":[1,0]}\n";
  }
  const auto r = lfgen_cli("experiment rq1 --dataset " + q(LFGEN_TOY_DATA) + " --provider precomputed --embeddings " +
                               q(dir / "emb.jsonl") + " --reps 1 --out " + q(dir / "run"),
                           dir);
  EXPECT_EQ(r.code, 1);
  bool named = false;
  for (const auto& query : load_dataset(LFGEN_TOY_DATA)) named = named || r.err.find(query.text) != std::string::npos;
  EXPECT_TRUE(named) << r.err;
  fs::remove_all(dir);
}

TEST(Cli, FlagsOverrideConfigFile) {
  const auto dir = testfs::scratch("cli_config");
  {
    std::ofstream c(dir / "config.json");
    c << "{\"reps\": 2, \"seed\": 7, \"pruner_threshold\": 0.6}\n";
  }
  const auto r = lfgen_cli("experiment rq1 --dataset " + q(LFGEN_TOY_DATA) + " --config " + q(dir / "config.json") +
                               " --seed 9 --out " + q(dir / "run"),
                           dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cfg = nlohmann::json::parse(testfs::slurp(dir / "run" / "config.json"));
  EXPECT_EQ(cfg["repetitions"], 2);
  EXPECT_EQ(cfg["seed"], 9);
  EXPECT_EQ(cfg["pruner_threshold"], 0.6);
  fs::remove_all(dir);
}

TEST(Cli, FullFlow) {
  const auto dir = testfs::scratch("cli_flow");
  const auto toy = load_dataset(LFGEN_TOY_DATA);
  const std::array<double, 3> ratios{0.4, 0.3, 0.3};
  const auto parts = split_dataset(toy, ratios, 5);
  save_dataset((dir / "seed.yml").string(), parts[0]);
  save_dataset((dir / "eval.jsonl").string(), parts[1]);
  save_dataset((dir / "pool.jsonl").string(), parts[2].without_intents());

  auto r = lfgen_cli("group --labeled " + q(dir / "seed.yml") + " --unlabeled " + q(dir / "pool.jsonl") +
                         " --out " + q(dir / "g"),
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "g" / "expanded.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "g" / "leftovers.jsonl"));
  EXPECT_NE(r.err.find("grouping"), std::string::npos);
  EXPECT_EQ(r.out.find("grouping"), std::string::npos);

  r = lfgen_cli("generate --dataset " + q(dir / "g" / "expanded.jsonl") + " --out " + q(dir / "lf"), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("total"), std::string::npos);
  const auto lfs = nlohmann::json::parse(testfs::slurp(dir / "lf" / "lfs.json"));
  EXPECT_FALSE(lfs.empty());

  r = lfgen_cli("prune --lfs " + q(dir / "lf" / "lfs.json") + " --dataset " + q(dir / "lf" / "holdout.jsonl") +
                    " --out " + q(dir / "p"),
                dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pruned = nlohmann::ordered_json::parse(testfs::slurp(dir / "p" / "pruned.json"));
  ASSERT_FALSE(pruned.empty());
  EXPECT_EQ(pruned[0].begin().key(), "lf_name");

  r = lfgen_cli("label --lfs " + q(dir / "p" / "pruned_lfs.json") + " --dataset " + q(dir / "eval.jsonl") +
                    " --out " + q(dir / "labels.jsonl"),
                dir);
  ASSERT_EQ(r.code, 0) << r.err;

  r = lfgen_cli("eval --labels " + q(dir / "labels.jsonl") + " --dataset " + q(dir / "eval.jsonl") + " --out " +
                    q(dir / "m"),
                dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto metrics = nlohmann::json::parse(testfs::slurp(dir / "m" / "metrics.json"));
  EXPECT_TRUE(metrics.contains("weighted_f1"));
  EXPECT_TRUE(fs::exists(dir / "m" / "metrics.csv"));

  r = lfgen_cli("export rasa --labels " + q(dir / "labels.jsonl") + " --labeled " + q(dir / "seed.yml"), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("- intent: ", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("  examples: |\n    - "), std::string::npos);
  EXPECT_NO_THROW(parse_dataset(r.out, DatasetFormat::bracket));
  fs::remove_all(dir);
}

TEST(Cli, ExperimentBundleRepeatsByteForByte) {
  const auto dir = testfs::scratch("cli_repeat");
  const std::string base = "experiment rq1 --dataset " + q(LFGEN_TOY_DATA) + " --reps 3 --seed 11";
  ASSERT_EQ(lfgen_cli(base + " --out " + q(dir / "a"), dir).code, 0);
  ASSERT_EQ(lfgen_cli(base + " --threads 3 --out " + q(dir / "b"), dir).code, 0);
  EXPECT_EQ(testfs::snapshot(dir / "a"), testfs::snapshot(dir / "b"));
  fs::remove_all(dir);
}
