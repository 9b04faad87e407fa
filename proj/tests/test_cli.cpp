#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <set>
#include <sstream>

#include "mde/checkpoint.hpp"
#include "mde/data.hpp"
#include "test_util.hpp"

namespace mde {
namespace {

struct CliResult {
  int code = -1;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  CliResult run(const std::string& args) {
    const std::string out = dir_.file("stdout"), err = dir_.file("stderr");
    const std::string cmd = std::string(MDE_CLI_PATH) + " " + args + " >" + out +
                            " 2>" + err;
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = testing::read_file(out);
    r.err = testing::read_file(err);
    return r;
  }
  std::string path(const std::string& name) const { return dir_.file(name); }

  // Small symmetry dataset plus a train run on it.
  void toy_model(const std::string& run_dir, const std::string& extra = "") {
    ASSERT_EQ(run("generate-synthetic --pattern symmetry --entities 30 --density 0.1 "
                  "--seed 3 --out " + path("data")).code, 0);
    const CliResult r = run("train --train " + path("data/train.tsv") +
                      " --dim 8 --epochs 3 --batch-size 20 --output-dir " +
                      path(run_dir) + " " + extra);
    ASSERT_EQ(r.code, 0) << r.err;
  }

  testing::TempDir dir_;
};

TEST_F(Cli, HelpListsTrainFlagsWithDefaults) {
  const CliResult r = run("train --help");
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"--dim", "--batch-size", "--gamma1", "--beta2", "--xi",
                        "--threshold", "--weights", "--psi", "--lr", "--entity-norm",
                        "--checkpoint-interval", "--output-dir", "--config"}) {
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
  }
  for (const char* s : {"[50]", "[100]", "[1000]", "[1.2]", "[0.05]",
                        "[0.25,0.5,0.25,0]", "[adadelta]"}) {
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
  }
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("train --no-such-flag 1").code, 1);
  EXPECT_EQ(run("evaluate --test x").code, 1);
  EXPECT_EQ(run("train --output-dir " + path("o")).code, 1);
  const CliResult bad = run("train --train x --output-dir o --p 3");
  EXPECT_EQ(bad.code, 1);
}

TEST_F(Cli, MissingDatasetNamesTheFile) {
  const CliResult r = run("train --train " + path("nowhere.tsv") + " --output-dir " + path("o"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nowhere.tsv"), std::string::npos);
}

TEST_F(Cli, TrainWritesArtifactsAndIsReproducible) {
  toy_model("a", "--seed 7 --epochs 2");
  toy_model("b", "--seed 7 --epochs 2");
  for (const char* f : {"model.ckpt", "train_log.csv", "manifest.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(path(std::string("a/") + f))) << f;
  }
  EXPECT_EQ(testing::read_file(path("a/model.ckpt")),
            testing::read_file(path("b/model.ckpt")));
  const std::string manifest = testing::read_file(path("a/manifest.txt"));
  EXPECT_NE(manifest.find("\nseed=7\n"), std::string::npos);
  EXPECT_NE(manifest.find("# sha256 "), std::string::npos);

  // The manifest alone reproduces the run.
  const CliResult again = run("train --config " + path("a/manifest.txt") +
                        " --output-dir " + path("c"));
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(testing::read_file(path("a/model.ckpt")),
            testing::read_file(path("c/model.ckpt")));
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  testing::write_file(path("cfg.txt"), "dim=6\nepochs=5\n");
  ASSERT_EQ(run("generate-synthetic --pattern inversion --entities 20 --relations 2 "
                "--density 0.2 --out " + path("data")).code, 0);
  const CliResult r = run("train --config " + path("cfg.txt") + " --epochs 1 --train " +
                    path("data/train.tsv") + " --output-dir " + path("run"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ck = load_checkpoint(path("run/model.ckpt"));
  EXPECT_EQ(ck.embeddings.dim(), 6u);
  EXPECT_EQ(ck.state->epoch, 1u);
}

TEST_F(Cli, ResumeContinuesEpochs) {
  toy_model("r");
  const CliResult r = run("train --train " + path("data/train.tsv") +
                    " --dim 8 --epochs 2 --batch-size 20 --resume --output-dir " +
                    path("r"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_checkpoint(path("r/model.ckpt")).state->epoch, 5u);
}

TEST_F(Cli, EvaluateReportsBothSettings) {
  toy_model("m");
  const CliResult r = run("evaluate --checkpoint " + path("m/model.ckpt") + " --test " +
                    path("data/holdout.tsv") + " --train " + path("data/train.tsv") +
                    " --setting raw,filtered --side both --csv " + path("m.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto raw_at = r.out.find("[raw/both]");
  const auto filt_at = r.out.find("[filtered/both]");
  ASSERT_NE(raw_at, std::string::npos);
  ASSERT_NE(filt_at, std::string::npos);
  for (const char* k : {"n: ", "mr: ", "mrr: ", "hits@1: ", "hits@3: ", "hits@10: "}) {
    EXPECT_NE(r.out.find(k), std::string::npos) << k;
  }
  auto mrr_after = [&](std::size_t at) {
    const auto p = r.out.find("mrr: ", at);
    return std::stod(r.out.substr(p + 5));
  };
  EXPECT_GE(mrr_after(filt_at), mrr_after(raw_at));
  EXPECT_NE(testing::read_file(path("m.csv")).find("filtered,both,"), std::string::npos);
}

TEST_F(Cli, EvaluateRejectsForeignVocabulary) {
  toy_model("m");
  testing::write_file(path("foreign.tsv"), "stranger\tsym0\te1\n");
  const CliResult r = run("evaluate --checkpoint " + path("m/model.ckpt") + " --test " +
                    path("foreign.tsv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("stranger"), std::string::npos);
}

TEST_F(Cli, CorruptCheckpointHeader) {
  toy_model("m");
  std::string bytes = testing::read_file(path("m/model.ckpt"));
  bytes[8] = 9;  // version field
  testing::write_file(path("bad.ckpt"), bytes);
  const CliResult r = run("evaluate --checkpoint " + path("bad.ckpt") + " --test " +
                    path("data/holdout.tsv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("version"), std::string::npos);
  EXPECT_EQ(run("inspect " + path("bad.ckpt")).code, 2);
}

TEST_F(Cli, InspectPrintsHeader) {
  toy_model("m");
  const CliResult r = run("inspect " + path("m/model.ckpt"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("dim: 8\n"), std::string::npos);
  const auto n_e = load_triples(path("data/train.tsv"), Split::kTrain).vocab.num_entities();
  EXPECT_NE(r.out.find("entities: " + std::to_string(n_e) + "\n"), std::string::npos);
  EXPECT_NE(r.out.find("epoch: 3\n"), std::string::npos);
}

TEST_F(Cli, GenerateSyntheticIsDisjointAndRepeatable) {
  const std::string cmd = "generate-synthetic --pattern symmetry --entities 100 --seed 1 --out ";
  ASSERT_EQ(run(cmd + path("g1")).code, 0);
  ASSERT_EQ(run(cmd + path("g2")).code, 0);
  const auto train = load_triples(path("g1/train.tsv"), Split::kTrain);
  const auto hold = load_triples(path("g1/holdout.tsv"), Split::kTest, train.vocab);
  std::set<Triple> t(train.set.begin(), train.set.end());
  for (const Triple& h : hold.set) EXPECT_FALSE(t.contains(h));
  for (const char* f : {"train.tsv", "holdout.tsv", "manifest.txt"}) {
    EXPECT_EQ(testing::read_file(path(std::string("g1/") + f)),
              testing::read_file(path(std::string("g2/") + f)));
  }
}

TEST_F(Cli, CompositionNeedsThreeRelations) {
  const CliResult r = run("generate-synthetic --pattern composition --relations 2 --out " +
                    path("c"));
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, FitGroundTruth) {
  const CliResult r = run("fit-ground-truth --entities 5 --relations 2 --random-facts 6 --seed 3");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("dim: 7\n"), std::string::npos);
  // An instance with no translational obstruction must separate.
  if (r.out.find("obstructed: false\n") != std::string::npos) {
    EXPECT_NE(r.out.find("separated: true\n"), std::string::npos);
  }
  EXPECT_NE(r.out.find("separated: "), std::string::npos);
  EXPECT_EQ(run("fit-ground-truth --entities 200 --relations 30 --random-facts 2").code, 1);
}

}  // namespace
}  // namespace mde
