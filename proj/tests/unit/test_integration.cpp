#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "asc/audio.hpp"
#include "asc/config.hpp"
#include "asc/dataset.hpp"
#include "asc/pipeline.hpp"
#include "asc/reference_model.hpp"
#include "asc/report.hpp"
#include "asc/text_io.hpp"
#include "asc/voting.hpp"
#include "test_support.hpp"

using namespace asc;
namespace fs = std::filesystem;

namespace {

// Four tone classes, two segments per class and fold, two folds.
void write_corpus(const fs::path& dir) {
  const std::vector<std::pair<std::string, std::vector<double>>> classes{
      {"low", {110.0}}, {"mid", {330.0, 440.0}}, {"high", {900.0}}, {"hum", {60.0, 120.0}}};
  std::ostringstream manifest;
  manifest << "segment_id,path,class_name,split_0_fold\n";
  std::uint64_t seed = 1;
  for (int fold = 0; fold < 2; ++fold) {
    for (const auto& [name, freqs] : classes) {
      for (int k = 0; k < 2; ++k) {
        const std::string id = name + "_" + std::to_string(fold) + "_" + std::to_string(k);
        dsp::AudioSegment seg{id, 4000.0, {dsp::synthesize({freqs, 0.3, 0.05}, 4000.0, 1.0, seed++)}};
        dsp::write_wav(dir / "audio" / (id + ".wav"), seg);
        manifest << id << ",audio/" << id << ".wav," << name << "," << fold << "\n";
      }
    }
  }
  io::write_text(dir / "manifest.csv", manifest.str());
}

std::string real_config_text() {
  return R"({
    "mode": "real",
    "seed": 11,
    "output_dir": "out",
    "manifest": "manifest.csv",
    "classifier": {"grid": 4, "hidden_width": 8, "learning_rate": 0.01, "batch_size": 16, "max_epochs": 25,
                   "patience": 0},
    "clustering": {"k": 2, "knn": 1}
  })";
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(ASC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(RealMode, EndToEndOnSyntheticTones) {
  test::TempDir dir("real");
  write_corpus(dir.path());
  io::write_text(dir / "config.json", real_config_text());
  const auto cfg = harness::load_config(dir / "config.json");
  const auto report = harness::run_pipeline(cfg);

  EXPECT_EQ(report.mode, "real");
  ASSERT_EQ(report.folds.size(), 2u);
  EXPECT_EQ(report.folds[0].segments, 8);
  EXPECT_EQ(report.super_names.size(), 2u);
  EXPECT_GE(report.mean_majority_accuracy, 0.0);
  EXPECT_LE(report.mean_majority_accuracy, 1.0);
  EXPECT_FALSE(report.planted_partition_recovered.has_value());

  const fs::path out = dir / "out";
  EXPECT_TRUE(fs::exists(out / "patches" / "index.csv"));
  EXPECT_TRUE(fs::exists(out / "patches" / "low_0_0_0_9.bin"));
  EXPECT_EQ(io::read_lines(out / "patches" / "index.csv").size(), 1u + 16u * 10u);
  const auto base = model::load_checkpoint(out / "fold0" / "base_model.json");
  const auto sup = model::load_checkpoint(out / "fold0" / "super_0_model.json");
  EXPECT_EQ(base.class_count(), 4);
  EXPECT_EQ(sup.hidden_weights.rows(), base.hidden_weights.rows());
  EXPECT_EQ(sup.hidden_weights.cols(), base.hidden_weights.cols());
  EXPECT_EQ(sup.class_count(), static_cast<int>(report.super_members[0].size()) + 1);
  const auto decisions = vote::load_decisions(out / "fold1" / "decisions.csv");
  EXPECT_EQ(decisions.size(), 8u);

  // Same config, same bytes.
  const auto first = slurp(out / "report.json");
  fs::remove_all(out);
  harness::run_pipeline(cfg);
  EXPECT_EQ(slurp(out / "report.json"), first);
}

TEST(Cli, SimulateClusterVoteReport) {
  test::TempDir dir("cli");
  io::write_text(dir / "spec.json", R"({"segment_count": 60, "seed": 3, "p_super": 0.95})");
  ASSERT_EQ(run_cli("simulate --spec " + (dir / "spec.json").string() + " --out " + (dir / "sim").string(),
                    dir / "log1"),
            0)
      << slurp(dir / "log1");
  for (const char* f : {"classes.txt", "truths.csv", "partition.txt", "base_predictions.csv",
                        "super_0_predictions.csv", "super_2_predictions.csv", "spec.json"}) {
    EXPECT_TRUE(fs::exists(dir / "sim" / f)) << f;
  }

  const fs::path sim = dir / "sim";
  const std::string supers = (sim / "super_0_predictions.csv").string() + " " +
                             (sim / "super_1_predictions.csv").string() + " " +
                             (sim / "super_2_predictions.csv").string();
  const std::string vote_args = "vote --base-preds " + (sim / "base_predictions.csv").string() + " --super-preds " +
                                supers + " --partition " + (sim / "partition.txt").string() + " --classes " +
                                (sim / "classes.txt").string() + " --truths " + (sim / "truths.csv").string() +
                                " --out " + (dir / "decisions.csv").string();
  ASSERT_EQ(run_cli(vote_args, dir / "log2"), 0) << slurp(dir / "log2");
  const auto rows = vote::load_decisions(dir / "decisions.csv");
  EXPECT_EQ(rows.size(), 60u);
  for (const auto& r : rows) EXPECT_GE(r.truth, 0);

  // A confusion file from a run feeds the cluster subcommand.
  io::write_text(dir / "run.json", "{\"seed\": 4, \"output_dir\": \"" + (dir / "run").string() + "\"}");
  ASSERT_EQ(run_cli("run --config " + (dir / "run.json").string(), dir / "log3"), 0) << slurp(dir / "log3");
  ASSERT_EQ(run_cli("cluster --confusion " + (dir / "run" / "confusion.csv").string() +
                        " --k 3 --knn 2 --seed 1 --out " + (dir / "p.txt").string(),
                    dir / "log4"),
            0)
      << slurp(dir / "log4");
  const auto catalog = data::ClassCatalog::load(dir / "run" / "classes.txt");
  EXPECT_EQ(data::SuperCategoryPartition::load(dir / "p.txt", catalog).size(), 3);

  ASSERT_EQ(run_cli("report --in " + (dir / "run").string(), dir / "log5"), 0);
  EXPECT_NE(slurp(dir / "log5").find("mean punishment voting"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  test::TempDir dir("exit");
  EXPECT_EQ(run_cli("", dir / "log"), 1);
  EXPECT_EQ(run_cli("run --config " + (dir / "missing.json").string(), dir / "log"), 1);
  io::write_text(dir / "bad.json", R"({"mode": "synthetic", "bogus": 1})");
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.json").string(), dir / "log"), 1);
  EXPECT_NE(slurp(dir / "log").find("bogus"), std::string::npos);

  io::write_text(dir / "classes.txt", "scene_00\nscene_01\n");
  io::write_text(dir / "p.txt", "a: scene_00\nb: scene_01, ghost\n");
  io::write_text(dir / "stage.json", "{\"output_dir\": \"" + (dir / "o").string() +
                                         "\", \"simulation\": {\"class_count\": 2, \"segment_count\": 8, "
                                         "\"planted\": [[0], [1]]}, \"partition\": \"p.txt\"}");
  EXPECT_EQ(run_cli("run --config " + (dir / "stage.json").string(), dir / "log"), 2);
  EXPECT_NE(slurp(dir / "log").find("cluster"), std::string::npos) << slurp(dir / "log");
}
