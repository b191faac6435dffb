#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "asc/config.hpp"
#include "asc/error.hpp"
#include "asc/pipeline.hpp"
#include "asc/predictions.hpp"
#include "asc/report.hpp"
#include "asc/simulation.hpp"
#include "asc/text_io.hpp"
#include "asc/voting.hpp"
#include "test_support.hpp"

using namespace asc;
using namespace asc::harness;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig synthetic_config(const std::filesystem::path& out, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.mode = RunMode::synthetic;
  cfg.seed = seed;
  cfg.output_dir = out;
  cfg.simulation.p_super = {0.95};
  return cfg;
}

double base_patch_accuracy(const SimulatedData& d) {
  std::map<std::string, int> truth;
  for (std::size_t i = 0; i < d.segment_ids.size(); ++i) truth[d.segment_ids[i]] = d.truths[i];
  int correct = 0;
  for (std::size_t r = 0; r < d.base.size(); ++r) {
    if (model::argmax(d.base.probs(r)) == truth.at(d.base.key(r).segment_id)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.base.size());
}

}  // namespace

TEST(SimSpec, DefaultsAndValidation) {
  const auto s = SimSpec{}.normalized();
  ASSERT_EQ(s.planted.size(), 3u);
  EXPECT_EQ(s.planted[0].size(), 6u);
  EXPECT_EQ(s.planted[1].size(), 5u);
  EXPECT_EQ(s.planted[2].size(), 4u);
  EXPECT_EQ(s.p_super.size(), 3u);
  SimSpec bad;
  bad.p_base = 1.5;
  EXPECT_THROW(bad.normalized(), ValidationError);
  bad = SimSpec{};
  bad.planted = {{0, 1}, {1, 2}};
  bad.class_count = 3;
  EXPECT_THROW(bad.normalized(), ValidationError);
  SimSpec weak;
  weak.p_super = {0.5};
  EXPECT_FALSE(weak.warnings().empty());
}

TEST(Simulate, Shapes) {
  SimSpec spec;
  spec.segment_count = 40;
  spec.seed = 3;
  const auto d = simulate_classifiers(spec);
  EXPECT_EQ(d.segment_ids.size(), 40u);
  EXPECT_EQ(d.base.size(), 400u);
  EXPECT_EQ(d.base.class_count(), 15);
  ASSERT_EQ(d.supers.size(), 3u);
  EXPECT_EQ(d.supers[0].class_count(), 7);
  EXPECT_EQ(d.supers[2].class_count(), 5);
  EXPECT_EQ(d.supers[1].keys(), d.base.keys());
  EXPECT_EQ(d.catalog.name(0), "scene_00");
}

TEST(Simulate, PerfectBaseGivesPerfectMajority) {
  SimSpec spec;
  spec.p_base = 1.0;
  spec.segment_count = 60;
  const auto d = simulate_classifiers(spec);
  const auto decisions = vote::vote_dataset(d.base, d.supers, d.partition, {});
  for (std::size_t i = 0; i < decisions.size(); ++i) EXPECT_EQ(decisions[i].majority, d.truths[i]);
}

TEST(Simulate, PerfectSupersNeverFlipCorrectDecisions) {
  SimSpec spec;
  spec.p_base = 1.0;
  spec.p_super = {1.0};
  spec.segment_count = 60;
  const auto d = simulate_classifiers(spec);
  for (const auto& dec : vote::vote_dataset(d.base, d.supers, d.partition, {})) {
    EXPECT_EQ(dec.punishment, dec.majority);
  }
}

TEST(Simulate, EmpiricalPatchAccuracyNearPBase) {
  for (double p : {0.5, 0.75, 0.9}) {
    SimSpec spec;
    spec.p_base = p;
    spec.segment_count = 1000;
    spec.seed = 42;
    EXPECT_NEAR(base_patch_accuracy(simulate_classifiers(spec)), p, 0.02) << "p_base " << p;
  }
}

TEST(Simulate, Deterministic) {
  SimSpec spec;
  spec.segment_count = 30;
  spec.seed = 9;
  const auto a = simulate_classifiers(spec);
  const auto b = simulate_classifiers(spec);
  EXPECT_EQ(a.base, b.base);
  EXPECT_EQ(a.truths, b.truths);
  spec.seed = 10;
  EXPECT_FALSE(simulate_classifiers(spec).base == a.base);
}

TEST(Evaluate, Cases) {
  const std::vector<int> truths{0, 1};
  const std::vector<int> all_right{0, 1};
  EXPECT_EQ(evaluate(all_right, truths, 2).overall, 1.0);
  const std::vector<int> decisions{0, 0};
  const auto a = evaluate(decisions, truths, 2);
  EXPECT_EQ(a.overall, 0.5);
  EXPECT_EQ(a.per_class_recall, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(a.support, (std::vector<int>{1, 1}));
  EXPECT_THROW(evaluate({}, {}, 2), ValidationError);
  const std::vector<int> one{0};
  EXPECT_THROW(evaluate(one, truths, 2), ValidationError);
}

TEST(Evaluate, BySegmentId) {
  const std::vector<vote::SegmentDecision> d{{"a", 0, 1, {}}, {"b", 1, 1, {0}}};
  const std::map<std::string, int> truths{{"a", 1}, {"b", 1}};
  EXPECT_EQ(evaluate(d, truths, 2, DecisionKind::majority).overall, 0.5);
  EXPECT_EQ(evaluate(d, truths, 2, DecisionKind::punishment).overall, 1.0);
  const std::map<std::string, int> partial{{"a", 1}};
  EXPECT_THROW(evaluate(d, partial, 2, DecisionKind::majority), ValidationError);
}

TEST(Config, ParseDefaultsAndEcho) {
  const auto cfg = parse_config(R"({"mode": "synthetic", "seed": 5, "folds": 3,
                                     "simulation": {"p_base": 0.7, "p_super": [0.9, 0.95, 0.99]},
                                     "punishment": {"gamma": 0.5, "threshold": "3/4"}})");
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.folds, 3);
  EXPECT_EQ(cfg.simulation.p_base, 0.7);
  EXPECT_EQ(cfg.punishment.gamma, 0.5);
  EXPECT_EQ(cfg.punishment.threshold_num, 3);
  const auto echo = config_to_json(cfg);
  EXPECT_EQ(config_to_json(parse_config(echo)), echo);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("{not json"), ValidationError);
  EXPECT_THROW(parse_config(R"({"mode": "synthetic", "sed": 5})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"mode": "quantum"})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"mode": "synthetic", "folds": 0})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"mode": "real"})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"clustering": {"k": 0}})"), ValidationError);
}

TEST(Config, SimSpecRoundTrip) {
  const auto spec = parse_sim_spec(R"({"class_count": 6, "planted": [[0, 1, 2], [3, 4, 5]], "segment_count": 12,
                                      "p_super": 0.9, "seed": 4})");
  EXPECT_EQ(spec.class_count, 6);
  EXPECT_EQ(spec.planted.size(), 2u);
  const auto text = sim_spec_to_json(spec);
  EXPECT_EQ(sim_spec_to_json(parse_sim_spec(text)), text);
}

TEST(Report, TablesAndRoundTrip) {
  test::TempDir dir("report");
  const auto cfg = synthetic_config(dir / "run", 3);
  const auto report = run_pipeline(cfg);
  EXPECT_EQ(report.mode, "synthetic");
  EXPECT_EQ(report.folds.size(), 4u);
  EXPECT_EQ(report.config_echo, config_to_json(cfg));
  EXPECT_GT(report.mean_majority_accuracy, 0.0);
  EXPECT_GT(report.mean_punishment_accuracy, 0.0);
  EXPECT_LE(report.mean_punishment_accuracy, 1.0);
  ASSERT_TRUE(report.planted_partition_recovered.has_value());

  EXPECT_EQ(read_report(dir / "run"), report);
  EXPECT_EQ(parse_report(report_to_json(report)), report);

  const auto scene_rows = io::read_lines(dir / "run" / "scene_accuracy.csv");
  EXPECT_EQ(scene_rows.size(), 1u + 15u + 1u);  // header, classes, overall
  EXPECT_EQ(io::split_csv(scene_rows.back())[0], "overall");
  EXPECT_EQ(io::read_lines(dir / "run" / "folds.csv").size(), 1u + 4u);

  for (const char* artifact : {"confusion.csv", "partition.txt", "classes.txt", "truths.csv",
                               "fold0/base_predictions.csv", "fold3/decisions.csv", "fold1/super_2_predictions.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "run" / artifact)) << artifact;
  }
}

TEST(Pipeline, RerunIsByteIdentical) {
  test::TempDir dir("rerun");
  const auto cfg = synthetic_config(dir / "run", 17);
  const std::vector<std::string> files{"report.json", "scene_accuracy.csv", "folds.csv", "super_accuracy.csv",
                                       "partition.txt", "confusion.csv", "fold2/decisions.csv"};
  run_pipeline(cfg);
  std::vector<std::string> first;
  for (const auto& f : files) first.push_back(slurp(dir / "run" / f));
  std::filesystem::remove_all(dir / "run");
  run_pipeline(cfg);
  for (std::size_t i = 0; i < files.size(); ++i) EXPECT_EQ(slurp(dir / "run" / files[i]), first[i]) << files[i];
}

TEST(Pipeline, FixedPartitionSkipsClustering) {
  test::TempDir dir("fixed");
  {
    std::ofstream out(dir / "p.txt");
    out << "low: scene_00, scene_01, scene_02, scene_03, scene_04, scene_05, scene_06\n"
           "high: scene_07, scene_08, scene_09, scene_10, scene_11, scene_12, scene_13, scene_14\n";
  }
  auto cfg = synthetic_config(dir / "run", 2);
  cfg.partition = dir / "p.txt";
  const auto r = run_pipeline(cfg);
  EXPECT_EQ(r.super_names, (std::vector<std::string>{"low", "high"}));
  EXPECT_EQ(r.super_members[0].size(), 7u);
}

TEST(Pipeline, StageFailureNamesTheStage) {
  test::TempDir dir("stagefail");
  {
    std::ofstream out(dir / "p.txt");
    out << "a: scene_00, scene_01\nb: not_a_scene\n";
  }
  auto cfg = synthetic_config(dir / "run", 2);
  cfg.partition = dir / "p.txt";
  try {
    run_pipeline(cfg);
    FAIL() << "expected a stage failure";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "cluster");
    EXPECT_NE(std::string(e.what()).find("not_a_scene"), std::string::npos) << e.what();
  }
  cfg.partition = dir / "missing.txt";
  EXPECT_THROW(run_pipeline(cfg), ValidationError);
}

TEST(Pipeline, RecoversPlantedPartition) {
  test::TempDir dir("planted");
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = run_pipeline(synthetic_config(dir / "run", seed));
    recovered += r.planted_partition_recovered.value_or(false) ? 1 : 0;
  }
  EXPECT_GE(recovered, 95);
}
