// asc: command-line front end for the coarse-to-fine scene classification toolkit.
//
//   asc prepare  --manifest <path> --out <dir> [--fmin --bins-per-octave --nbins --hop]
//   asc cluster  --confusion <path> --k 3 --knn 2 --seed <n> --out <partition file>
//   asc vote     --base-preds <file> --super-preds <file>... --partition <file> --classes <file> --out <file>
//   asc run      --config <file>
//   asc simulate --spec <file> --out <dir>
//   asc report   --in <dir>
//
// Exit codes: 0 success, 1 validation error, 2 stage failure.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asc/audio.hpp"
#include "asc/clustering.hpp"
#include "asc/config.hpp"
#include "asc/dataset.hpp"
#include "asc/error.hpp"
#include "asc/patches.hpp"
#include "asc/pipeline.hpp"
#include "asc/predictions.hpp"
#include "asc/report.hpp"
#include "asc/simulation.hpp"
#include "asc/text_io.hpp"
#include "asc/voting.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitStage = 2;

struct PrepareArgs {
  fs::path manifest;
  fs::path out;
  std::optional<fs::path> classes;
  asc::dsp::CqtParams cqt;
};

int prepare(const PrepareArgs& args) {
  asc::data::ManifestOptions opts;
  if (args.classes) opts.catalog = asc::data::ClassCatalog::load(*args.classes);
  const auto manifest = asc::data::load_manifest(args.manifest, opts);
  std::ostringstream index;
  index << "file,segment_id,channel,patch_index,class_name\n";
  std::size_t count = 0;
  for (const auto& e : manifest.entries()) {
    const auto audio = asc::dsp::read_wav(e.audio_path, e.segment_id);
    for (const auto& patch : asc::dsp::prepare_segment(audio, args.cqt)) {
      const auto name = asc::dsp::patch_file_name(patch);
      asc::dsp::write_patch(args.out / name, patch);
      index << name << "," << patch.segment_id << "," << patch.channel_index << "," << patch.patch_index << ","
            << manifest.catalog().name(e.class_index) << "\n";
      ++count;
    }
  }
  asc::io::write_text(args.out / "index.csv", index.str());
  manifest.catalog().save(args.out / "classes.txt");
  std::cout << "wrote " << count << " patches for " << manifest.segment_count() << " segments to "
            << args.out.string() << "\n";
  return 0;
}

struct ClusterArgs {
  fs::path confusion;
  fs::path out;
  int k = 3;
  int knn = 2;
  std::uint64_t seed = 0;
};

int cluster(const ClusterArgs& args) {
  const auto [confusion, catalog] = asc::cluster::load_confusion(args.confusion);
  std::optional<int> knn;
  if (args.knn > 0) knn = args.knn;
  const auto partition =
      asc::cluster::spectral_cluster(asc::cluster::build_affinity(confusion, knn), args.k, args.seed);
  partition.save(args.out, catalog);
  std::cout << partition.to_text(catalog);
  return 0;
}

struct VoteArgs {
  fs::path base_preds;
  std::vector<fs::path> super_preds;
  fs::path partition;
  fs::path classes;
  std::optional<fs::path> truths;
  double gamma = 0.25;
  std::string threshold = "5/8";
  fs::path out;
};

std::map<std::string, int> load_truths(const fs::path& path, const asc::data::ClassCatalog& catalog) {
  std::map<std::string, int> truths;
  const auto lines = asc::io::read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (asc::io::trim(lines[i]).empty()) continue;
    const auto f = asc::io::split_csv(lines[i]);
    if (f.size() < 2) throw asc::ValidationError(path.string() + " line " + std::to_string(i + 1) + ": need 2 columns");
    const auto idx = catalog.index_of(f[1]);
    if (!idx) throw asc::ValidationError(path.string() + " line " + std::to_string(i + 1) + ": unknown class '" + f[1] + "'");
    truths[f[0]] = *idx;
  }
  return truths;
}

int vote(const VoteArgs& args) {
  const auto catalog = asc::data::ClassCatalog::load(args.classes);
  const auto partition = asc::data::SuperCategoryPartition::load(args.partition, catalog);
  if (static_cast<int>(args.super_preds.size()) != partition.size()) {
    throw asc::ValidationError("partition has " + std::to_string(partition.size()) + " super categories but " +
                               std::to_string(args.super_preds.size()) + " super prediction files were given");
  }
  const auto base = asc::model::import_predictions(args.base_preds, catalog.size());
  std::vector<asc::model::PredictionMatrix> supers;
  for (int j = 0; j < partition.size(); ++j) {
    supers.push_back(asc::model::import_predictions(args.super_preds[static_cast<std::size_t>(j)],
                                                    partition.category(j).task_class_count(), &base.keys()));
  }
  const auto cfg = asc::vote::PunishmentConfig::with_threshold(args.gamma, args.threshold);
  const auto decisions = asc::vote::vote_dataset(base, supers, partition, cfg);
  std::vector<int> truths;
  if (args.truths) {
    const auto truth_of = load_truths(*args.truths, catalog);
    for (const auto& d : decisions) {
      const auto it = truth_of.find(d.segment_id);
      truths.push_back(it == truth_of.end() ? -1 : it->second);
    }
  }
  asc::vote::save_decisions(args.out, decisions, truths);

  std::vector<int> maj;
  std::vector<int> pun;
  std::vector<int> known;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] < 0) continue;
    maj.push_back(decisions[i].majority);
    pun.push_back(decisions[i].punishment);
    known.push_back(truths[i]);
  }
  std::cout << "voted " << decisions.size() << " segments";
  if (!known.empty()) {
    std::cout << ": majority " << asc::harness::evaluate(maj, known, catalog.size()).overall << ", punishment "
              << asc::harness::evaluate(pun, known, catalog.size()).overall;
  }
  std::cout << "\n";
  return 0;
}

int run(const fs::path& config_path) {
  const auto config = asc::harness::load_config(config_path);
  if (config.mode == asc::harness::RunMode::synthetic) {
    for (const auto& w : config.simulation.warnings()) std::cerr << "warning: " << w << "\n";
  }
  const auto report = asc::harness::run_pipeline(config);
  std::cout << asc::harness::format_summary(report);
  return 0;
}

int simulate(const fs::path& spec_path, const fs::path& out) {
  const auto spec = asc::harness::load_sim_spec(spec_path);
  for (const auto& w : spec.warnings()) std::cerr << "warning: " << w << "\n";
  const auto data = asc::harness::simulate_classifiers(spec);
  data.catalog.save(out / "classes.txt");
  data.partition.save(out / "partition.txt", data.catalog);
  std::ostringstream truths;
  truths << "segment_id,class_name\n";
  for (std::size_t i = 0; i < data.segment_ids.size(); ++i) {
    truths << data.segment_ids[i] << "," << data.catalog.name(data.truths[i]) << "\n";
  }
  asc::io::write_text(out / "truths.csv", truths.str());
  asc::model::export_predictions(out / "base_predictions.csv", data.base);
  for (std::size_t j = 0; j < data.supers.size(); ++j) {
    asc::model::export_predictions(out / ("super_" + std::to_string(j) + "_predictions.csv"), data.supers[j]);
  }
  asc::io::write_text(out / "spec.json", asc::harness::sim_spec_to_json(spec.normalized()) + "\n");
  std::cout << "simulated " << data.segment_ids.size() << " segments x " << spec.patches_per_segment
            << " patches into " << out.string() << "\n";
  return 0;
}

int report(const fs::path& dir) {
  std::cout << asc::harness::format_summary(asc::harness::read_report(dir));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-to-fine acoustic scene classification with punishment voting"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* prep_cmd = app.add_subcommand("prepare", "CQT spectrogram patches for every manifest segment");
  prep_cmd->add_option("--manifest", prep.manifest, "dataset manifest")->required();
  prep_cmd->add_option("--out", prep.out, "output directory")->required();
  prep_cmd->add_option("--classes", prep.classes, "class list, one name per line");
  prep_cmd->add_option("--fmin", prep.cqt.f_min, "lowest CQT centre frequency (Hz)");
  prep_cmd->add_option("--bins-per-octave", prep.cqt.bins_per_octave, "CQT bins per octave");
  prep_cmd->add_option("--nbins", prep.cqt.n_bins, "total CQT bins");
  prep_cmd->add_option("--hop", prep.cqt.hop_seconds, "frame hop in seconds");

  ClusterArgs clu;
  auto* clu_cmd = app.add_subcommand("cluster", "build super categories from a confusion matrix");
  clu_cmd->add_option("--confusion", clu.confusion, "confusion matrix file")->required();
  clu_cmd->add_option("--k", clu.k, "number of super categories")->capture_default_str();
  clu_cmd->add_option("--knn", clu.knn, "KNN sparsification (0 keeps the dense graph)")->capture_default_str();
  clu_cmd->add_option("--seed", clu.seed, "k-means seed")->capture_default_str();
  clu_cmd->add_option("--out", clu.out, "partition file to write")->required();

  VoteArgs vot;
  auto* vote_cmd = app.add_subcommand("vote", "majority and punishment voting over prediction files");
  vote_cmd->add_option("--base-preds", vot.base_preds, "base classifier predictions")->required();
  vote_cmd->add_option("--super-preds", vot.super_preds, "one prediction file per super category, in order")
      ->required();
  vote_cmd->add_option("--partition", vot.partition, "partition file")->required();
  vote_cmd->add_option("--classes", vot.classes, "class list, one name per line")->required();
  vote_cmd->add_option("--truths", vot.truths, "segment_id,class_name file for the truth column");
  vote_cmd->add_option("--gamma", vot.gamma, "punishment factor")->capture_default_str();
  vote_cmd->add_option("--threshold", vot.threshold, "flag threshold as a fraction of PN")->capture_default_str();
  vote_cmd->add_option("--out", vot.out, "decisions file to write")->required();

  fs::path config_path;
  auto* run_cmd = app.add_subcommand("run", "run the full experiment described by a config file");
  run_cmd->add_option("--config", config_path, "JSON experiment config")->required();

  fs::path spec_path;
  fs::path sim_out;
  auto* sim_cmd = app.add_subcommand("simulate", "write simulated classifier outputs");
  sim_cmd->add_option("--spec", spec_path, "JSON simulation spec")->required();
  sim_cmd->add_option("--out", sim_out, "output directory")->required();

  fs::path report_dir;
  auto* rep_cmd = app.add_subcommand("report", "summarise a finished run");
  rep_cmd->add_option("--in", report_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*prep_cmd) return prepare(prep);
    if (*clu_cmd) return cluster(clu);
    if (*vote_cmd) return vote(vot);
    if (*run_cmd) return run(config_path);
    if (*sim_cmd) return simulate(spec_path, sim_out);
    if (*rep_cmd) return report(report_dir);
  } catch (const asc::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const asc::StageError& e) {
    std::cerr << "stage failure in " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitValidation;
}
