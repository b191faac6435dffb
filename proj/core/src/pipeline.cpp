#include "asc/pipeline.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "asc/audio.hpp"
#include "asc/clustering.hpp"
#include "asc/error.hpp"
#include "asc/patches.hpp"
#include "asc/random.hpp"
#include "asc/text_io.hpp"

namespace asc::harness {
namespace {

namespace fs = std::filesystem;
using model::PatchKey;
using model::PredictionMatrix;

template <typename F>
auto run_stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string fold_dir(int fold) { return "fold" + std::to_string(fold); }

/// Base and super predictions for the test segments of one fold.
struct FoldPredictions {
  int fold = 0;
  std::vector<std::string> test_ids;
  PredictionMatrix base;
  std::vector<PredictionMatrix> supers;
};

PredictionMatrix subset(const PredictionMatrix& all, const std::vector<std::string>& ids) {
  PredictionMatrix out(all.class_count());
  for (const auto& id : ids) {
    for (std::size_t r : all.segment_rows(id)) out.add_row(all.key(r), all.probs(r));
  }
  return out;
}

cluster::ConfusionMatrix fold_confusion(const PredictionMatrix& base, const std::vector<std::string>& ids,
                                        const std::map<std::string, int>& truth_of, bool per_patch) {
  std::vector<int> truths;
  std::vector<int> predicted;
  for (const auto& id : ids) {
    const int truth = truth_of.at(id);
    const auto rows = base.segment_probs(id);
    if (per_patch) {
      for (const auto& row : rows) {
        truths.push_back(truth);
        predicted.push_back(model::argmax(row));
      }
    } else {
      truths.push_back(truth);
      predicted.push_back(vote::majority_vote(vote::build_voting_vector(id, rows, base.class_count())));
    }
  }
  return cluster::accumulate_confusion(truths, predicted, base.class_count());
}

double patch_accuracy(const PredictionMatrix& preds, const std::map<std::string, int>& truth_of,
                      const data::SuperCategory* category) {
  if (preds.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < preds.size(); ++r) {
    const int truth = truth_of.at(preds.key(r).segment_id);
    const int target = category ? category->task_label(truth) : truth;
    if (model::argmax(preds.probs(r)) == target) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

std::string truths_csv(const std::vector<std::string>& ids, const std::map<std::string, int>& truth_of,
                       const data::ClassCatalog& catalog) {
  std::ostringstream out;
  out << "segment_id,class_name\n";
  for (const auto& id : ids) out << id << "," << catalog.name(truth_of.at(id)) << "\n";
  return out.str();
}

data::SuperCategoryPartition build_partition(const ExperimentConfig& config, const data::ClassCatalog& catalog,
                                             const cluster::ConfusionMatrix& confusion, const fs::path& out) {
  return run_stage("cluster", [&] {
    data::SuperCategoryPartition partition =
        config.partition
            ? data::SuperCategoryPartition::load(config.resolve(*config.partition), catalog)
            : cluster::spectral_cluster(cluster::build_affinity(confusion, config.clustering.knn),
                                        config.clustering.k, derive_seed(config.seed, "cluster"));
    partition.save(out / "partition.txt", catalog);
    return partition;
  });
}

Report assemble(const ExperimentConfig& config, const data::ClassCatalog& catalog,
                const data::SuperCategoryPartition& partition, const cluster::ConfusionMatrix& confusion,
                const std::vector<FoldPredictions>& folds, const std::map<std::string, int>& truth_of,
                const fs::path& out) {
  return run_stage("vote", [&] {
    Report report;
    report.mode = config.mode == RunMode::synthetic ? "synthetic" : "real";
    report.class_names = catalog.names();
    report.mean_super_accuracy.assign(static_cast<std::size_t>(partition.size()), 0.0);
    std::vector<vote::SegmentDecision> pooled;
    std::size_t base_patches = 0;
    double base_hits = 0.0;
    for (const auto& f : folds) {
      const auto decisions = vote::vote_dataset(f.base, f.supers, partition, config.punishment);
      std::vector<int> truths;
      for (const auto& d : decisions) truths.push_back(truth_of.at(d.segment_id));
      vote::save_decisions(out / fold_dir(f.fold) / "decisions.csv", decisions, truths);

      FoldResult fr;
      fr.fold = f.fold;
      fr.segments = static_cast<int>(decisions.size());
      fr.majority_accuracy = evaluate(decisions, truth_of, catalog.size(), DecisionKind::majority).overall;
      fr.punishment_accuracy = evaluate(decisions, truth_of, catalog.size(), DecisionKind::punishment).overall;
      for (int j = 0; j < partition.size(); ++j) {
        const double acc = patch_accuracy(f.supers[static_cast<std::size_t>(j)], truth_of, &partition.category(j));
        fr.super_accuracy.push_back(acc);
        report.mean_super_accuracy[static_cast<std::size_t>(j)] += acc / static_cast<double>(folds.size());
      }
      base_hits += patch_accuracy(f.base, truth_of, nullptr) * static_cast<double>(f.base.size());
      base_patches += f.base.size();
      report.mean_majority_accuracy += fr.majority_accuracy / static_cast<double>(folds.size());
      report.mean_punishment_accuracy += fr.punishment_accuracy / static_cast<double>(folds.size());
      pooled.insert(pooled.end(), decisions.begin(), decisions.end());
      report.folds.push_back(std::move(fr));
    }
    report.base_patch_accuracy = base_patches ? base_hits / static_cast<double>(base_patches) : 0.0;
    const Accuracy maj = evaluate(pooled, truth_of, catalog.size(), DecisionKind::majority);
    const Accuracy pun = evaluate(pooled, truth_of, catalog.size(), DecisionKind::punishment);
    report.majority_recall = maj.per_class_recall;
    report.punishment_recall = pun.per_class_recall;
    report.support = maj.support;
    for (const auto& cat : partition.categories()) {
      report.super_names.push_back(cat.name);
      report.super_members.push_back(cat.members);
    }
    for (Eigen::Index i = 0; i < confusion.counts.rows(); ++i) {
      std::vector<double> row;
      for (Eigen::Index j = 0; j < confusion.counts.cols(); ++j) row.push_back(confusion.counts(i, j));
      report.confusion.push_back(std::move(row));
    }
    report.config_echo = config_to_json(config);
    return report;
  });
}

Report run_synthetic(const ExperimentConfig& config, const fs::path& out) {
  SimSpec spec = config.simulation.normalized();
  spec.seed = derive_seed(config.seed, "simulate");

  const data::ClassCatalog catalog = spec.catalog();
  std::vector<std::string> ids;
  std::vector<int> truths;
  const PredictionMatrix base_all = run_stage("simulate", [&] {
    Rng rng(spec.seed);
    draw_segments(spec, rng, ids, truths);
    return simulate_base(spec, ids, truths, rng);
  });
  std::map<std::string, int> truth_of;
  for (std::size_t i = 0; i < ids.size(); ++i) truth_of[ids[i]] = truths[i];
  catalog.save(out / "classes.txt");
  io::write_text(out / "truths.csv", truths_csv(ids, truth_of, catalog));

  std::vector<FoldPredictions> folds(static_cast<std::size_t>(config.folds));
  for (int f = 0; f < config.folds; ++f) folds[static_cast<std::size_t>(f)].fold = f;
  for (std::size_t i = 0; i < ids.size(); ++i) folds[i % folds.size()].test_ids.push_back(ids[i]);

  std::vector<cluster::ConfusionMatrix> confusions;
  for (auto& f : folds) {
    f.base = subset(base_all, f.test_ids);
    model::export_predictions(out / fold_dir(f.fold) / "base_predictions.csv", f.base);
    confusions.push_back(fold_confusion(f.base, f.test_ids, truth_of, config.clustering.per_patch));
  }
  const auto confusion = run_stage("confusion", [&] { return cluster::average_confusions(confusions); });
  cluster::save_confusion(out / "confusion.csv", confusion, catalog);
  const auto partition = build_partition(config, catalog, confusion, out);

  run_stage("simulate-super", [&] {
    const auto planted = spec.planted_partition();
    Rng rng(derive_seed(config.seed, "simulate-super"));
    for (int j = 0; j < partition.size(); ++j) {
      // Accuracy of the planted category that overlaps this one the most.
      const auto& cat = partition.category(j);
      int best = 0;
      long best_overlap = -1;
      for (int p = 0; p < planted.size(); ++p) {
        const auto& m = planted.category(p).members;
        const long overlap = std::count_if(cat.members.begin(), cat.members.end(),
                                           [&](int c) { return std::binary_search(m.begin(), m.end(), c); });
        if (overlap > best_overlap) {
          best_overlap = overlap;
          best = p;
        }
      }
      const auto all = simulate_super(ids, truths, cat, spec.patches_per_segment, spec.super_accuracy(best), rng);
      for (auto& f : folds) {
        f.supers.push_back(subset(all, f.test_ids));
        model::export_predictions(out / fold_dir(f.fold) / ("super_" + std::to_string(j) + "_predictions.csv"),
                                  f.supers.back());
      }
    }
    return 0;
  });

  Report report = assemble(config, catalog, partition, confusion, folds, truth_of, out);
  report.planted_partition_recovered = partition.same_grouping(spec.planted_partition());
  return report;
}

struct PreparedData {
  std::map<std::string, std::vector<PatchKey>> keys;  // per segment
  std::map<PatchKey, Eigen::VectorXd> features;       // raw pooled
};

model::LabeledFeatures gather(const PreparedData& data, const std::vector<std::string>& ids,
                              const std::map<std::string, int>& truth_of, int feature_count,
                              const data::SuperCategory* category, int class_count) {
  std::size_t rows = 0;
  for (const auto& id : ids) rows += data.keys.at(id).size();
  model::LabeledFeatures out;
  out.features.resize(static_cast<Eigen::Index>(rows), feature_count);
  Eigen::Index r = 0;
  for (const auto& id : ids) {
    const int truth = truth_of.at(id);
    for (const auto& k : data.keys.at(id)) {
      out.features.row(r++) = data.features.at(k).transpose();
      out.labels.push_back(truth);
    }
  }
  if (category) out.labels = data::relabel_for_super(out.labels, *category, class_count);
  return out;
}

PredictionMatrix predict_all(const model::ReferenceModelParams& params, const PreparedData& data,
                             const std::vector<std::string>& ids) {
  PredictionMatrix out(params.class_count());
  for (const auto& id : ids) {
    for (const auto& k : data.keys.at(id)) {
      const Eigen::VectorXd p = model::predict_features(params, data.features.at(k));
      out.add_row(k, std::vector<double>(p.data(), p.data() + p.size()));
    }
  }
  return out;
}

/// Moves a seeded fraction of training segments into a holdout set.
std::pair<std::vector<std::string>, std::vector<std::string>> holdout_split(std::vector<std::string> train,
                                                                            double fraction, std::uint64_t seed) {
  if (fraction <= 0.0) return {std::move(train), {}};
  Rng rng(seed);
  rng.shuffle(train);
  const auto n = static_cast<std::size_t>(fraction * static_cast<double>(train.size()));
  std::vector<std::string> held(train.end() - static_cast<std::ptrdiff_t>(n), train.end());
  train.resize(train.size() - n);
  return {std::move(train), std::move(held)};
}

Report run_real(const ExperimentConfig& config, const fs::path& out) {
  const auto manifest = run_stage("manifest", [&] {
    data::ManifestOptions opts;
    if (config.classes) opts.catalog = data::ClassCatalog::load(config.resolve(*config.classes));
    return data::load_manifest(config.resolve(config.manifest), opts);
  });
  const auto& catalog = manifest.catalog();
  catalog.save(out / "classes.txt");
  std::vector<int> fold_ids = config.fold_ids;
  if (fold_ids.empty()) {
    for (int f = 0; f < manifest.fold_count(config.split); ++f) fold_ids.push_back(f);
  }
  std::map<std::string, int> truth_of;
  for (const auto& e : manifest.entries()) truth_of[e.segment_id] = e.class_index;

  const int grid = config.classifier.train.grid;
  const PreparedData prepared = run_stage("prepare", [&] {
    PreparedData d;
    std::ostringstream index;
    index << "file,segment_id,channel,patch_index,class_name\n";
    for (const auto& e : manifest.entries()) {
      if (e.folds[static_cast<std::size_t>(config.split)] < 0) continue;
      const auto audio = dsp::read_wav(e.audio_path, e.segment_id);
      for (const auto& patch : dsp::prepare_segment(audio, config.cqt)) {
        const PatchKey key{patch.segment_id, patch.channel_index, patch.patch_index};
        d.keys[e.segment_id].push_back(key);
        d.features[key] = model::featurize(patch.values, grid);
        const std::string name = dsp::patch_file_name(patch);
        if (config.write_patches) dsp::write_patch(out / "patches" / name, patch);
        index << name << "," << key.segment_id << "," << key.channel << "," << key.patch_index << ","
              << catalog.name(e.class_index) << "\n";
      }
    }
    io::write_text(out / "patches" / "index.csv", index.str());
    return d;
  });

  struct FoldModels {
    std::vector<std::string> train;
    std::vector<std::string> holdout;
    model::ReferenceModelParams base;
  };
  std::vector<FoldPredictions> folds;
  std::vector<FoldModels> models;
  std::vector<cluster::ConfusionMatrix> confusions;
  for (int f : fold_ids) {
    const std::string stage = "train-base/" + fold_dir(f);
    run_stage(stage, [&] {
      const auto split = data::split_fold(manifest, f, config.split);
      FoldModels m;
      std::tie(m.train, m.holdout) =
          holdout_split(split.train, config.classifier.holdout_fraction, derive_seed(config.seed, stage + "/holdout"));
      model::TrainConfig tc = config.classifier.train;
      tc.seed = derive_seed(config.seed, stage);
      const auto train_set = gather(prepared, m.train, truth_of, grid * grid, nullptr, catalog.size());
      const auto holdout_set = gather(prepared, m.holdout, truth_of, grid * grid, nullptr, catalog.size());
      m.base = model::train(train_set, catalog.size(), tc, nullptr, m.holdout.empty() ? nullptr : &holdout_set).params;
      model::save_checkpoint(out / fold_dir(f) / "base_model.json", m.base);

      FoldPredictions fp;
      fp.fold = f;
      fp.test_ids = split.test;
      fp.base = predict_all(m.base, prepared, split.test);
      model::export_predictions(out / fold_dir(f) / "base_predictions.csv", fp.base);
      confusions.push_back(fold_confusion(fp.base, fp.test_ids, truth_of, config.clustering.per_patch));
      folds.push_back(std::move(fp));
      models.push_back(std::move(m));
      return 0;
    });
  }
  const auto confusion = run_stage("confusion", [&] { return cluster::average_confusions(confusions); });
  cluster::save_confusion(out / "confusion.csv", confusion, catalog);
  const auto partition = build_partition(config, catalog, confusion, out);

  for (std::size_t i = 0; i < folds.size(); ++i) {
    auto& fp = folds[i];
    const auto& m = models[i];
    for (int j = 0; j < partition.size(); ++j) {
      const std::string stage = "train-super/" + fold_dir(fp.fold) + "/super_" + std::to_string(j);
      run_stage(stage, [&] {
        const auto& cat = partition.category(j);
        model::TrainConfig tc = config.classifier.train;
        tc.seed = derive_seed(config.seed, stage);
        const auto init = model::init_super_from_base(m.base, cat.task_class_count(), tc.seed);
        const auto train_set = gather(prepared, m.train, truth_of, grid * grid, &cat, catalog.size());
        const auto holdout_set = gather(prepared, m.holdout, truth_of, grid * grid, &cat, catalog.size());
        const auto params = model::train(train_set, cat.task_class_count(), tc, &init,
                                         m.holdout.empty() ? nullptr : &holdout_set)
                                .params;
        model::save_checkpoint(out / fold_dir(fp.fold) / ("super_" + std::to_string(j) + "_model.json"), params);
        fp.supers.push_back(predict_all(params, prepared, fp.test_ids));
        model::export_predictions(out / fold_dir(fp.fold) / ("super_" + std::to_string(j) + "_predictions.csv"),
                                  fp.supers.back());
        return 0;
      });
    }
  }
  return assemble(config, catalog, partition, confusion, folds, truth_of, out);
}

}  // namespace

Report run_pipeline(const ExperimentConfig& config) {
  config.validate();
  const fs::path out = config.resolve(config.output_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw StageError("setup", "cannot create output directory " + out.string() + ": " + ec.message());
  Report report = config.mode == RunMode::synthetic ? run_synthetic(config, out) : run_real(config, out);
  run_stage("report", [&] {
    emit_report(report, out);
    return 0;
  });
  return report;
}

}  // namespace asc::harness
