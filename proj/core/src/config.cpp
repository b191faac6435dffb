#include "asc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "asc/error.hpp"

namespace asc::harness {
namespace {

using nlohmann::json;
// Keys keep insertion order so the echo lists parameters in a stable order.
using ordered = nlohmann::ordered_json;

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.contains(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

SimSpec sim_from_json(const json& j) {
  only_keys(j,
            {"class_count", "planted", "segment_count", "patches_per_segment", "p_base", "q", "p_super",
             "segment_spread", "seed"},
            "simulation");
  SimSpec s;
  read(j, "class_count", s.class_count);
  read(j, "planted", s.planted);
  read(j, "segment_count", s.segment_count);
  read(j, "patches_per_segment", s.patches_per_segment);
  read(j, "p_base", s.p_base);
  read(j, "q", s.within_share);
  if (j.contains("p_super")) {
    if (j.at("p_super").is_array()) {
      s.p_super = j.at("p_super").get<std::vector<double>>();
    } else {
      s.p_super = {j.at("p_super").get<double>()};
    }
  }
  read(j, "segment_spread", s.segment_spread);
  read(j, "seed", s.seed);
  return s.normalized();
}

ordered sim_to_json(const SimSpec& s) {
  ordered j;
  j["class_count"] = s.class_count;
  j["planted"] = s.planted;
  j["segment_count"] = s.segment_count;
  j["patches_per_segment"] = s.patches_per_segment;
  j["p_base"] = s.p_base;
  j["q"] = s.within_share;
  j["p_super"] = s.p_super;
  j["segment_spread"] = s.segment_spread;
  j["seed"] = s.seed;
  return j;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

void ExperimentConfig::validate() const {
  punishment.validate();
  if (clustering.k < 1) throw ValidationError("clustering.k must be positive");
  if (clustering.knn && *clustering.knn < 1) throw ValidationError("clustering.knn must be positive");
  if (mode == RunMode::synthetic) {
    if (folds < 1) throw ValidationError("folds must be positive");
    (void)simulation.normalized();
    if (simulation.segment_count < folds) throw ValidationError("need at least one segment per fold");
  } else {
    if (manifest.empty()) throw ValidationError("real mode needs a manifest");
    if (!std::filesystem::exists(resolve(manifest))) {
      throw ValidationError("manifest not found: " + resolve(manifest).string());
    }
    if (classes && !std::filesystem::exists(resolve(*classes))) {
      throw ValidationError("class list not found: " + resolve(*classes).string());
    }
    classifier.train.validate();
    if (!(classifier.holdout_fraction >= 0.0 && classifier.holdout_fraction < 1.0)) {
      throw ValidationError("classifier.holdout_fraction must lie in [0, 1)");
    }
  }
  if (partition && !std::filesystem::exists(resolve(*partition))) {
    throw ValidationError("partition file not found: " + resolve(*partition).string());
  }
}

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  const json j = parse_json(json_text);
  ExperimentConfig c;
  c.base_dir = base_dir;
  try {
    only_keys(j,
              {"mode", "seed", "output_dir", "folds", "simulation", "manifest", "classes", "split", "fold_ids", "cqt",
               "classifier", "write_patches", "clustering", "punishment", "partition"},
              "config");
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      if (m == "synthetic") {
        c.mode = RunMode::synthetic;
      } else if (m == "real") {
        c.mode = RunMode::real;
      } else {
        throw ValidationError("mode must be 'synthetic' or 'real'");
      }
    }
    read(j, "seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    read(j, "folds", c.folds);
    c.simulation = sim_from_json(j.value("simulation", json::object()));
    if (j.contains("manifest")) c.manifest = j.at("manifest").get<std::string>();
    if (j.contains("classes") && !j.at("classes").is_null()) c.classes = j.at("classes").get<std::string>();
    read(j, "split", c.split);
    read(j, "fold_ids", c.fold_ids);
    if (j.contains("cqt")) {
      const auto& q = j.at("cqt");
      only_keys(q, {"f_min", "bins_per_octave", "n_bins", "hop_seconds", "window", "magnitude_floor_db"}, "cqt");
      read(q, "f_min", c.cqt.f_min);
      read(q, "bins_per_octave", c.cqt.bins_per_octave);
      read(q, "n_bins", c.cqt.n_bins);
      read(q, "hop_seconds", c.cqt.hop_seconds);
      if (q.contains("window")) c.cqt.window = dsp::parse_window_kind(q.at("window").get<std::string>());
      read(q, "magnitude_floor_db", c.cqt.magnitude_floor_db);
    }
    if (j.contains("classifier")) {
      const auto& m = j.at("classifier");
      only_keys(m,
                {"grid", "hidden_width", "learning_rate", "batch_size", "max_epochs", "patience",
                 "holdout_fraction"},
                "classifier");
      read(m, "grid", c.classifier.train.grid);
      read(m, "hidden_width", c.classifier.train.hidden_width);
      read(m, "learning_rate", c.classifier.train.learning_rate);
      read(m, "batch_size", c.classifier.train.batch_size);
      read(m, "max_epochs", c.classifier.train.max_epochs);
      read(m, "patience", c.classifier.train.patience);
      read(m, "holdout_fraction", c.classifier.holdout_fraction);
    }
    read(j, "write_patches", c.write_patches);
    if (j.contains("clustering")) {
      const auto& k = j.at("clustering");
      only_keys(k, {"k", "knn", "per_patch"}, "clustering");
      read(k, "k", c.clustering.k);
      if (k.contains("knn")) {
        if (k.at("knn").is_null()) {
          c.clustering.knn.reset();
        } else {
          c.clustering.knn = k.at("knn").get<int>();
        }
      }
      read(k, "per_patch", c.clustering.per_patch);
    }
    if (j.contains("punishment")) {
      const auto& p = j.at("punishment");
      only_keys(p, {"gamma", "threshold"}, "punishment");
      double gamma = p.value("gamma", 0.25);
      std::string threshold = "5/8";
      if (p.contains("threshold")) {
        threshold = p.at("threshold").is_string() ? p.at("threshold").get<std::string>()
                                                  : std::to_string(p.at("threshold").get<double>());
      }
      c.punishment = vote::PunishmentConfig::with_threshold(gamma, threshold);
    }
    if (j.contains("partition") && !j.at("partition").is_null()) c.partition = j.at("partition").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(slurp(path), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

std::string config_to_json(const ExperimentConfig& c) {
  ordered j;
  j["mode"] = c.mode == RunMode::synthetic ? "synthetic" : "real";
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.generic_string();
  j["folds"] = c.folds;
  j["simulation"] = sim_to_json(c.simulation);
  j["manifest"] = c.manifest.generic_string();
  j["classes"] = c.classes ? ordered(c.classes->generic_string()) : ordered(nullptr);
  j["split"] = c.split;
  j["fold_ids"] = c.fold_ids;
  j["cqt"] = {{"f_min", c.cqt.f_min},
              {"bins_per_octave", c.cqt.bins_per_octave},
              {"n_bins", c.cqt.n_bins},
              {"hop_seconds", c.cqt.hop_seconds},
              {"window", dsp::to_string(c.cqt.window)},
              {"magnitude_floor_db", c.cqt.magnitude_floor_db}};
  const auto& t = c.classifier.train;
  j["classifier"] = {{"grid", t.grid},
                     {"hidden_width", t.hidden_width},
                     {"learning_rate", t.learning_rate},
                     {"batch_size", t.batch_size},
                     {"max_epochs", t.max_epochs},
                     {"patience", t.patience},
                     {"holdout_fraction", c.classifier.holdout_fraction}};
  j["write_patches"] = c.write_patches;
  j["clustering"] = {{"k", c.clustering.k},
                     {"knn", c.clustering.knn ? ordered(*c.clustering.knn) : ordered(nullptr)},
                     {"per_patch", c.clustering.per_patch}};
  j["punishment"] = {{"gamma", c.punishment.gamma}, {"threshold", c.punishment.threshold_text()}};
  j["partition"] = c.partition ? ordered(c.partition->generic_string()) : ordered(nullptr);
  return j.dump(2);
}

SimSpec parse_sim_spec(const std::string& json_text) {
  try {
    return sim_from_json(parse_json(json_text));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad simulation spec: ") + e.what());
  }
}

SimSpec load_sim_spec(const std::filesystem::path& path) { return parse_sim_spec(slurp(path)); }

std::string sim_spec_to_json(const SimSpec& spec) { return sim_to_json(spec).dump(2); }

}  // namespace asc::harness
