#include "asc/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "asc/error.hpp"
#include "asc/text_io.hpp"

namespace asc::harness {
namespace {

using ordered = nlohmann::ordered_json;

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%6.2f%%", 100.0 * v);
  return buf;
}

}  // namespace

Accuracy evaluate(std::span<const int> decisions, std::span<const int> truths, int class_count) {
  if (decisions.empty()) throw ValidationError("cannot evaluate an empty decision set");
  if (decisions.size() != truths.size()) throw ValidationError("decisions and truths differ in length");
  Accuracy acc;
  acc.per_class_recall.assign(static_cast<std::size_t>(class_count), 0.0);
  acc.support.assign(static_cast<std::size_t>(class_count), 0);
  std::vector<int> hits(static_cast<std::size_t>(class_count), 0);
  int correct = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const int t = truths[i];
    const int d = decisions[i];
    if (t < 0 || t >= class_count || d < 0 || d >= class_count) {
      throw ValidationError("label out of range at position " + std::to_string(i));
    }
    ++acc.support[static_cast<std::size_t>(t)];
    if (t == d) {
      ++correct;
      ++hits[static_cast<std::size_t>(t)];
    }
  }
  acc.overall = static_cast<double>(correct) / static_cast<double>(decisions.size());
  for (std::size_t c = 0; c < hits.size(); ++c) {
    if (acc.support[c] > 0) acc.per_class_recall[c] = static_cast<double>(hits[c]) / acc.support[c];
  }
  return acc;
}

Accuracy evaluate(std::span<const vote::SegmentDecision> decisions, const std::map<std::string, int>& truths,
                  int class_count, DecisionKind kind) {
  std::vector<int> d;
  std::vector<int> t;
  for (const auto& dec : decisions) {
    const auto it = truths.find(dec.segment_id);
    if (it == truths.end()) throw ValidationError("no ground truth for segment '" + dec.segment_id + "'");
    d.push_back(kind == DecisionKind::majority ? dec.majority : dec.punishment);
    t.push_back(it->second);
  }
  return evaluate(d, t, class_count);
}

std::string report_to_json(const Report& r) {
  ordered j;
  j["mode"] = r.mode;
  j["class_names"] = r.class_names;
  ordered folds = ordered::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"fold", f.fold},
                     {"segments", f.segments},
                     {"majority_accuracy", f.majority_accuracy},
                     {"punishment_accuracy", f.punishment_accuracy},
                     {"super_accuracy", f.super_accuracy}});
  }
  j["folds"] = folds;
  j["mean_majority_accuracy"] = r.mean_majority_accuracy;
  j["mean_punishment_accuracy"] = r.mean_punishment_accuracy;
  j["base_patch_accuracy"] = r.base_patch_accuracy;
  j["majority_recall"] = r.majority_recall;
  j["punishment_recall"] = r.punishment_recall;
  j["support"] = r.support;
  j["mean_super_accuracy"] = r.mean_super_accuracy;
  j["super_names"] = r.super_names;
  j["super_members"] = r.super_members;
  j["confusion"] = r.confusion;
  j["planted_partition_recovered"] =
      r.planted_partition_recovered ? ordered(*r.planted_partition_recovered) : ordered(nullptr);
  j["config"] = ordered::parse(r.config_echo.empty() ? "{}" : r.config_echo);
  return j.dump(2) + "\n";
}

Report parse_report(const std::string& text) {
  try {
    const auto j = ordered::parse(text);
    Report r;
    r.mode = j.at("mode").get<std::string>();
    r.class_names = j.at("class_names").get<std::vector<std::string>>();
    for (const auto& f : j.at("folds")) {
      r.folds.push_back({f.at("fold").get<int>(), f.at("segments").get<int>(), f.at("majority_accuracy").get<double>(),
                         f.at("punishment_accuracy").get<double>(),
                         f.at("super_accuracy").get<std::vector<double>>()});
    }
    r.mean_majority_accuracy = j.at("mean_majority_accuracy").get<double>();
    r.mean_punishment_accuracy = j.at("mean_punishment_accuracy").get<double>();
    r.base_patch_accuracy = j.at("base_patch_accuracy").get<double>();
    r.majority_recall = j.at("majority_recall").get<std::vector<double>>();
    r.punishment_recall = j.at("punishment_recall").get<std::vector<double>>();
    r.support = j.at("support").get<std::vector<int>>();
    r.mean_super_accuracy = j.at("mean_super_accuracy").get<std::vector<double>>();
    r.super_names = j.at("super_names").get<std::vector<std::string>>();
    r.super_members = j.at("super_members").get<std::vector<std::vector<int>>>();
    r.confusion = j.at("confusion").get<std::vector<std::vector<double>>>();
    if (!j.at("planted_partition_recovered").is_null()) {
      r.planted_partition_recovered = j.at("planted_partition_recovered").get<bool>();
    }
    r.config_echo = j.at("config").dump(2);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
}

Report read_report(const std::filesystem::path& dir) {
  std::ifstream in(dir / "report.json");
  if (!in) throw ValidationError("no report.json in " + dir.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_report(ss.str());
}

void emit_report(const Report& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create report directory " + dir.string() + ": " + ec.message());
  io::write_text(dir / "report.json", report_to_json(r));

  std::ostringstream scenes;
  scenes << "scene,support,majority_accuracy,punishment_accuracy\n";
  for (std::size_t c = 0; c < r.class_names.size(); ++c) {
    scenes << r.class_names[c] << "," << (c < r.support.size() ? r.support[c] : 0) << ","
           << io::format_double(c < r.majority_recall.size() ? r.majority_recall[c] : 0.0) << ","
           << io::format_double(c < r.punishment_recall.size() ? r.punishment_recall[c] : 0.0) << "\n";
  }
  int total = 0;
  for (int s : r.support) total += s;
  scenes << "overall," << total << "," << io::format_double(r.mean_majority_accuracy) << ","
         << io::format_double(r.mean_punishment_accuracy) << "\n";
  io::write_text(dir / "scene_accuracy.csv", scenes.str());

  std::ostringstream folds;
  folds << "fold,segments,majority_accuracy,punishment_accuracy\n";
  for (const auto& f : r.folds) {
    folds << f.fold << "," << f.segments << "," << io::format_double(f.majority_accuracy) << ","
          << io::format_double(f.punishment_accuracy) << "\n";
  }
  io::write_text(dir / "folds.csv", folds.str());

  std::ostringstream supers;
  supers << "super,members,accuracy\n";
  for (std::size_t j = 0; j < r.super_names.size(); ++j) {
    supers << r.super_names[j] << ",";
    if (j < r.super_members.size()) {
      for (std::size_t m = 0; m < r.super_members[j].size(); ++m) {
        const int cls = r.super_members[j][m];
        supers << (m ? ";" : "")
               << (cls >= 0 && static_cast<std::size_t>(cls) < r.class_names.size() ? r.class_names[static_cast<std::size_t>(cls)]
                                                                                    : std::to_string(cls));
      }
    }
    supers << "," << io::format_double(j < r.mean_super_accuracy.size() ? r.mean_super_accuracy[j] : 0.0) << "\n";
  }
  io::write_text(dir / "super_accuracy.csv", supers.str());
}

std::string format_summary(const Report& r) {
  std::ostringstream out;
  out << "mode: " << r.mode << ", folds: " << r.folds.size() << ", classes: " << r.class_names.size() << "\n";
  for (const auto& f : r.folds) {
    out << "  fold " << f.fold << " (" << f.segments << " segments): majority " << percent(f.majority_accuracy)
        << "  punishment " << percent(f.punishment_accuracy) << "\n";
  }
  out << "mean majority voting:   " << percent(r.mean_majority_accuracy) << "\n";
  out << "mean punishment voting: " << percent(r.mean_punishment_accuracy) << "\n";
  out << "base patch accuracy:    " << percent(r.base_patch_accuracy) << "\n";
  for (std::size_t j = 0; j < r.super_names.size(); ++j) {
    out << "super " << r.super_names[j] << " accuracy: "
        << percent(j < r.mean_super_accuracy.size() ? r.mean_super_accuracy[j] : 0.0) << "\n";
  }
  if (r.planted_partition_recovered) {
    out << "planted partition recovered: " << (*r.planted_partition_recovered ? "yes" : "no") << "\n";
  }
  out << "per-scene accuracy (majority -> punishment):\n";
  for (std::size_t c = 0; c < r.class_names.size(); ++c) {
    out << "  " << r.class_names[c] << ": " << percent(r.majority_recall[c]) << " -> "
        << percent(r.punishment_recall[c]) << "\n";
  }
  return out.str();
}

}  // namespace asc::harness
