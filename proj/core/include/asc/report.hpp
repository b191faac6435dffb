// Evaluation metrics and the experiment report.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asc/voting.hpp"

namespace asc::harness {

struct Accuracy {
  double overall = 0.0;
  std::vector<double> per_class_recall;  // 0 for classes without support
  std::vector<int> support;
};

/// Throws ValidationError on empty input, length mismatch or out-of-range labels.
Accuracy evaluate(std::span<const int> decisions, std::span<const int> truths, int class_count);

enum class DecisionKind { majority, punishment };

/// Looks up every decision's segment in `truths`; throws on unknown ids.
Accuracy evaluate(std::span<const vote::SegmentDecision> decisions, const std::map<std::string, int>& truths,
                  int class_count, DecisionKind kind);

struct FoldResult {
  int fold = 0;
  int segments = 0;
  double majority_accuracy = 0.0;
  double punishment_accuracy = 0.0;
  std::vector<double> super_accuracy;  // patch-level, per super classifier

  bool operator==(const FoldResult&) const = default;
};

struct Report {
  std::string mode;
  std::vector<std::string> class_names;
  std::vector<FoldResult> folds;
  double mean_majority_accuracy = 0.0;
  double mean_punishment_accuracy = 0.0;
  double base_patch_accuracy = 0.0;
  std::vector<double> majority_recall;
  std::vector<double> punishment_recall;
  std::vector<int> support;
  std::vector<double> mean_super_accuracy;
  std::vector<std::string> super_names;
  std::vector<std::vector<int>> super_members;
  std::vector<std::vector<double>> confusion;
  std::optional<bool> planted_partition_recovered;
  std::string config_echo;  // canonical JSON

  bool operator==(const Report&) const = default;
};

/// Writes report.json plus CSV tables: scene_accuracy.csv (one row per class
/// and an overall row), folds.csv and super_accuracy.csv.
void emit_report(const Report& report, const std::filesystem::path& dir);
std::string report_to_json(const Report& report);
Report parse_report(const std::string& json_text);
Report read_report(const std::filesystem::path& dir);

/// Plain-text summary for terminals.
std::string format_summary(const Report& report);

}  // namespace asc::harness
