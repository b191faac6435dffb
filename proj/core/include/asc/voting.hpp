// Majority voting and punishment voting over per-patch predictions.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "asc/dataset.hpp"
#include "asc/predictions.hpp"

namespace asc::vote {

/// Per-segment tally over CN classes. Integer-valued and summing to PN until
/// punished.
struct VotingVector {
  std::string segment_id;
  std::vector<double> votes;
  int patch_count = 0;
};

/// nf_{j,p}: 1 when super classifier j put its maximum on the negative node
/// for patch p.
struct NegativeFlagVector {
  std::string segment_id;
  int super_id = 0;
  std::vector<std::uint8_t> flags;

  int count() const;
};

struct PunishmentConfig {
  double gamma = 0.25;
  int threshold_num = 5;
  int threshold_den = 8;

  void validate() const;
  /// Strict comparison count > PN * num / den, evaluated in integers.
  bool triggers(int flag_count, int patch_count) const;
  /// "5/8", "0.625" or "1".
  static PunishmentConfig with_threshold(double gamma, const std::string& threshold);
  std::string threshold_text() const;
};

VotingVector build_voting_vector(const std::string& segment_id, std::span<const std::vector<double>> rows,
                                 int class_count);

NegativeFlagVector build_negative_flags(const std::string& segment_id, std::span<const std::vector<double>> rows,
                                        int super_id, int task_class_count);

/// argmax of the votes, lowest index on ties.
int majority_vote(const VotingVector& vv);

struct PunishmentOutcome {
  int decision = 0;
  std::vector<double> votes;        // punished copy
  std::vector<int> punished_supers; // ascending
};

/// For each super category j in ascending order: if its flag count exceeds
/// the threshold, multiply the votes of its member classes by gamma. The
/// input vector is left untouched.
PunishmentOutcome punish(const VotingVector& vv, std::span<const NegativeFlagVector> flags,
                         const data::SuperCategoryPartition& partition, const PunishmentConfig& config);

int punishment_vote(const VotingVector& vv, std::span<const NegativeFlagVector> flags,
                    const data::SuperCategoryPartition& partition, const PunishmentConfig& config);

struct SegmentDecision {
  std::string segment_id;
  int majority = 0;
  int punishment = 0;
  std::vector<int> punished_supers;
};

/// Both decisions for every segment of `base`, in order of first appearance.
/// `supers[j]` must hold the predictions of the classifier for category j.
std::vector<SegmentDecision> vote_dataset(const model::PredictionMatrix& base,
                                          std::span<const model::PredictionMatrix> supers,
                                          const data::SuperCategoryPartition& partition,
                                          const PunishmentConfig& config);

/// `segment_id,truth,majority_decision,punishment_decision,punished_flags`;
/// truth is -1 when unknown, punished_flags a ';'-separated list of super ids.
void save_decisions(const std::filesystem::path& path, std::span<const SegmentDecision> decisions,
                    std::span<const int> truths);

struct DecisionRow {
  SegmentDecision decision;
  int truth = -1;
};
std::vector<DecisionRow> load_decisions(const std::filesystem::path& path);

}  // namespace asc::vote
