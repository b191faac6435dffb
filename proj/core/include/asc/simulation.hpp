// Synthetic base and super classifiers with a planted coarse structure.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asc/dataset.hpp"
#include "asc/predictions.hpp"
#include "asc/random.hpp"

namespace asc::harness {

/// Generative model for simulated classifier outputs.
///
/// Each segment draws a patch accuracy a ~ U[p_base - w, p_base + w] with
/// w = min(segment_spread, p_base, 1 - p_base), so the per-patch accuracy is
/// p_base on average while segments differ in difficulty. Each segment also
/// draws one confuser class: with probability q a sibling inside the true
/// class's planted category, otherwise a class outside it. A patch is
/// predicted correctly with probability a and as the confuser otherwise.
///
/// Super classifier j, per patch: if the truth is outside AS_j the negative
/// node wins with probability p_super[j] (else a uniform member); if inside,
/// the true member wins with probability p_super[j] (else a uniform choice
/// among the remaining task outputs).
struct SimSpec {
  int class_count = 15;
  std::vector<std::vector<int>> planted;  // empty -> 6/5/4 contiguous blocks
  int segment_count = 500;
  int patches_per_segment = 10;
  double p_base = 0.75;
  double within_share = 0.8;     // q
  std::vector<double> p_super;   // one per planted category, or one shared value
  double segment_spread = 0.25;
  std::uint64_t seed = 0;

  /// Fills default planted blocks and p_super, then checks ranges. Throws
  /// ValidationError.
  SimSpec normalized() const;
  /// Human-readable notes, e.g. when p_super < p_base.
  std::vector<std::string> warnings() const;

  data::SuperCategoryPartition planted_partition() const;
  data::ClassCatalog catalog() const;
  double super_accuracy(int planted_category) const;
};

struct SimulatedData {
  data::ClassCatalog catalog;
  data::SuperCategoryPartition partition;  // planted
  std::vector<std::string> segment_ids;
  std::vector<int> truths;
  model::PredictionMatrix base;
  std::vector<model::PredictionMatrix> supers;  // one per planted category
};

SimulatedData simulate_classifiers(const SimSpec& spec);

/// Base classifier outputs only (same draws as simulate_classifiers).
model::PredictionMatrix simulate_base(const SimSpec& spec, const std::vector<std::string>& segment_ids,
                                      const std::vector<int>& truths, Rng& rng);

/// Outputs of one super classifier for `category`.
model::PredictionMatrix simulate_super(const std::vector<std::string>& segment_ids, const std::vector<int>& truths,
                                       const data::SuperCategory& category, int patches_per_segment,
                                       double accuracy, Rng& rng);

/// Peaked probability row: 0.7 on `winner`, the rest shared equally.
std::vector<double> peaked_row(int winner, int class_count);

/// "seg_00000" style ids and truths (class i % CN before shuffling).
void draw_segments(const SimSpec& spec, Rng& rng, std::vector<std::string>& ids, std::vector<int>& truths);

}  // namespace asc::harness
