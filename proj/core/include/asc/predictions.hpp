// Per-patch probability outputs and their text interchange format.
#pragma once

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace asc::model {

struct PatchKey {
  std::string segment_id;
  int channel = 0;
  int patch_index = 0;

  auto operator<=>(const PatchKey&) const = default;
};

/// Rows of class probabilities, one per patch. Each row is non-negative and
/// sums to one within 1e-9; keys are unique.
class PredictionMatrix {
 public:
  explicit PredictionMatrix(int class_count = 0) : class_count_(class_count) {}

  int class_count() const { return class_count_; }
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }

  const PatchKey& key(std::size_t row) const { return keys_[row]; }
  const std::vector<double>& probs(std::size_t row) const { return probs_[row]; }
  const std::vector<PatchKey>& keys() const { return keys_; }

  /// Appends a row. Throws ValidationError on duplicate key, wrong width,
  /// negative or non-finite entries, or a sum off by more than `tolerance`.
  /// Rows off by more than 1e-9 (but within tolerance) are renormalised.
  void add_row(PatchKey key, std::vector<double> probs, double tolerance = 1e-9);

  std::optional<std::size_t> find(const PatchKey& key) const;

  /// Segment ids in order of first appearance.
  std::vector<std::string> segment_ids() const;

  /// Row indices of one segment ordered by (channel, patch_index).
  std::vector<std::size_t> segment_rows(const std::string& segment_id) const;

  /// Probability rows of one segment in (channel, patch_index) order.
  std::vector<std::vector<double>> segment_probs(const std::string& segment_id) const;

  bool operator==(const PredictionMatrix& other) const;

 private:
  int class_count_;
  std::vector<PatchKey> keys_;
  std::vector<std::vector<double>> probs_;
  std::map<PatchKey, std::size_t> index_;
  std::map<std::string, std::vector<std::size_t>> by_segment_;
  std::vector<std::string> segment_order_;
};

/// Header `segment_id,channel,patch_index,p_0,...,p_{C-1}`.
void write_predictions(std::ostream& out, const PredictionMatrix& matrix);
void export_predictions(const std::filesystem::path& path, const PredictionMatrix& matrix);

/// Parses a prediction file. Rows whose probabilities do not sum to one
/// within 1e-6 are rejected with their line number. When `expected_keys` is
/// given, every listed patch must be present.
PredictionMatrix parse_predictions(std::istream& in, int expected_classes,
                                   const std::vector<PatchKey>* expected_keys = nullptr);
PredictionMatrix import_predictions(const std::filesystem::path& path, int expected_classes,
                                    const std::vector<PatchKey>* expected_keys = nullptr);

/// argmax with the lowest index winning ties.
int argmax(const std::vector<double>& values);

}  // namespace asc::model
