// Class catalogs, dataset manifests, cross-validation folds and super categories.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace asc::data {

/// Ordered list of scene class names. Index i is class i everywhere.
class ClassCatalog {
 public:
  ClassCatalog() = default;
  /// Throws ValidationError on duplicates or fewer than two classes.
  explicit ClassCatalog(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int index) const;
  std::optional<int> index_of(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }

  /// One class name per line; blank lines and '#' comments ignored.
  static ClassCatalog load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool operator==(const ClassCatalog&) const = default;

 private:
  std::vector<std::string> names_;
};

struct ManifestEntry {
  std::string segment_id;
  std::filesystem::path audio_path;
  int class_index = 0;
  /// Fold id per split; -1 when the segment is not part of that split.
  std::vector<int> folds;
};

struct ManifestOptions {
  /// When set, class names must come from this catalog. Otherwise the catalog
  /// is inferred in order of first appearance.
  std::optional<ClassCatalog> catalog;
  /// Check that every audio file exists and probe its channel count.
  bool check_audio = true;
};

class DatasetManifest {
 public:
  DatasetManifest(ClassCatalog catalog, std::vector<ManifestEntry> entries, int channel_count = 0);

  const ClassCatalog& catalog() const { return catalog_; }
  const std::vector<ManifestEntry>& entries() const { return entries_; }
  const ManifestEntry& entry(const std::string& segment_id) const;

  /// AN
  int segment_count() const { return static_cast<int>(entries_.size()); }
  int class_count() const { return catalog_.size(); }
  int split_count() const { return split_count_; }
  int fold_count(int split = 0) const;
  /// N; 0 when audio was not probed.
  int channel_count() const { return channel_count_; }

 private:
  ClassCatalog catalog_;
  std::vector<ManifestEntry> entries_;
  std::map<std::string, std::size_t> by_id_;
  int split_count_ = 0;
  std::vector<int> fold_counts_;
  int channel_count_ = 0;
};

/// Header `segment_id,path,class_name,split_0_fold[,split_1_fold,...]`.
/// Relative audio paths are resolved against `base_dir`. Errors carry the
/// 1-based line number.
DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir,
                               const ManifestOptions& options = {});
DatasetManifest load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});

struct FoldSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Test = segments whose fold in `split` equals `fold_id`; train = the other
/// segments assigned in that split. Manifest order is preserved.
FoldSplit split_fold(const DatasetManifest& manifest, int fold_id, int split = 0);

/// One coarse category: a non-empty set of original classes (sorted).
struct SuperCategory {
  int id = 0;
  std::vector<int> members;
  std::string name;

  bool contains(int class_index) const;
  /// Dense index of a member class in catalog order, or the negative index.
  int task_label(int class_index) const;
  /// Inverse of task_label on members; nullopt for the negative label.
  std::optional<int> member_of(int task_label) const;
  int negative_index() const { return static_cast<int>(members.size()); }
  /// |AS_j| + 1
  int task_class_count() const { return static_cast<int>(members.size()) + 1; }
};

/// Disjoint cover of {0..CN-1}. Validated on construction.
class SuperCategoryPartition {
 public:
  SuperCategoryPartition(std::vector<SuperCategory> categories, int class_count);

  /// Builds a partition from per-class group labels. Categories are ordered by
  /// their smallest member and named `super_<id>`.
  static SuperCategoryPartition from_assignment(std::span<const int> group_of_class);

  int size() const { return static_cast<int>(categories_.size()); }
  int class_count() const { return class_count_; }
  const SuperCategory& category(int id) const { return categories_.at(static_cast<std::size_t>(id)); }
  const std::vector<SuperCategory>& categories() const { return categories_; }
  int super_of(int class_index) const { return super_of_.at(static_cast<std::size_t>(class_index)); }

  /// True when both group the classes identically (ids and names ignored).
  bool same_grouping(const SuperCategoryPartition& other) const;

  /// Lines of `super_name: class_name, class_name, ...`.
  std::string to_text(const ClassCatalog& catalog) const;
  static SuperCategoryPartition parse(std::istream& in, const ClassCatalog& catalog);
  static SuperCategoryPartition load(const std::filesystem::path& path, const ClassCatalog& catalog);
  void save(const std::filesystem::path& path, const ClassCatalog& catalog) const;

 private:
  std::vector<SuperCategory> categories_;
  std::vector<int> super_of_;
  int class_count_ = 0;
};

/// Members map to dense indices 0..|AS_j|-1 in catalog order; every other
/// class maps to |AS_j|, the negative label.
std::vector<int> relabel_for_super(std::span<const int> labels, const SuperCategory& category,
                                   int class_count);

}  // namespace asc::data
