#include "asc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "asc/audio.hpp"
#include "asc/error.hpp"
#include "asc/text_io.hpp"

namespace asc::data {
namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

ClassCatalog::ClassCatalog(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) throw ValidationError("a class catalog needs at least two classes");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ValidationError("empty class name");
    if (!seen.insert(n).second) throw ValidationError("duplicate class name '" + n + "'");
  }
}

const std::string& ClassCatalog::name(int index) const { return names_.at(static_cast<std::size_t>(index)); }

std::optional<int> ClassCatalog::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<int>(it - names_.begin());
}

ClassCatalog ClassCatalog::load(const std::filesystem::path& path) {
  std::vector<std::string> names;
  for (const auto& raw : io::read_lines(path)) {
    const std::string line = io::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    names.push_back(line);
  }
  return ClassCatalog(std::move(names));
}

void ClassCatalog::save(const std::filesystem::path& path) const {
  std::string text;
  for (const auto& n : names_) text += n + "\n";
  io::write_text(path, text);
}

DatasetManifest::DatasetManifest(ClassCatalog catalog, std::vector<ManifestEntry> entries, int channel_count)
    : catalog_(std::move(catalog)), entries_(std::move(entries)), channel_count_(channel_count) {
  split_count_ = entries_.empty() ? 0 : static_cast<int>(entries_.front().folds.size());
  std::vector<std::set<int>> folds(static_cast<std::size_t>(split_count_));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!by_id_.emplace(e.segment_id, i).second) {
      throw ValidationError("duplicate segment_id '" + e.segment_id + "'");
    }
    if (e.class_index < 0 || e.class_index >= catalog_.size()) {
      throw ValidationError("segment '" + e.segment_id + "' has class index out of range");
    }
    if (static_cast<int>(e.folds.size()) != split_count_) {
      throw ValidationError("segment '" + e.segment_id + "' has a different number of split columns");
    }
    for (int s = 0; s < split_count_; ++s) {
      const int f = e.folds[static_cast<std::size_t>(s)];
      if (f < -1) throw ValidationError("segment '" + e.segment_id + "' has a negative fold id");
      if (f >= 0) folds[static_cast<std::size_t>(s)].insert(f);
    }
  }
  for (int s = 0; s < split_count_; ++s) {
    const auto& ids = folds[static_cast<std::size_t>(s)];
    const int count = static_cast<int>(ids.size());
    if (count > 0 && *ids.rbegin() != count - 1) {
      throw ValidationError("fold ids of split " + std::to_string(s) + " are not contiguous from 0");
    }
    fold_counts_.push_back(count);
  }
}

const ManifestEntry& DatasetManifest::entry(const std::string& segment_id) const {
  const auto it = by_id_.find(segment_id);
  if (it == by_id_.end()) throw ValidationError("unknown segment '" + segment_id + "'");
  return entries_[it->second];
}

int DatasetManifest::fold_count(int split) const {
  if (split < 0 || split >= split_count_) throw ValidationError("split " + std::to_string(split) + " out of range");
  return fold_counts_[static_cast<std::size_t>(split)];
}

DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir,
                               const ManifestOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (io::trim(line).empty()) continue;
    header = io::split_csv(line);
    break;
  }
  if (header.size() < 4 || header[0] != "segment_id" || header[1] != "path" || header[2] != "class_name") {
    throw ValidationError("manifest header must be 'segment_id,path,class_name,split_0_fold[,...]'");
  }
  const std::size_t splits = header.size() - 3;

  std::vector<std::string> inferred;
  std::vector<ManifestEntry> entries;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (io::trim(line).empty() || io::trim(line).front() == '#') continue;
    auto fields = io::split_csv(line);
    if (fields.size() != header.size()) {
      throw ValidationError(at_line(line_no) + "expected " + std::to_string(header.size()) + " columns, got " +
                            std::to_string(fields.size()));
    }
    ManifestEntry e;
    e.segment_id = fields[0];
    if (e.segment_id.empty()) throw ValidationError(at_line(line_no) + "empty segment_id");
    if (!ids.insert(e.segment_id).second) {
      throw ValidationError(at_line(line_no) + "duplicate segment_id '" + e.segment_id + "'");
    }
    e.audio_path = fields[1];
    if (e.audio_path.is_relative()) e.audio_path = base_dir / e.audio_path;
    const std::string& cls = fields[2];
    if (options.catalog) {
      const auto idx = options.catalog->index_of(cls);
      if (!idx) throw ValidationError(at_line(line_no) + "unknown class '" + cls + "'");
      e.class_index = *idx;
    } else {
      auto it = std::find(inferred.begin(), inferred.end(), cls);
      if (cls.empty()) throw ValidationError(at_line(line_no) + "empty class name");
      if (it == inferred.end()) {
        inferred.push_back(cls);
        it = inferred.end() - 1;
      }
      e.class_index = static_cast<int>(it - inferred.begin());
    }
    for (std::size_t s = 0; s < splits; ++s) {
      const std::string& f = fields[3 + s];
      e.folds.push_back(f.empty() ? -1 : static_cast<int>(io::parse_int(f, at_line(line_no) + header[3 + s])));
    }
    entries.push_back(std::move(e));
  }

  int channels = 0;
  if (options.check_audio) {
    for (const auto& e : entries) {
      if (!std::filesystem::exists(e.audio_path)) {
        throw ValidationError("missing audio file for segment '" + e.segment_id + "': " + e.audio_path.string());
      }
      const int n = dsp::probe_wav(e.audio_path).channels;
      if (channels != 0 && n != channels) {
        throw ValidationError("segment '" + e.segment_id + "' has " + std::to_string(n) + " channels, expected " +
                              std::to_string(channels));
      }
      channels = n;
    }
  }
  ClassCatalog catalog = options.catalog ? *options.catalog : ClassCatalog(std::move(inferred));
  return DatasetManifest(std::move(catalog), std::move(entries), channels);
}

DatasetManifest load_manifest(const std::filesystem::path& path, const ManifestOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path(), options);
}

FoldSplit split_fold(const DatasetManifest& manifest, int fold_id, int split) {
  const int folds = manifest.fold_count(split);
  if (fold_id < 0 || fold_id >= folds) {
    throw ValidationError("fold " + std::to_string(fold_id) + " out of range [0, " + std::to_string(folds) + ")");
  }
  FoldSplit out;
  for (const auto& e : manifest.entries()) {
    const int f = e.folds[static_cast<std::size_t>(split)];
    if (f < 0) continue;
    (f == fold_id ? out.test : out.train).push_back(e.segment_id);
  }
  return out;
}

bool SuperCategory::contains(int class_index) const {
  return std::binary_search(members.begin(), members.end(), class_index);
}

int SuperCategory::task_label(int class_index) const {
  const auto it = std::lower_bound(members.begin(), members.end(), class_index);
  if (it != members.end() && *it == class_index) return static_cast<int>(it - members.begin());
  return negative_index();
}

std::optional<int> SuperCategory::member_of(int task_label) const {
  if (task_label < 0 || task_label >= negative_index()) return std::nullopt;
  return members[static_cast<std::size_t>(task_label)];
}

SuperCategoryPartition::SuperCategoryPartition(std::vector<SuperCategory> categories, int class_count)
    : categories_(std::move(categories)), super_of_(static_cast<std::size_t>(std::max(class_count, 0)), -1),
      class_count_(class_count) {
  if (class_count <= 0) throw ValidationError("partition needs a positive class count");
  if (categories_.empty()) throw ValidationError("partition has no categories");
  for (std::size_t j = 0; j < categories_.size(); ++j) {
    auto& cat = categories_[j];
    cat.id = static_cast<int>(j);
    if (cat.name.empty()) cat.name = "super_" + std::to_string(j);
    std::sort(cat.members.begin(), cat.members.end());
    if (cat.members.empty()) throw ValidationError("super category '" + cat.name + "' is empty");
    for (int m : cat.members) {
      if (m < 0 || m >= class_count) {
        throw ValidationError("super category '" + cat.name + "' has class " + std::to_string(m) + " out of range");
      }
      auto& owner = super_of_[static_cast<std::size_t>(m)];
      if (owner != -1) {
        throw ValidationError("class " + std::to_string(m) + " appears in more than one super category");
      }
      owner = cat.id;
    }
  }
  for (int c = 0; c < class_count; ++c) {
    if (super_of_[static_cast<std::size_t>(c)] == -1) {
      throw ValidationError("class " + std::to_string(c) + " is not covered by any super category");
    }
  }
}

SuperCategoryPartition SuperCategoryPartition::from_assignment(std::span<const int> group_of_class) {
  std::vector<int> order;  // group labels by first appearance (= smallest member)
  for (int g : group_of_class) {
    if (std::find(order.begin(), order.end(), g) == order.end()) order.push_back(g);
  }
  std::vector<SuperCategory> cats(order.size());
  for (std::size_t c = 0; c < group_of_class.size(); ++c) {
    const auto pos = std::find(order.begin(), order.end(), group_of_class[c]) - order.begin();
    cats[static_cast<std::size_t>(pos)].members.push_back(static_cast<int>(c));
  }
  return SuperCategoryPartition(std::move(cats), static_cast<int>(group_of_class.size()));
}

bool SuperCategoryPartition::same_grouping(const SuperCategoryPartition& other) const {
  if (class_count_ != other.class_count_ || size() != other.size()) return false;
  std::set<std::vector<int>> mine;
  std::set<std::vector<int>> theirs;
  for (const auto& c : categories_) mine.insert(c.members);
  for (const auto& c : other.categories_) theirs.insert(c.members);
  return mine == theirs;
}

std::string SuperCategoryPartition::to_text(const ClassCatalog& catalog) const {
  if (catalog.size() != class_count_) throw ValidationError("catalog size does not match partition");
  std::ostringstream out;
  for (const auto& cat : categories_) {
    out << cat.name << ":";
    for (std::size_t i = 0; i < cat.members.size(); ++i) {
      out << (i == 0 ? " " : ", ") << catalog.name(cat.members[i]);
    }
    out << "\n";
  }
  return out.str();
}

SuperCategoryPartition SuperCategoryPartition::parse(std::istream& in, const ClassCatalog& catalog) {
  std::vector<SuperCategory> cats;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = io::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto colon = t.find(':');
    if (colon == std::string::npos) throw ValidationError(at_line(line_no) + "expected 'name: class, class, ...'");
    SuperCategory cat;
    cat.name = io::trim(t.substr(0, colon));
    if (cat.name.empty()) throw ValidationError(at_line(line_no) + "empty super category name");
    for (const auto& cls : io::split_csv(t.substr(colon + 1))) {
      if (cls.empty()) continue;
      const auto idx = catalog.index_of(cls);
      if (!idx) throw ValidationError(at_line(line_no) + "unknown class '" + cls + "'");
      cat.members.push_back(*idx);
    }
    cats.push_back(std::move(cat));
  }
  return SuperCategoryPartition(std::move(cats), catalog.size());
}

SuperCategoryPartition SuperCategoryPartition::load(const std::filesystem::path& path, const ClassCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open partition file " + path.string());
  return parse(in, catalog);
}

void SuperCategoryPartition::save(const std::filesystem::path& path, const ClassCatalog& catalog) const {
  io::write_text(path, to_text(catalog));
}

std::vector<int> relabel_for_super(std::span<const int> labels, const SuperCategory& category, int class_count) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (int label : labels) {
    if (label < 0 || label >= class_count) {
      throw ValidationError("label " + std::to_string(label) + " out of range [0, " + std::to_string(class_count) +
                            ")");
    }
    out.push_back(category.task_label(label));
  }
  return out;
}

}  // namespace asc::data
