#include "asc/predictions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "asc/error.hpp"
#include "asc/text_io.hpp"

namespace asc::model {

int argmax(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("argmax of an empty vector");
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

void PredictionMatrix::add_row(PatchKey key, std::vector<double> probs, double tolerance) {
  if (static_cast<int>(probs.size()) != class_count_) {
    throw ValidationError("row for segment '" + key.segment_id + "' has " + std::to_string(probs.size()) +
                          " probabilities, expected " + std::to_string(class_count_));
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("row for segment '" + key.segment_id + "' has a negative or non-finite probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw ValidationError("row for segment '" + key.segment_id + "' sums to " + io::format_double(sum));
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    for (double& p : probs) p /= sum;
  }
  if (index_.contains(key)) {
    throw ValidationError("duplicate patch key (" + key.segment_id + ", " + std::to_string(key.channel) + ", " +
                          std::to_string(key.patch_index) + ")");
  }
  const std::size_t row = keys_.size();
  index_.emplace(key, row);
  auto [it, inserted] = by_segment_.try_emplace(key.segment_id);
  if (inserted) segment_order_.push_back(key.segment_id);
  it->second.push_back(row);
  keys_.push_back(std::move(key));
  probs_.push_back(std::move(probs));
}

std::optional<std::size_t> PredictionMatrix::find(const PatchKey& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> PredictionMatrix::segment_ids() const { return segment_order_; }

std::vector<std::size_t> PredictionMatrix::segment_rows(const std::string& segment_id) const {
  const auto it = by_segment_.find(segment_id);
  if (it == by_segment_.end()) return {};
  std::vector<std::size_t> rows = it->second;
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return keys_[a] < keys_[b]; });
  return rows;
}

std::vector<std::vector<double>> PredictionMatrix::segment_probs(const std::string& segment_id) const {
  std::vector<std::vector<double>> out;
  for (std::size_t r : segment_rows(segment_id)) out.push_back(probs_[r]);
  return out;
}

bool PredictionMatrix::operator==(const PredictionMatrix& other) const {
  return class_count_ == other.class_count_ && keys_ == other.keys_ && probs_ == other.probs_;
}

void write_predictions(std::ostream& out, const PredictionMatrix& matrix) {
  out << "segment_id,channel,patch_index";
  for (int c = 0; c < matrix.class_count(); ++c) out << ",p_" << c;
  out << "\n";
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    const auto& k = matrix.key(r);
    out << k.segment_id << "," << k.channel << "," << k.patch_index;
    for (double p : matrix.probs(r)) out << "," << io::format_double(p);
    out << "\n";
  }
}

void export_predictions(const std::filesystem::path& path, const PredictionMatrix& matrix) {
  std::ostringstream out;
  write_predictions(out, matrix);
  io::write_text(path, out.str());
}

PredictionMatrix parse_predictions(std::istream& in, int expected_classes, const std::vector<PatchKey>* expected_keys) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!io::trim(line).empty()) {
      header = io::split_csv(line);
      break;
    }
  }
  if (header.size() < 4 || header[0] != "segment_id" || header[1] != "channel" || header[2] != "patch_index") {
    throw ValidationError("prediction header must be 'segment_id,channel,patch_index,p_0,...'");
  }
  const int classes = static_cast<int>(header.size()) - 3;
  if (expected_classes > 0 && classes != expected_classes) {
    throw ValidationError("prediction file has " + std::to_string(classes) + " classes, expected " +
                          std::to_string(expected_classes));
  }
  PredictionMatrix matrix(classes);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (io::trim(line).empty()) continue;
    const auto fields = io::split_csv(line);
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) + " columns");
    }
    PatchKey key{fields[0], static_cast<int>(io::parse_int(fields[1], where + " channel")),
                 static_cast<int>(io::parse_int(fields[2], where + " patch_index"))};
    std::vector<double> probs;
    probs.reserve(static_cast<std::size_t>(classes));
    for (int c = 0; c < classes; ++c) probs.push_back(io::parse_double(fields[3 + static_cast<std::size_t>(c)], where));
    try {
      matrix.add_row(std::move(key), std::move(probs), 1e-6);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (expected_keys) {
    for (const auto& k : *expected_keys) {
      if (!matrix.find(k)) {
        throw ValidationError("missing prediction for patch (" + k.segment_id + ", " + std::to_string(k.channel) +
                              ", " + std::to_string(k.patch_index) + ")");
      }
    }
  }
  return matrix;
}

PredictionMatrix import_predictions(const std::filesystem::path& path, int expected_classes,
                                    const std::vector<PatchKey>* expected_keys) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open prediction file " + path.string());
  try {
    return parse_predictions(in, expected_classes, expected_keys);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace asc::model
