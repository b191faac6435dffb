#include "asc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "asc/error.hpp"
#include "asc/text_io.hpp"

namespace asc::cluster {

void ConfusionMatrix::validate() const {
  if (counts.rows() != counts.cols()) throw ValidationError("confusion matrix must be square");
  if (!counts.allFinite()) throw ValidationError("confusion matrix has non-finite entries");
  if (counts.size() > 0 && counts.minCoeff() < 0.0) throw ValidationError("confusion matrix has negative entries");
}

ConfusionMatrix accumulate_confusion(std::span<const int> truths, std::span<const int> predictions, int class_count) {
  if (truths.size() != predictions.size()) {
    throw ValidationError("confusion: " + std::to_string(truths.size()) + " truths but " +
                          std::to_string(predictions.size()) + " predictions");
  }
  if (class_count < 1) throw ValidationError("confusion: class count must be positive");
  ConfusionMatrix m;
  m.counts = Eigen::MatrixXd::Zero(class_count, class_count);
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const int t = truths[i];
    const int p = predictions[i];
    if (t < 0 || t >= class_count || p < 0 || p >= class_count) {
      throw ValidationError("confusion: label out of range at position " + std::to_string(i));
    }
    m.counts(t, p) += 1.0;
  }
  return m;
}

ConfusionMatrix average_confusions(std::span<const ConfusionMatrix> matrices) {
  if (matrices.empty()) throw ValidationError("cannot average an empty list of confusion matrices");
  ConfusionMatrix out;
  out.counts = Eigen::MatrixXd::Zero(matrices.front().counts.rows(), matrices.front().counts.cols());
  out.fold_count = 0;
  for (const auto& m : matrices) {
    m.validate();
    if (m.counts.rows() != out.counts.rows() || m.counts.cols() != out.counts.cols()) {
      throw ValidationError("confusion matrices differ in size");
    }
    out.counts += m.counts;
    out.fold_count += m.fold_count;
  }
  out.counts /= static_cast<double>(matrices.size());
  return out;
}

void save_confusion(const std::filesystem::path& path, const ConfusionMatrix& matrix,
                    const data::ClassCatalog& catalog) {
  if (catalog.size() != matrix.class_count()) throw ValidationError("catalog size does not match confusion matrix");
  std::ostringstream out;
  out << "truth\\predicted";
  for (const auto& n : catalog.names()) out << "," << n;
  out << "\n";
  for (int i = 0; i < matrix.class_count(); ++i) {
    out << catalog.name(i);
    for (int j = 0; j < matrix.class_count(); ++j) out << "," << io::format_double(matrix.counts(i, j));
    out << "\n";
  }
  io::write_text(path, out.str());
}

std::pair<ConfusionMatrix, data::ClassCatalog> load_confusion(const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& line : io::read_lines(path)) {
    if (!io::trim(line).empty()) rows.push_back(io::split_csv(line));
  }
  if (rows.empty()) throw ValidationError("empty confusion file " + path.string());
  std::vector<std::string> names(rows.front().begin() + 1, rows.front().end());
  data::ClassCatalog catalog(names);
  const int n = catalog.size();
  if (static_cast<int>(rows.size()) != n + 1) {
    throw ValidationError("confusion file needs " + std::to_string(n) + " data rows");
  }
  ConfusionMatrix m;
  m.counts.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i) + 1];
    const std::string where = "confusion row " + std::to_string(i + 2);
    if (static_cast<int>(r.size()) != n + 1) throw ValidationError(where + ": wrong column count");
    if (r[0] != catalog.name(i)) throw ValidationError(where + ": row label '" + r[0] + "' does not match header");
    for (int j = 0; j < n; ++j) m.counts(i, j) = io::parse_double(r[static_cast<std::size_t>(j) + 1], where);
  }
  m.validate();
  return {std::move(m), std::move(catalog)};
}

AffinityMatrix build_affinity(const ConfusionMatrix& confusion, std::optional<int> knn_k) {
  confusion.validate();
  const Eigen::Index n = confusion.counts.rows();
  AffinityMatrix out;
  out.knn_k = knn_k;
  out.weights = (confusion.counts + confusion.counts.transpose()) / 2.0;
  out.weights.diagonal().setZero();
  if (!knn_k) return out;
  if (*knn_k < 1) throw ValidationError("knn k must be positive");

  // keep(i, j) when j is among the k strongest neighbours of i.
  std::vector<std::vector<bool>> keep(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n)));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<Eigen::Index> others;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && out.weights(i, j) > 0.0) others.push_back(j);
    }
    std::stable_sort(others.begin(), others.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return out.weights(i, a) > out.weights(i, b); });
    const auto limit = std::min<std::size_t>(others.size(), static_cast<std::size_t>(*knn_k));
    for (std::size_t r = 0; r < limit; ++r) keep[static_cast<std::size_t>(i)][static_cast<std::size_t>(others[r])] = true;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto si = static_cast<std::size_t>(i);
      const auto sj = static_cast<std::size_t>(j);
      if (!keep[si][sj] && !keep[sj][si]) out.weights(i, j) = 0.0;
    }
  }
  out.weights = (out.weights + out.weights.transpose()) / 2.0;
  return out;
}

Eigen::MatrixXd normalized_affinity(const AffinityMatrix& affinity) {
  const Eigen::MatrixXd& w = affinity.weights;
  Eigen::VectorXd inv_sqrt(w.rows());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const double d = w.row(i).sum();
    inv_sqrt(i) = 1.0 / std::sqrt(d > 0.0 ? d : 1.0);
  }
  Eigen::MatrixXd l = inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal();
  return (l + l.transpose()) / 2.0;
}

data::SuperCategoryPartition spectral_cluster(const AffinityMatrix& affinity, int k, std::uint64_t seed) {
  const int n = affinity.size();
  if (n == 0 || affinity.weights.cols() != n) throw ValidationError("affinity matrix must be square and non-empty");
  if (k < 1 || k > n) throw ValidationError("cluster count must be in [1, " + std::to_string(n) + "]");
  if (k == 1) return data::SuperCategoryPartition::from_assignment(std::vector<int>(static_cast<std::size_t>(n), 0));

  const EigenPairs top = eigen_topk(normalized_affinity(affinity), k);
  Eigen::MatrixXd embedding = top.vectors;
  for (Eigen::Index i = 0; i < embedding.rows(); ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  const KMeansResult km = kmeans(embedding, k, seed);
  return data::SuperCategoryPartition::from_assignment(km.assignment);
}

}  // namespace asc::cluster
