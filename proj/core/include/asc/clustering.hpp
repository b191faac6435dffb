// Confusion matrices and spectral construction of super categories.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "asc/dataset.hpp"

namespace asc::cluster {

/// counts(i, j): items with truth i predicted as j (possibly fold-averaged).
struct ConfusionMatrix {
  Eigen::MatrixXd counts;
  int fold_count = 1;

  int class_count() const { return static_cast<int>(counts.rows()); }
  void validate() const;
};

ConfusionMatrix accumulate_confusion(std::span<const int> truths, std::span<const int> predictions,
                                     int class_count);

/// Element-wise mean; fold_count becomes the sum of the inputs' fold counts.
ConfusionMatrix average_confusions(std::span<const ConfusionMatrix> matrices);

/// Grid with a class-name header row and column.
void save_confusion(const std::filesystem::path& path, const ConfusionMatrix& matrix,
                    const data::ClassCatalog& catalog);
/// Returns the matrix and the catalog read from its header row.
std::pair<ConfusionMatrix, data::ClassCatalog> load_confusion(const std::filesystem::path& path);

/// Symmetric, non-negative, zero diagonal.
struct AffinityMatrix {
  Eigen::MatrixXd weights;
  std::optional<int> knn_k;

  int size() const { return static_cast<int>(weights.rows()); }
};

/// W(i,j) = (M(i,j) + M(j,i)) / 2 off the diagonal. With knn_k, an edge is
/// kept only if it is among the knn_k strongest of row i or of row j.
AffinityMatrix build_affinity(const ConfusionMatrix& confusion, std::optional<int> knn_k = std::nullopt);

/// D^{-1/2} W D^{-1/2}; a zero degree is treated as one.
Eigen::MatrixXd normalized_affinity(const AffinityMatrix& affinity);

struct EigenPairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns, orthonormal
};

/// Full decomposition by cyclic Jacobi sweeps, sorted by descending eigenvalue.
EigenPairs jacobi_eigen(const Eigen::MatrixXd& symmetric, double tolerance = 1e-12, int max_sweeps = 100);

/// The k largest eigenpairs. Throws ValidationError if the input is not
/// symmetric within 1e-10 or k is out of range.
EigenPairs eigen_topk(const Eigen::MatrixXd& symmetric, int k);

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 100;
};

struct KMeansResult {
  std::vector<int> assignment;  // relabelled by first appearance
  double wcss = 0.0;
  Eigen::MatrixXd centers;      // k x dims, in relabelled order
};

/// k-means++ seeding and Lloyd iterations; best of `restarts` by WCSS.
/// Empty clusters are refilled with the point farthest from its centre, so
/// every cluster is non-empty whenever k <= number of points.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

double within_cluster_ss(const Eigen::MatrixXd& points, std::span<const int> assignment);

/// Ng-Jordan-Weiss: normalised affinity, top-k eigenvectors, unit-length
/// rows, k-means. Categories are ordered by smallest member.
data::SuperCategoryPartition spectral_cluster(const AffinityMatrix& affinity, int k, std::uint64_t seed);

}  // namespace asc::cluster
