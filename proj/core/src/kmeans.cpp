#include <algorithm>
#include <limits>
#include <set>

#include "asc/clustering.hpp"
#include "asc/error.hpp"
#include "asc/random.hpp"

namespace asc::cluster {
namespace {

double sq_dist(const Eigen::MatrixXd& points, Eigen::Index i, const Eigen::MatrixXd& centers, Eigen::Index c) {
  return (points.row(i) - centers.row(c)).squaredNorm();
}

Eigen::MatrixXd seed_centers(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centers(k, points.cols());
  centers.row(0) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& d = d2[static_cast<std::size_t>(i)];
      d = std::min(d, sq_dist(points, i, centers, c - 1));
      total += d;
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[static_cast<std::size_t>(i)];
        if (target < 0.0 && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    }
    centers.row(c) = points.row(pick);
  }
  return centers;
}

void assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers, std::vector<int>& assignment) {
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = sq_dist(points, i, centers, 0);
    for (Eigen::Index c = 1; c < centers.rows(); ++c) {
      const double d = sq_dist(points, i, centers, c);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assignment[static_cast<std::size_t>(i)] = best;
  }
}

// Moves far-away points into empty clusters until none is empty.
void refill_empty(const Eigen::MatrixXd& points, Eigen::MatrixXd& centers, std::vector<int>& assignment) {
  const int k = static_cast<int>(centers.rows());
  while (true) {
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int a : assignment) ++sizes[static_cast<std::size_t>(a)];
    const auto empty = std::find(sizes.begin(), sizes.end(), 0);
    if (empty == sizes.end()) return;
    Eigen::Index donor = -1;
    double far = -1.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const int a = assignment[static_cast<std::size_t>(i)];
      if (sizes[static_cast<std::size_t>(a)] < 2) continue;
      const double d = sq_dist(points, i, centers, a);
      if (d > far) {
        far = d;
        donor = i;
      }
    }
    const int target = static_cast<int>(empty - sizes.begin());
    assignment[static_cast<std::size_t>(donor)] = target;
    centers.row(target) = points.row(donor);
  }
}

void update_centers(const Eigen::MatrixXd& points, const std::vector<int>& assignment, Eigen::MatrixXd& centers) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(centers.rows(), centers.cols());
  std::vector<int> counts(static_cast<std::size_t>(centers.rows()), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int a = assignment[static_cast<std::size_t>(i)];
    sums.row(a) += points.row(i);
    ++counts[static_cast<std::size_t>(a)];
  }
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
  }
}

}  // namespace

double within_cluster_ss(const Eigen::MatrixXd& points, std::span<const int> assignment) {
  if (static_cast<Eigen::Index>(assignment.size()) != points.rows()) {
    throw ValidationError("assignment length does not match point count");
  }
  const int k = assignment.empty() ? 0 : *std::max_element(assignment.begin(), assignment.end()) + 1;
  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(k, points.cols());
  update_centers(points, {assignment.begin(), assignment.end()}, centers);
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) total += sq_dist(points, i, centers, assignment[static_cast<std::size_t>(i)]);
  return total;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& options) {
  const Eigen::Index n = points.rows();
  if (n == 0) throw ValidationError("k-means on an empty point set");
  if (k < 1 || k > n) throw ValidationError("k-means: k must be in [1, number of points]");
  if (options.restarts < 1 || options.max_iterations < 1) throw ValidationError("k-means: bad options");

  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(mix64(seed + static_cast<std::uint64_t>(r)));
    Eigen::MatrixXd centers = seed_centers(points, k, rng);
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < options.max_iterations; ++it) {
      std::vector<int> next(static_cast<std::size_t>(n));
      assign(points, centers, next);
      refill_empty(points, centers, next);
      const bool stable = next == assignment;
      assignment = std::move(next);
      update_centers(points, assignment, centers);
      if (stable) break;
    }
    const double wcss = within_cluster_ss(points, assignment);
    if (wcss < best.wcss) {
      best.wcss = wcss;
      best.assignment = assignment;
    }
  }

  // Relabel clusters by first appearance.
  std::vector<int> relabel(static_cast<std::size_t>(k), -1);
  int next_label = 0;
  for (int& a : best.assignment) {
    auto& r = relabel[static_cast<std::size_t>(a)];
    if (r == -1) r = next_label++;
    a = r;
  }
  best.centers = Eigen::MatrixXd::Zero(k, points.cols());
  update_centers(points, best.assignment, best.centers);
  return best;
}

}  // namespace asc::cluster
