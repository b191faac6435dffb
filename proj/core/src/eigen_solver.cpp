#include <algorithm>
#include <cmath>
#include <numeric>

#include "asc/clustering.hpp"
#include "asc/error.hpp"

namespace asc::cluster {

EigenPairs jacobi_eigen(const Eigen::MatrixXd& symmetric, double tolerance, int max_sweeps) {
  const Eigen::Index n = symmetric.rows();
  if (n != symmetric.cols()) throw ValidationError("eigen decomposition needs a square matrix");
  Eigen::MatrixXd a = symmetric;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double threshold = tolerance * std::max(1.0, symmetric.norm());

  auto off_diagonal = [&] {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j) sum += a(i, j) * a(i, j);
      }
    }
    return std::sqrt(sum);
  };

  for (int sweep = 0; sweep < max_sweeps && off_diagonal() >= threshold; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
  EigenPairs out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

EigenPairs eigen_topk(const Eigen::MatrixXd& symmetric, int k) {
  const Eigen::Index n = symmetric.rows();
  if (n == 0 || n != symmetric.cols()) throw ValidationError("eigen_topk needs a non-empty square matrix");
  if (k < 1 || k > n) throw ValidationError("eigen_topk: k must be in [1, n]");
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw ValidationError("eigen_topk: matrix is not symmetric");
  }
  EigenPairs full = jacobi_eigen(symmetric);
  return {full.values.head(k), full.vectors.leftCols(k)};
}

}  // namespace asc::cluster
