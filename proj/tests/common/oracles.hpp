// Reference checks shared by the unit tests and the acceptance binary.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "asc/clustering.hpp"
#include "asc/dataset.hpp"
#include "asc/random.hpp"
#include "asc/reference_model.hpp"
#include "asc/voting.hpp"

namespace asc::test {

// Random model with weights large enough for a non-trivial loss surface and a
// random minibatch; both fully determined by `seed`.
inline std::pair<model::ReferenceModelParams, model::LabeledFeatures> random_instance(std::uint64_t seed,
                                                                                     int grid = 2,
                                                                                     int hidden = 5,
                                                                                     int classes = 3,
                                                                                     int batch = 6) {
  Rng rng(seed);
  auto p = model::init_params(grid, hidden, classes, seed);
  const int f = p.feature_count();
  for (int i = 0; i < f; ++i) {
    p.feature_mean(i) = rng.uniform(-0.5, 0.5);
    p.feature_scale(i) = rng.uniform(0.5, 2.0);
  }
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  };
  fill(p.hidden_weights);
  fill(p.hidden_bias);
  fill(p.output_weights);
  fill(p.output_bias);
  model::LabeledFeatures data;
  data.features.resize(batch, f);
  fill(data.features);
  for (int i = 0; i < batch; ++i) data.labels.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(classes))));
  return {p, data};
}

// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over every
// parameter, numeric derivatives by central differences with step h.
inline double gradient_check(std::uint64_t seed, double h = 1e-5) {
  auto [p, data] = random_instance(seed);
  const auto g = model::gradient(p, data);
  double worst = 0.0;
  auto check = [&](auto& param, const auto& analytic) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double saved = param.data()[i];
      param.data()[i] = saved + h;
      const double up = model::loss(p, data);
      param.data()[i] = saved - h;
      const double down = model::loss(p, data);
      param.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, rel);
    }
  };
  check(p.hidden_weights, g.hidden_weights);
  check(p.hidden_bias, g.hidden_bias);
  check(p.output_weights, g.output_weights);
  check(p.output_bias, g.output_bias);
  return worst;
}

// 15 classes in contiguous 6/5/4 blocks.
inline std::vector<int> planted_groups() {
  std::vector<int> g(15);
  for (int c = 0; c < 15; ++c) g[static_cast<std::size_t>(c)] = c < 6 ? 0 : (c < 11 ? 1 : 2);
  return g;
}

// Confusion counts with heavy within-block and light cross-block confusion.
inline cluster::ConfusionMatrix planted_confusion(std::uint64_t seed) {
  Rng rng(seed);
  const auto g = planted_groups();
  cluster::ConfusionMatrix m;
  m.counts = Eigen::MatrixXd::Zero(15, 15);
  for (int i = 0; i < 15; ++i) {
    for (int j = 0; j < 15; ++j) {
      if (i == j) {
        m.counts(i, j) = 60.0 + std::floor(rng.uniform(0.0, 20.0));
      } else if (g[static_cast<std::size_t>(i)] == g[static_cast<std::size_t>(j)]) {
        m.counts(i, j) = std::floor(rng.uniform(2.0, 12.0));
      } else {
        m.counts(i, j) = std::floor(rng.uniform(0.0, 2.5));
      }
    }
  }
  return m;
}

// Connected components of the graph with edges W(i,j) > threshold.
inline std::vector<int> components(const Eigen::MatrixXd& w, double threshold = 0.0) {
  const auto n = static_cast<int>(w.rows());
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<int> stack{s};
    label[static_cast<std::size_t>(s)] = next;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        if (label[static_cast<std::size_t>(v)] < 0 && (w(u, v) > threshold || w(v, u) > threshold)) {
          label[static_cast<std::size_t>(v)] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return label;
}

inline bool recovers_planted(std::uint64_t seed, int knn = 2) {
  const auto aff = cluster::build_affinity(planted_confusion(seed), knn);
  const auto found = cluster::spectral_cluster(aff, 3, seed);
  return found.same_grouping(data::SuperCategoryPartition::from_assignment(planted_groups()));
}

// Random segment: CN classes, PN patches, a random partition and per-super
// flag vectors. With `within_threshold` every flag count stays at or below
// floor(PN * 5 / 8), so no category is punished under the default config.
struct VotingInstance {
  std::vector<std::vector<double>> base_rows;
  vote::VotingVector votes;
  std::vector<vote::NegativeFlagVector> flags;
  data::SuperCategoryPartition partition;
};

inline std::vector<double> random_distribution(Rng& rng, int n) {
  std::vector<double> row(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (double& v : row) sum += (v = rng.uniform() + 1e-3);
  for (double& v : row) v /= sum;
  return row;
}

inline VotingInstance random_voting_instance(std::uint64_t seed, bool within_threshold) {
  Rng rng(seed);
  const int classes = 2 + static_cast<int>(rng.index(14));
  const int patches = 1 + static_cast<int>(rng.index(30));
  const int supers = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(std::min(classes, 5))));
  std::vector<int> groups(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) groups[static_cast<std::size_t>(c)] = c < supers ? c : static_cast<int>(rng.index(static_cast<std::size_t>(supers)));
  rng.shuffle(groups);
  auto partition = data::SuperCategoryPartition::from_assignment(groups);

  std::vector<std::vector<double>> rows;
  for (int p = 0; p < patches; ++p) rows.push_back(random_distribution(rng, classes));
  auto vv = vote::build_voting_vector("seg", rows, classes);

  std::vector<vote::NegativeFlagVector> flags;
  const int limit = patches * 5 / 8;
  for (const auto& cat : partition.categories()) {
    const int outputs = cat.task_class_count();
    int budget = within_threshold ? static_cast<int>(rng.index(static_cast<std::size_t>(limit + 1))) : patches;
    std::vector<std::vector<double>> srows;
    for (int p = 0; p < patches; ++p) {
      auto row = random_distribution(rng, outputs);
      const bool negative = budget > 0 && rng.bernoulli(0.7);
      const int winner = negative ? cat.negative_index() : static_cast<int>(rng.index(static_cast<std::size_t>(outputs - 1)));
      if (negative) --budget;
      std::swap(row[static_cast<std::size_t>(winner)], *std::max_element(row.begin(), row.end()));
      srows.push_back(row);
    }
    flags.push_back(vote::build_negative_flags("seg", srows, cat.id, outputs));
  }
  return {rows, vv, flags, partition};
}

}  // namespace asc::test
