#include "asc/simulation.hpp"

#include <algorithm>
#include <cstdio>

#include "asc/error.hpp"

namespace asc::harness {
namespace {

constexpr double kPeak = 0.7;

std::string class_name(int c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%02d", c);
  return buf;
}

std::string segment_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seg_%05d", i);
  return buf;
}

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

SimSpec SimSpec::normalized() const {
  SimSpec s = *this;
  if (s.class_count < 2) throw ValidationError("simulation needs at least two classes");
  if (s.planted.empty()) {
    if (s.class_count == 15) {
      s.planted = {{0, 1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}, {11, 12, 13, 14}};
    } else {
      // Three roughly equal contiguous blocks.
      const int groups = std::min(3, s.class_count);
      for (int g = 0; g < groups; ++g) {
        std::vector<int> block;
        for (int c = g * s.class_count / groups; c < (g + 1) * s.class_count / groups; ++c) block.push_back(c);
        s.planted.push_back(block);
      }
    }
  }
  if (s.p_super.empty()) s.p_super = {0.95};
  if (s.p_super.size() == 1 && s.planted.size() > 1) s.p_super.assign(s.planted.size(), s.p_super.front());
  if (s.p_super.size() != s.planted.size()) throw ValidationError("p_super needs one value per planted category");
  if (s.segment_count < 1) throw ValidationError("segment_count must be positive");
  if (s.patches_per_segment < 1) throw ValidationError("patches_per_segment must be positive");
  check_probability(s.p_base, "p_base");
  check_probability(s.within_share, "q (within-category share)");
  check_probability(s.segment_spread, "segment_spread");
  for (double p : s.p_super) check_probability(p, "p_super");
  (void)s.planted_partition();  // validates the cover
  return s;
}

std::vector<std::string> SimSpec::warnings() const {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < p_super.size(); ++j) {
    if (p_super[j] < p_base) {
      out.push_back("p_super[" + std::to_string(j) + "] is below p_base; punishment is unlikely to help");
    }
  }
  return out;
}

data::SuperCategoryPartition SimSpec::planted_partition() const {
  std::vector<data::SuperCategory> cats;
  for (const auto& block : planted) {
    data::SuperCategory c;
    c.members = block;
    cats.push_back(std::move(c));
  }
  return data::SuperCategoryPartition(std::move(cats), class_count);
}

data::ClassCatalog SimSpec::catalog() const {
  std::vector<std::string> names;
  for (int c = 0; c < class_count; ++c) names.push_back(class_name(c));
  return data::ClassCatalog(std::move(names));
}

double SimSpec::super_accuracy(int planted_category) const {
  return p_super.at(static_cast<std::size_t>(planted_category));
}

std::vector<double> peaked_row(int winner, int class_count) {
  std::vector<double> row(static_cast<std::size_t>(class_count), (1.0 - kPeak) / (class_count - 1));
  row[static_cast<std::size_t>(winner)] = kPeak;
  return row;
}

void draw_segments(const SimSpec& spec, Rng& rng, std::vector<std::string>& ids, std::vector<int>& truths) {
  ids.clear();
  truths.clear();
  for (int i = 0; i < spec.segment_count; ++i) {
    ids.push_back(segment_name(i));
    truths.push_back(i % spec.class_count);
  }
  rng.shuffle(truths);
}

model::PredictionMatrix simulate_base(const SimSpec& spec, const std::vector<std::string>& segment_ids,
                                      const std::vector<int>& truths, Rng& rng) {
  const auto partition = spec.planted_partition();
  const double spread = std::min({spec.segment_spread, spec.p_base, 1.0 - spec.p_base});
  model::PredictionMatrix base(spec.class_count);
  for (std::size_t i = 0; i < segment_ids.size(); ++i) {
    const int truth = truths[i];
    const auto& own = partition.category(partition.super_of(truth)).members;
    std::vector<int> siblings;
    std::vector<int> outside;
    for (int c = 0; c < spec.class_count; ++c) {
      if (c == truth) continue;
      (std::binary_search(own.begin(), own.end(), c) ? siblings : outside).push_back(c);
    }
    const double accuracy = rng.uniform(spec.p_base - spread, spec.p_base + spread);
    const bool within = rng.bernoulli(spec.within_share);
    const std::vector<int>& pool = (within && !siblings.empty()) || outside.empty() ? siblings : outside;
    const int confuser = pool[rng.index(pool.size())];
    for (int p = 0; p < spec.patches_per_segment; ++p) {
      const int predicted = rng.bernoulli(accuracy) ? truth : confuser;
      base.add_row({segment_ids[i], 0, p}, peaked_row(predicted, spec.class_count));
    }
  }
  return base;
}

model::PredictionMatrix simulate_super(const std::vector<std::string>& segment_ids, const std::vector<int>& truths,
                                       const data::SuperCategory& category, int patches_per_segment,
                                       double accuracy, Rng& rng) {
  const int outputs = category.task_class_count();
  model::PredictionMatrix out(outputs);
  for (std::size_t i = 0; i < segment_ids.size(); ++i) {
    const int target = category.task_label(truths[i]);
    for (int p = 0; p < patches_per_segment; ++p) {
      int winner = target;
      if (!rng.bernoulli(accuracy)) {
        if (target == category.negative_index()) {
          winner = static_cast<int>(rng.index(static_cast<std::size_t>(category.negative_index())));
        } else {
          winner = static_cast<int>(rng.index(static_cast<std::size_t>(outputs - 1)));
          if (winner >= target) ++winner;
        }
      }
      out.add_row({segment_ids[i], 0, p}, peaked_row(winner, outputs));
    }
  }
  return out;
}

SimulatedData simulate_classifiers(const SimSpec& raw) {
  const SimSpec spec = raw.normalized();
  Rng rng(spec.seed);
  SimulatedData d{spec.catalog(), spec.planted_partition(), {}, {}, model::PredictionMatrix(spec.class_count), {}};
  draw_segments(spec, rng, d.segment_ids, d.truths);
  d.base = simulate_base(spec, d.segment_ids, d.truths, rng);
  for (int j = 0; j < d.partition.size(); ++j) {
    d.supers.push_back(simulate_super(d.segment_ids, d.truths, d.partition.category(j), spec.patches_per_segment,
                                      spec.super_accuracy(j), rng));
  }
  return d;
}

}  // namespace asc::harness
