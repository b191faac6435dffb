#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "asc/error.hpp"
#include "asc/predictions.hpp"
#include "asc/random.hpp"
#include "asc/reference_model.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace asc;
using namespace asc::model;

namespace {

Eigen::VectorXd forward_oracle(const ReferenceModelParams& p, const Eigen::MatrixXd& patch) {
  const int g = p.grid;
  const auto n = static_cast<int>(patch.rows());
  Eigen::VectorXd x(g * g);
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < g; ++b) {
      double sum = 0.0;
      int count = 0;
      for (int r = a * n / g; r < (a + 1) * n / g; ++r) {
        for (int c = b * n / g; c < (b + 1) * n / g; ++c) {
          sum += patch(r, c);
          ++count;
        }
      }
      x(a * g + b) = sum / count;
    }
  }
  const Eigen::VectorXd z = (x - p.feature_mean).cwiseQuotient(p.feature_scale);
  const Eigen::VectorXd h = (p.hidden_weights * z + p.hidden_bias).array().tanh().matrix();
  const Eigen::VectorXd logits = p.output_weights * h + p.output_bias;
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

// 20 points in 4 features, the two labels on either side of a hyperplane with
// a margin.
LabeledFeatures separable_set(std::uint64_t seed) {
  Rng rng(seed);
  LabeledFeatures d;
  d.features.resize(20, 4);
  const Eigen::Vector4d dir(1.0, -0.5, 0.25, 2.0);
  for (int i = 0; i < 20; ++i) {
    const int label = i % 2;
    Eigen::Vector4d v;
    for (int k = 0; k < 4; ++k) v(k) = rng.uniform(-1.0, 1.0);
    const double side = v.dot(dir) / dir.squaredNorm();
    v += ((label == 1 ? 0.6 : -0.6) - side) * dir;
    d.features.row(i) = v.transpose();
    d.labels.push_back(label);
  }
  return d;
}

// Perceptron with bias; converges iff the set is linearly separable.
bool perceptron_separates(const LabeledFeatures& d) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d.features.cols() + 1);
  for (int epoch = 0; epoch < 10000; ++epoch) {
    bool clean = true;
    for (std::size_t i = 0; i < d.size(); ++i) {
      Eigen::VectorXd x(w.size());
      x << d.features.row(static_cast<Eigen::Index>(i)).transpose(), 1.0;
      const double y = d.labels[i] == 1 ? 1.0 : -1.0;
      if (y * w.dot(x) <= 0.0) {
        w += y * x;
        clean = false;
      }
    }
    if (clean) return true;
  }
  return false;
}

double accuracy(const ReferenceModelParams& p, const LabeledFeatures& d) {
  int correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Eigen::VectorXd probs = predict_features(p, d.features.row(static_cast<Eigen::Index>(i)).transpose());
    Eigen::Index best = 0;
    probs.maxCoeff(&best);
    if (static_cast<int>(best) == d.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

}  // namespace

TEST(Featurize, ConstantPatch) {
  const Eigen::MatrixXd patch = Eigen::MatrixXd::Constant(143, 143, -7.0);
  const auto f = featurize(patch, 4);
  ASSERT_EQ(f.size(), 16);
  EXPECT_TRUE((f.array() == -7.0).all());
}

TEST(Featurize, GridOneIsMean) {
  const Eigen::MatrixXd patch = Eigen::MatrixXd::Random(143, 143);
  const auto f = featurize(patch, 1);
  ASSERT_EQ(f.size(), 1);
  EXPECT_NEAR(f(0), patch.mean(), 1e-12);
}

TEST(Featurize, FullGridCopiesEntries) {
  Eigen::MatrixXd patch(143, 143);
  for (int r = 0; r < 143; ++r) {
    for (int c = 0; c < 143; ++c) patch(r, c) = (r + c) % 2;
  }
  const auto f = featurize(patch, 143);
  for (int r = 0; r < 143; ++r) {
    for (int c = 0; c < 143; ++c) ASSERT_EQ(f(r * 143 + c), patch(r, c));
  }
  EXPECT_THROW(featurize(patch, 144), ValidationError);
  EXPECT_THROW(featurize(patch, 0), ValidationError);
}

TEST(Predict, ZeroModelIsUniform) {
  auto p = init_params(4, 8, 5, 1);
  p.hidden_weights.setZero();
  p.output_weights.setZero();
  const auto probs = predict(p, Eigen::MatrixXd::Random(143, 143));
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(probs(i), 0.2, 1e-15);
}

TEST(Predict, OutputBiasOnlyGivesSoftmaxOfBias) {
  auto p = init_params(4, 8, 3, 1);
  p.output_weights.setZero();
  p.output_bias << 1.0, -2.0, 0.5;
  const auto probs = predict(p, Eigen::MatrixXd::Random(143, 143));
  const Eigen::VectorXd expect = softmax(p.output_bias);
  EXPECT_LT((probs - expect).cwiseAbs().maxCoeff(), 1e-15);
  const double z = std::exp(1.0) + std::exp(-2.0) + std::exp(0.5);
  EXPECT_NEAR(expect(0), std::exp(1.0) / z, 1e-15);
}

TEST(Predict, MatchesForwardOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto [p, unused] = test::random_instance(seed, 8, 16, 15, 1);
    Rng rng(seed + 100);
    Eigen::MatrixXd patch(143, 143);
    for (Eigen::Index i = 0; i < patch.size(); ++i) patch.data()[i] = rng.uniform(-80.0, 0.0);
    p.feature_mean.setConstant(-40.0);
    p.feature_scale.setConstant(20.0);
    const auto got = predict(p, patch);
    const auto expect = forward_oracle(p, patch);
    EXPECT_LT((got - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Softmax, Invariants) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd logits(7);
    for (int i = 0; i < 7; ++i) logits(i) = rng.uniform(-30.0, 30.0);
    const auto p = softmax(logits);
    EXPECT_TRUE((p.array() >= 0.0).all());
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
    const auto shifted = softmax((logits.array() + 123.0).matrix());
    EXPECT_LT((p - shifted).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ASSERT_LT(test::gradient_check(seed), 1e-4) << "seed " << seed;
  }
}

TEST(Gradient, VanishesAtPerfectPrediction) {
  auto p = init_params(2, 3, 3, 4);
  p.output_weights.setZero();
  p.output_bias << 40.0, 0.0, 0.0;
  LabeledFeatures batch;
  batch.features = Eigen::MatrixXd::Random(5, 4);
  batch.labels.assign(5, 0);
  EXPECT_LT(std::sqrt(gradient(p, batch).squared_norm()), 1e-6);
}

TEST(Gradient, DuplicatedSampleGivesSameGradient) {
  auto [p, data] = test::random_instance(9, 2, 5, 3, 1);
  LabeledFeatures dup;
  dup.features = data.features.replicate(6, 1);
  dup.labels.assign(6, data.labels[0]);
  const auto a = gradient(p, data);
  const auto b = gradient(p, dup);
  EXPECT_LT((a.hidden_weights - b.hidden_weights).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((a.hidden_bias - b.hidden_bias).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((a.output_weights - b.output_weights).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((a.output_bias - b.output_bias).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto p = init_params(2, 4, 3, 5);
  const auto before = p;
  AdamOptimizer opt(p, 0.1);
  auto g = gradient(p, test::random_instance(1, 2, 4, 3, 2).second);
  g.hidden_weights.setZero();
  g.hidden_bias.setZero();
  g.output_weights.setZero();
  g.output_bias.setZero();
  opt.step(p, g);
  EXPECT_EQ(p, before);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto [p, data] = test::random_instance(2, 2, 4, 3, 4);
  const auto before = p;
  const auto g = gradient(p, data);
  AdamOptimizer opt(p, 0.01);
  opt.step(p, g);
  for (Eigen::Index i = 0; i < p.output_bias.size(); ++i) {
    const double expect = g.output_bias(i) == 0.0 ? 0.0 : -0.01 * (g.output_bias(i) > 0 ? 1.0 : -1.0);
    EXPECT_NEAR(p.output_bias(i) - before.output_bias(i), expect, 1e-8);
  }
}

TEST(Train, SeparableToySet) {
  const auto d = separable_set(11);
  ASSERT_TRUE(perceptron_separates(d));
  TrainConfig cfg;
  cfg.grid = 2;
  cfg.hidden_width = 8;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 4;
  cfg.max_epochs = 200;
  cfg.patience = 0;
  cfg.seed = 5;
  const auto r = train(d, 2, cfg);
  EXPECT_GE(accuracy(r.params, d), 0.95);
  EXPECT_EQ(r.train_loss.size(), 201u);
  EXPECT_LT(r.train_loss[static_cast<std::size_t>(r.best_epoch)], r.train_loss.front());
}

TEST(Train, ZeroEpochsReturnsInitialisation) {
  const auto d = separable_set(1);
  TrainConfig cfg;
  cfg.grid = 2;
  cfg.max_epochs = 0;
  cfg.seed = 8;
  const auto r = train(d, 2, cfg);
  auto expect = init_params(2, cfg.hidden_width, 2, 8);
  fit_standardization(expect, d.features);
  EXPECT_EQ(r.params, expect);
  EXPECT_EQ(r.best_epoch, 0);

  const auto with_init = train(d, 2, cfg, &expect);
  EXPECT_EQ(with_init.params, expect);
}

TEST(Train, Deterministic) {
  const auto d = separable_set(2);
  TrainConfig cfg;
  cfg.grid = 2;
  cfg.hidden_width = 6;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = 30;
  cfg.seed = 13;
  EXPECT_EQ(train(d, 2, cfg).params, train(d, 2, cfg).params);
  const auto first = train(d, 2, cfg).params;
  cfg.seed = 14;
  EXPECT_FALSE(train(d, 2, cfg).params == first);
}

TEST(Train, Preconditions) {
  auto d = separable_set(3);
  TrainConfig cfg;
  cfg.grid = 2;
  EXPECT_THROW(train(d, 3, cfg), ValidationError);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train(d, 2, cfg), ValidationError);
  cfg.learning_rate = 1e-3;
  cfg.grid = 3;
  EXPECT_THROW(train(d, 2, cfg), ValidationError);
}

TEST(Train, DivergenceIsReported) {
  auto d = separable_set(4);
  d.features *= 1e300;
  d.features(0, 0) = std::numeric_limits<double>::infinity();
  TrainConfig cfg;
  cfg.grid = 2;
  cfg.max_epochs = 3;
  auto init = init_params(2, cfg.hidden_width, 2, 1);
  EXPECT_THROW(train(d, 2, cfg, &init), TrainingError);
}

TEST(Train, HoldoutSelectsBestEpoch) {
  const auto d = separable_set(5);
  const auto h = separable_set(6);
  TrainConfig cfg;
  cfg.grid = 2;
  cfg.learning_rate = 5e-3;
  cfg.max_epochs = 40;
  cfg.patience = 5;
  const auto r = train(d, 2, cfg, nullptr, &h);
  ASSERT_FALSE(r.holdout_loss.empty());
  const auto best = std::min_element(r.holdout_loss.begin(), r.holdout_loss.end()) - r.holdout_loss.begin();
  EXPECT_EQ(r.best_epoch, best);
  EXPECT_NEAR(loss(r.params, h), r.holdout_loss[static_cast<std::size_t>(best)], 1e-12);
}

TEST(TransferInit, CopiesHiddenLayer) {
  auto [base, unused] = test::random_instance(21, 8, 32, 15, 1);
  const auto sup = init_super_from_base(base, 5, 77);
  EXPECT_EQ(sup.hidden_weights, base.hidden_weights);
  EXPECT_EQ(sup.hidden_bias, base.hidden_bias);
  EXPECT_EQ(sup.feature_mean, base.feature_mean);
  EXPECT_EQ(sup.feature_scale, base.feature_scale);
  EXPECT_EQ(sup.output_weights.rows(), 5);
  EXPECT_EQ(sup.output_weights.cols(), 32);
  EXPECT_EQ(sup.class_count(), 5);
  EXPECT_TRUE((sup.output_bias.array() == 0.0).all());
  EXPECT_EQ(init_super_from_base(base, 5, 77), sup);
  EXPECT_THROW(init_super_from_base(base, 1, 77), ValidationError);
}

TEST(Checkpoint, RoundTrip) {
  test::TempDir dir("ckpt");
  auto [p, unused] = test::random_instance(5, 4, 7, 3, 1);
  p.provenance = "fold0/base";
  save_checkpoint(dir / "m.json", p);
  EXPECT_EQ(load_checkpoint(dir / "m.json"), p);
  EXPECT_THROW(load_checkpoint(dir / "missing.json"), ValidationError);
}

TEST(Predictions, ParseWellFormed) {
  std::istringstream in(
      "segment_id,channel,patch_index,p_0,p_1,p_2\n"
      "a,0,0,0.2,0.3,0.5\n"
      "a,0,1,1,0,0\n"
      "b,0,0,0.1,0.1,0.8\n");
  const auto m = parse_predictions(in, 3);
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.segment_ids(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(m.segment_rows("a").size(), 2u);
}

TEST(Predictions, RejectsBadRowsWithLineNumber) {
  std::istringstream in(
      "segment_id,channel,patch_index,p_0,p_1\n"
      "a,0,0,0.5,0.5\n"
      "a,0,1,0.4,0.4\n");
  try {
    parse_predictions(in, 2);
    FAIL() << "expected rejection";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::istringstream wrong_width("segment_id,channel,patch_index,p_0,p_1\na,0,0,0.5,0.5\n");
  EXPECT_THROW(parse_predictions(wrong_width, 3), ValidationError);
  std::istringstream dup("segment_id,channel,patch_index,p_0,p_1\na,0,0,0.5,0.5\na,0,0,0.5,0.5\n");
  EXPECT_THROW(parse_predictions(dup, 2), ValidationError);
  std::istringstream negative("segment_id,channel,patch_index,p_0,p_1\na,0,0,1.5,-0.5\n");
  EXPECT_THROW(parse_predictions(negative, 2), ValidationError);
}

TEST(Predictions, ExpectedKeysMustBePresent) {
  const std::vector<PatchKey> keys{{"a", 0, 0}, {"a", 0, 1}};
  std::istringstream in("segment_id,channel,patch_index,p_0,p_1\na,0,0,0.5,0.5\n");
  EXPECT_THROW(parse_predictions(in, 2, &keys), ValidationError);
}

TEST(Predictions, ExportImportRoundTrip) {
  test::TempDir dir("preds");
  Rng rng(17);
  PredictionMatrix m(4);
  for (int s = 0; s < 5; ++s) {
    for (int p = 0; p < 10; ++p) {
      std::vector<double> row(4);
      double sum = 0.0;
      for (double& v : row) sum += (v = rng.uniform());
      for (double& v : row) v /= sum;
      m.add_row({"seg" + std::to_string(s), p / 5, p % 5}, row);
    }
  }
  export_predictions(dir / "p.csv", m);
  EXPECT_EQ(import_predictions(dir / "p.csv", 4), m);
}

TEST(Predictions, ArgmaxTieGoesToLowestIndex) {
  EXPECT_EQ(argmax({0.25, 0.25, 0.25, 0.25}), 0);
  EXPECT_EQ(argmax({0.1, 0.45, 0.45}), 1);
}
