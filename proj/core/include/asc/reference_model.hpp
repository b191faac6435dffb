// Desk-scale reference classifier: pooled patch features -> tanh hidden layer
// -> softmax, trained with minibatch Adam on mean cross-entropy.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace asc::model {

/// Mean-pools a square patch on a grid x grid lattice (row-major flatten).
/// Cell boundaries are floor(i * size / grid), so grid == size copies entries.
Eigen::VectorXd featurize(const Eigen::MatrixXd& patch, int grid);

struct ReferenceModelParams {
  int grid = 8;
  // Standardisation fitted on training features.
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  Eigen::MatrixXd hidden_weights;  // hidden x features
  Eigen::VectorXd hidden_bias;
  Eigen::MatrixXd output_weights;  // classes x hidden
  Eigen::VectorXd output_bias;
  std::uint64_t seed = 0;
  std::string provenance;

  int feature_count() const { return grid * grid; }
  int hidden_width() const { return static_cast<int>(hidden_bias.size()); }
  int class_count() const { return static_cast<int>(output_bias.size()); }

  /// Throws ValidationError on inconsistent shapes or non-finite values.
  void validate() const;

  bool operator==(const ReferenceModelParams& other) const;
};

/// Weights ~ U(-0.05, 0.05) from `seed`, biases zero, identity standardisation.
ReferenceModelParams init_params(int grid, int hidden_width, int class_count, std::uint64_t seed);

/// Copies standardisation and hidden layer, re-initialises the output layer
/// with `class_count` outputs from `seed`.
ReferenceModelParams init_super_from_base(const ReferenceModelParams& base, int class_count,
                                          std::uint64_t seed);

/// Per-feature mean and standard deviation (scale 1 where the deviation is ~0).
void fit_standardization(ReferenceModelParams& params, const Eigen::MatrixXd& raw_features);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// tanh(W1 * standardise(x) + b1) for one raw feature vector.
Eigen::VectorXd hidden_activations(const ReferenceModelParams& params, const Eigen::VectorXd& raw_features);

Eigen::VectorXd predict_features(const ReferenceModelParams& params, const Eigen::VectorXd& raw_features);
Eigen::VectorXd predict(const ReferenceModelParams& params, const Eigen::MatrixXd& patch);

/// Raw (unstandardised) features as rows plus integer labels.
struct LabeledFeatures {
  Eigen::MatrixXd features;  // samples x features
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

struct Gradient {
  Eigen::MatrixXd hidden_weights;
  Eigen::VectorXd hidden_bias;
  Eigen::MatrixXd output_weights;
  Eigen::VectorXd output_bias;

  double squared_norm() const;
};

/// Mean cross-entropy of the batch.
double loss(const ReferenceModelParams& params, const LabeledFeatures& batch);

/// Analytic gradient of the mean cross-entropy. Batch must be non-empty.
Gradient gradient(const ReferenceModelParams& params, const LabeledFeatures& batch);

/// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
class AdamOptimizer {
 public:
  AdamOptimizer(const ReferenceModelParams& shape, double learning_rate);
  void step(ReferenceModelParams& params, const Gradient& grad);
  long steps() const { return t_; }

 private:
  double learning_rate_;
  long t_ = 0;
  Gradient m_;
  Gradient v_;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 32;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  int patience = 20;  // epochs without improvement; <= 0 disables
  int grid = 8;
  int hidden_width = 64;

  void validate() const;
};

struct TrainResult {
  ReferenceModelParams params;
  std::vector<double> train_loss;    // per epoch, index 0 = before training
  std::vector<double> holdout_loss;  // empty without a holdout set
  int best_epoch = 0;
};

/// Minibatch Adam. Returns the parameters with the lowest monitored loss
/// (holdout when given, training otherwise). Without `init` a fresh model is
/// created and standardisation is fitted on `data`. Throws TrainingError when
/// the loss becomes non-finite.
TrainResult train(const LabeledFeatures& data, int class_count, const TrainConfig& config,
                  const ReferenceModelParams* init = nullptr, const LabeledFeatures* holdout = nullptr);

/// JSON checkpoint with explicit shapes and seed provenance.
void save_checkpoint(const std::filesystem::path& path, const ReferenceModelParams& params);
ReferenceModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace asc::model
