#include "asc/reference_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "asc/error.hpp"
#include "asc/random.hpp"
#include "asc/text_io.hpp"

namespace asc::model {
namespace {

constexpr double kInitRange = 0.05;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

void fill_uniform(Eigen::MatrixXd& m, Rng& rng) {
  // Row-major fill order so the draw sequence does not depend on storage order.
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-kInitRange, kInitRange);
  }
}

Eigen::MatrixXd standardized(const ReferenceModelParams& p, const Eigen::MatrixXd& raw_rows) {
  // samples x features -> features x samples
  Eigen::MatrixXd z = raw_rows.transpose();
  z.colwise() -= p.feature_mean;
  z.array().colwise() /= p.feature_scale.array();
  return z;
}

struct Forward {
  Eigen::MatrixXd inputs;  // features x n
  Eigen::MatrixXd hidden;  // hidden x n
  Eigen::MatrixXd probs;   // classes x n
  Eigen::MatrixXd log_probs;
};

Forward forward(const ReferenceModelParams& p, const Eigen::MatrixXd& raw_rows) {
  if (raw_rows.cols() != p.feature_count()) {
    throw ValidationError("feature dimension " + std::to_string(raw_rows.cols()) + " does not match model (" +
                          std::to_string(p.feature_count()) + ")");
  }
  Forward f;
  f.inputs = standardized(p, raw_rows);
  f.hidden = ((p.hidden_weights * f.inputs).colwise() + p.hidden_bias).array().tanh().matrix();
  Eigen::MatrixXd logits = (p.output_weights * f.hidden).colwise() + p.output_bias;
  f.log_probs.resize(logits.rows(), logits.cols());
  f.probs.resize(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    const double lse = mx + std::log((logits.col(j).array() - mx).exp().sum());
    f.log_probs.col(j) = logits.col(j).array() - lse;
    f.probs.col(j) = f.log_probs.col(j).array().exp();
  }
  return f;
}

void check_labels(const LabeledFeatures& data, int class_count) {
  if (static_cast<Eigen::Index>(data.labels.size()) != data.features.rows()) {
    throw ValidationError("feature rows and labels differ in count");
  }
  for (int l : data.labels) {
    if (l < 0 || l >= class_count) throw ValidationError("label " + std::to_string(l) + " out of range");
  }
}

LabeledFeatures take_rows(const LabeledFeatures& data, const std::vector<std::size_t>& idx, std::size_t begin,
                          std::size_t end) {
  LabeledFeatures out;
  out.features.resize(static_cast<Eigen::Index>(end - begin), data.features.cols());
  out.labels.resize(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    out.features.row(static_cast<Eigen::Index>(i - begin)) = data.features.row(static_cast<Eigen::Index>(idx[i]));
    out.labels[i - begin] = data.labels[idx[i]];
  }
  return out;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd json_matrix(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ValidationError("matrix data size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

Eigen::VectorXd json_vector(const nlohmann::json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

std::vector<double> vector_json(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Gradient zeros_like(const ReferenceModelParams& p) {
  Gradient g;
  g.hidden_weights = Eigen::MatrixXd::Zero(p.hidden_weights.rows(), p.hidden_weights.cols());
  g.hidden_bias = Eigen::VectorXd::Zero(p.hidden_bias.size());
  g.output_weights = Eigen::MatrixXd::Zero(p.output_weights.rows(), p.output_weights.cols());
  g.output_bias = Eigen::VectorXd::Zero(p.output_bias.size());
  return g;
}

}  // namespace

Eigen::VectorXd featurize(const Eigen::MatrixXd& patch, int grid) {
  const Eigen::Index rows = patch.rows();
  const Eigen::Index cols = patch.cols();
  if (grid <= 0 || grid > rows || grid > cols) {
    throw ValidationError("pooling grid " + std::to_string(grid) + " does not fit a " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " patch");
  }
  Eigen::VectorXd out(grid * grid);
  for (int gi = 0; gi < grid; ++gi) {
    const Eigen::Index r0 = gi * rows / grid;
    const Eigen::Index r1 = (gi + 1) * rows / grid;
    for (int gj = 0; gj < grid; ++gj) {
      const Eigen::Index c0 = gj * cols / grid;
      const Eigen::Index c1 = (gj + 1) * cols / grid;
      out(gi * grid + gj) = patch.block(r0, c0, r1 - r0, c1 - c0).mean();
    }
  }
  return out;
}

void ReferenceModelParams::validate() const {
  const int f = feature_count();
  const int h = hidden_width();
  const int c = class_count();
  if (grid <= 0 || h <= 0 || c <= 0) throw ValidationError("model dimensions must be positive");
  if (feature_mean.size() != f || feature_scale.size() != f || hidden_weights.rows() != h ||
      hidden_weights.cols() != f || output_weights.rows() != c || output_weights.cols() != h) {
    throw ValidationError("model parameter shapes are inconsistent");
  }
  const bool finite = feature_mean.allFinite() && feature_scale.allFinite() && hidden_weights.allFinite() &&
                      hidden_bias.allFinite() && output_weights.allFinite() && output_bias.allFinite();
  if (!finite) throw ValidationError("model parameters contain non-finite values");
  if ((feature_scale.array() <= 0.0).any()) throw ValidationError("feature scales must be positive");
}

bool ReferenceModelParams::operator==(const ReferenceModelParams& o) const {
  auto same = [](const auto& a, const auto& b) { return a.rows() == b.rows() && a.cols() == b.cols() && a == b; };
  return grid == o.grid && seed == o.seed && provenance == o.provenance && same(feature_mean, o.feature_mean) &&
         same(feature_scale, o.feature_scale) && same(hidden_weights, o.hidden_weights) &&
         same(hidden_bias, o.hidden_bias) && same(output_weights, o.output_weights) &&
         same(output_bias, o.output_bias);
}

ReferenceModelParams init_params(int grid, int hidden_width, int class_count, std::uint64_t seed) {
  if (grid <= 0 || hidden_width <= 0 || class_count < 2) {
    throw ValidationError("init_params: grid and hidden width must be positive, class count at least 2");
  }
  ReferenceModelParams p;
  p.grid = grid;
  p.seed = seed;
  p.provenance = "init(seed=" + std::to_string(seed) + ")";
  const int f = grid * grid;
  p.feature_mean = Eigen::VectorXd::Zero(f);
  p.feature_scale = Eigen::VectorXd::Ones(f);
  Rng rng(seed);
  p.hidden_weights.resize(hidden_width, f);
  fill_uniform(p.hidden_weights, rng);
  p.hidden_bias = Eigen::VectorXd::Zero(hidden_width);
  p.output_weights.resize(class_count, hidden_width);
  fill_uniform(p.output_weights, rng);
  p.output_bias = Eigen::VectorXd::Zero(class_count);
  return p;
}

ReferenceModelParams init_super_from_base(const ReferenceModelParams& base, int class_count, std::uint64_t seed) {
  base.validate();
  if (class_count < 2) throw ValidationError("a super task needs at least two outputs");
  ReferenceModelParams p = base;
  p.seed = seed;
  p.provenance = "transfer(" + base.provenance + ", seed=" + std::to_string(seed) + ")";
  Rng rng(seed);
  p.output_weights.resize(class_count, base.hidden_width());
  fill_uniform(p.output_weights, rng);
  p.output_bias = Eigen::VectorXd::Zero(class_count);
  return p;
}

void fit_standardization(ReferenceModelParams& params, const Eigen::MatrixXd& raw) {
  if (raw.rows() == 0) throw ValidationError("cannot fit standardisation on no samples");
  if (raw.cols() != params.feature_count()) throw ValidationError("feature dimension mismatch");
  params.feature_mean = raw.colwise().mean().transpose();
  Eigen::VectorXd scale(raw.cols());
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const double var = (raw.col(c).array() - params.feature_mean(c)).square().mean();
    const double sd = std::sqrt(var);
    scale(c) = sd > 1e-12 ? sd : 1.0;
  }
  params.feature_scale = scale;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp();
  return e / e.sum();
}

Eigen::VectorXd hidden_activations(const ReferenceModelParams& params, const Eigen::VectorXd& raw_features) {
  return forward(params, raw_features.transpose()).hidden.col(0);
}

Eigen::VectorXd predict_features(const ReferenceModelParams& params, const Eigen::VectorXd& raw_features) {
  return forward(params, raw_features.transpose()).probs.col(0);
}

Eigen::VectorXd predict(const ReferenceModelParams& params, const Eigen::MatrixXd& patch) {
  return predict_features(params, featurize(patch, params.grid));
}

double Gradient::squared_norm() const {
  return hidden_weights.squaredNorm() + hidden_bias.squaredNorm() + output_weights.squaredNorm() +
         output_bias.squaredNorm();
}

double loss(const ReferenceModelParams& params, const LabeledFeatures& batch) {
  check_labels(batch, params.class_count());
  if (batch.size() == 0) throw ValidationError("loss of an empty batch");
  const Forward f = forward(params, batch.features);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) total -= f.log_probs(batch.labels[i], static_cast<Eigen::Index>(i));
  return total / static_cast<double>(batch.size());
}

Gradient gradient(const ReferenceModelParams& params, const LabeledFeatures& batch) {
  check_labels(batch, params.class_count());
  if (batch.size() == 0) throw ValidationError("gradient of an empty batch");
  const Forward f = forward(params, batch.features);
  const double n = static_cast<double>(batch.size());
  Eigen::MatrixXd delta = f.probs;
  for (std::size_t i = 0; i < batch.size(); ++i) delta(batch.labels[i], static_cast<Eigen::Index>(i)) -= 1.0;
  delta /= n;
  Gradient g;
  g.output_weights = delta * f.hidden.transpose();
  g.output_bias = delta.rowwise().sum();
  const Eigen::MatrixXd back =
      ((params.output_weights.transpose() * delta).array() * (1.0 - f.hidden.array().square())).matrix();
  g.hidden_weights = back * f.inputs.transpose();
  g.hidden_bias = back.rowwise().sum();
  return g;
}

AdamOptimizer::AdamOptimizer(const ReferenceModelParams& shape, double learning_rate)
    : learning_rate_(learning_rate), m_(zeros_like(shape)), v_(zeros_like(shape)) {}

void AdamOptimizer::step(ReferenceModelParams& params, const Gradient& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
    theta.array() -= learning_rate_ * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEpsilon);
  };
  update(params.hidden_weights, m_.hidden_weights, v_.hidden_weights, grad.hidden_weights);
  update(params.hidden_bias, m_.hidden_bias, v_.hidden_bias, grad.hidden_bias);
  update(params.output_weights, m_.output_weights, v_.output_weights, grad.output_weights);
  update(params.output_bias, m_.output_bias, v_.output_bias, grad.output_bias);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (max_epochs < 0) throw ValidationError("max_epochs must be >= 0");
  if (grid < 1) throw ValidationError("grid must be >= 1");
  if (hidden_width < 1) throw ValidationError("hidden_width must be >= 1");
}

TrainResult train(const LabeledFeatures& data, int class_count, const TrainConfig& config,
                  const ReferenceModelParams* init, const LabeledFeatures* holdout) {
  config.validate();
  if (data.size() == 0) throw ValidationError("training set is empty");
  check_labels(data, class_count);
  std::set<int> present(data.labels.begin(), data.labels.end());
  if (static_cast<int>(present.size()) != class_count) {
    throw ValidationError("training set covers " + std::to_string(present.size()) + " of " +
                          std::to_string(class_count) + " classes");
  }

  TrainResult result;
  if (init) {
    init->validate();
    if (init->class_count() != class_count) throw ValidationError("initial model has the wrong class count");
    result.params = *init;
  } else {
    result.params = init_params(config.grid, config.hidden_width, class_count, config.seed);
    fit_standardization(result.params, data.features);
  }
  if (data.features.cols() != result.params.feature_count()) throw ValidationError("feature dimension mismatch");
  if (holdout) check_labels(*holdout, class_count);

  ReferenceModelParams current = result.params;
  auto monitored = [&](const ReferenceModelParams& p, double train_loss) {
    if (!std::isfinite(train_loss)) {
      throw TrainingError("training loss became non-finite (learning rate " + io::format_double(config.learning_rate) +
                          " may be too high)");
    }
    if (holdout && holdout->size() > 0) {
      const double h = loss(p, *holdout);
      result.holdout_loss.push_back(h);
      return h;
    }
    return train_loss;
  };

  result.train_loss.push_back(loss(current, data));
  double best = monitored(current, result.train_loss.back());
  result.best_epoch = 0;

  AdamOptimizer adam(current, config.learning_rate);
  Rng rng(derive_seed(config.seed, "minibatch-order"));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto mb = take_rows(data, order, start, std::min(order.size(), start + batch));
      adam.step(current, gradient(current, mb));
    }
    result.train_loss.push_back(loss(current, data));
    const double value = monitored(current, result.train_loss.back());
    if (value < best) {
      best = value;
      result.best_epoch = epoch;
      result.params = current;
    } else if (config.patience > 0 && epoch - result.best_epoch >= config.patience) {
      break;
    }
  }
  return result;
}

void save_checkpoint(const std::filesystem::path& path, const ReferenceModelParams& params) {
  params.validate();
  nlohmann::json j;
  j["format"] = "asc-reference-model";
  j["version"] = 1;
  j["grid"] = params.grid;
  j["feature_count"] = params.feature_count();
  j["hidden_width"] = params.hidden_width();
  j["class_count"] = params.class_count();
  j["seed"] = params.seed;
  j["provenance"] = params.provenance;
  j["feature_mean"] = vector_json(params.feature_mean);
  j["feature_scale"] = vector_json(params.feature_scale);
  j["hidden_weights"] = matrix_json(params.hidden_weights);
  j["hidden_bias"] = vector_json(params.hidden_bias);
  j["output_weights"] = matrix_json(params.output_weights);
  j["output_bias"] = vector_json(params.output_bias);
  io::write_text(path, j.dump(1) + "\n");
}

ReferenceModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format") != "asc-reference-model") throw ValidationError("not a reference model checkpoint");
    ReferenceModelParams p;
    p.grid = j.at("grid").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.provenance = j.at("provenance").get<std::string>();
    p.feature_mean = json_vector(j.at("feature_mean"));
    p.feature_scale = json_vector(j.at("feature_scale"));
    p.hidden_weights = json_matrix(j.at("hidden_weights"));
    p.hidden_bias = json_vector(j.at("hidden_bias"));
    p.output_weights = json_matrix(j.at("output_weights"));
    p.output_bias = json_vector(j.at("output_bias"));
    p.validate();
    if (p.hidden_width() != j.at("hidden_width").get<int>() || p.class_count() != j.at("class_count").get<int>()) {
      throw ValidationError("declared shapes do not match stored parameters");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace asc::model
