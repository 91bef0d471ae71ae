#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ade/bundle.hpp"
#include "ade/layers.hpp"
#include "ade/optim.hpp"
#include "ade/training.hpp"

namespace ade {

struct FcnnConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t classes = 2;
  double leaky_slope = kDefaultLeakySlope;

  nlohmann::json to_json() const;
  static FcnnConfig from_json(const nlohmann::json& j);
};

/// Feed-forward classifier: (affine -> batch-norm -> leaky ReLU -> dropout)
/// per hidden layer, then an affine layer into a softmax over the classes.
class Fcnn {
 public:
  Fcnn() = default;
  static Fcnn init(const FcnnConfig& config, std::mt19937_64& rng);
  // All weights zero; batch-norm at identity statistics. Logits are all zero.
  static Fcnn zeros(const FcnnConfig& config);

  const FcnnConfig& config() const { return config_; }

  // x is [B×input_dim]. Train mode updates batch-norm running statistics.
  Tensor logits(const Tensor& x, Mode mode, double dropout_rate, std::mt19937_64* rng);
  // Inference only; safe to call concurrently.
  Tensor infer_logits(const Tensor& x) const;
  // Softmax probabilities for one feature row.
  std::vector<double> probabilities(std::span<const float> features) const;

  ParamList params() const;     // trainable tensors
  ParamList state() const;      // trainable tensors and running statistics
  Fcnn clone() const;

  void write_to(Bundle& bundle, const std::string& prefix) const;
  static Fcnn read_from(const Bundle& bundle, const std::string& prefix, const FcnnConfig& config);

 private:
  FcnnConfig config_;
  std::vector<DenseLayer<float>> hidden_;
  std::vector<BatchNormParams<float>> norms_;
  DenseLayer<float> output_;
};

// Argmax with ties going to the lowest index.
std::size_t argmax(std::span<const double> values);

struct FcnnTrainOptions {
  TrainConfig train;
  bool class_weights = false;
  std::vector<std::string> class_names;
  // Keep the epoch with the best dev macro-F1 instead of the last one.
  bool select_best_dev = false;
  EpochCallback on_epoch;
};

/// Trains an Fcnn with Adam on dense feature rows. The dev set is optional;
/// without it selection falls back to the training set.
Fcnn train_fcnn(const FcnnConfig& config, std::span<const std::vector<float>> features,
                std::span<const std::size_t> labels,
                std::span<const std::vector<float>> dev_features,
                std::span<const std::size_t> dev_labels, const FcnnTrainOptions& options,
                TrainReport* report);

Tensor stack_rows(std::span<const std::vector<float>> rows, std::span<const std::size_t> index);

}  // namespace ade
