#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ade/bundle.hpp"
#include "ade/document.hpp"
#include "ade/embeddings.hpp"
#include "ade/fcnn.hpp"
#include "ade/metrics.hpp"

namespace ade {

inline const std::array<std::string, 2> kClassNames = {"NEG", "ADE"};

struct ClassifierConfig {
  TrainConfig train{.learning_rate = 0.0003,
                    .decay_po = 0.005,
                    .batch_size = 8,
                    .epochs = 30,
                    .dropout_rate = 0.2,
                    .seed = 42};
  std::vector<std::size_t> hidden{128, 64};
  double leaky_slope = kDefaultLeakySlope;
  bool class_weights = false;

  nlohmann::json to_json() const;
};

struct ClassPrediction {
  DocClass label = DocClass::kNeg;
  std::array<double, 2> probabilities{0.5, 0.5};
};

/// Averaged document embedding fed to an FCNN with a two-way softmax.
class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(Fcnn net, ClassifierConfig config);

  // Zero weights: every document scores [0.5, 0.5].
  static ClassifierModel zeros(std::size_t embedding_dim, const ClassifierConfig& config = {});

  std::size_t input_dim() const { return net_.config().input_dim; }
  const ClassifierConfig& config() const { return config_; }
  const Fcnn& network() const { return net_; }

  // Throws DimensionError when the store dim differs from the model's.
  ClassPrediction classify(const Document& doc, const EmbeddingStore& store) const;
  ClassPrediction classify_features(std::span<const float> features) const;

  Bundle to_bundle() const;
  static ClassifierModel from_bundle(const Bundle& bundle);

 private:
  Fcnn net_;
  ClassifierConfig config_;
};

std::vector<float> document_features(const Document& doc, const EmbeddingStore& store);

// Every doc needs gold_class. `dev` may be empty.
ClassifierModel train_classifier(std::span<const Document> docs, const EmbeddingStore& store,
                                 const ClassifierConfig& config = {},
                                 std::span<const Document> dev = {},
                                 TrainReport* report = nullptr, EpochCallback on_epoch = {});

// Throws EvaluationError when a doc lacks gold_class.
LabelScores evaluate_classifier(const ClassifierModel& model, std::span<const Document> docs,
                                const EmbeddingStore& store);

}  // namespace ade
