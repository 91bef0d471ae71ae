#pragma once

#include <array>
#include <cstddef>
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

inline const std::array<std::string, 2> kRelationNames = {"Negative", "Positive"};

enum class HeadRule { kLast, kFirst };

struct ReFeatureConfig {
  std::size_t window = 25;        // tokens per side per entity
  HeadRule head = HeadRule::kLast;
  std::size_t pad_multiple = 16;  // total length rounded up to this

  nlohmann::json to_json() const;
  static ReFeatureConfig from_json(const nlohmann::json& j);
};

/// Layout, for embedding dim d:
///   [0, d)        ADE span embedding
///   [d, 2d)       Drug span embedding
///   2d            cosine similarity of the two span embeddings
///   2d+1          signed linear distance (drug.start - ade.start) / L
///   2d+2          syntactic distance
///   2d+3          1 when the distance came from dependency heads, else 0
///   then ADE left, ADE right, Drug left, Drug right context means (d each)
///   then zeros up to the padded length.
std::size_t feature_length(std::size_t dim, const ReFeatureConfig& config);
std::size_t unpadded_feature_length(std::size_t dim);

// Mean of token vectors in [start, end). Throws SpanError for invalid spans.
std::vector<float> span_embedding(const Document& doc, const EntitySpan& span,
                                  const EmbeddingStore& store);

// Cosine similarity, 0 when either side is the zero vector.
double semantic_similarity(std::span<const float> a, std::span<const float> b);

struct SyntacticDistance {
  std::size_t distance = 0;
  bool dep_available = false;
};

/// Shortest undirected path between the span heads in the dependency tree.
/// Without dependency heads, or when the heads sit in different trees, falls
/// back to the token gap between the nearest span boundaries (flag 0).
SyntacticDistance syntactic_distance(const Document& doc, const EntitySpan& a,
                                     const EntitySpan& b, HeadRule head = HeadRule::kLast);

std::vector<float> build_features(const Document& doc, const EntitySpan& ade,
                                  const EntitySpan& drug, const EmbeddingStore& store,
                                  const ReFeatureConfig& config = {});

struct ReConfig {
  // No decay is listed for this stage, so po defaults to 0.
  TrainConfig train{.learning_rate = 0.0001,
                    .decay_po = 0.0,
                    .batch_size = 8,
                    .epochs = 50,
                    .dropout_rate = 0.5,
                    .seed = 42};
  std::vector<std::size_t> hidden{256, 64};
  double leaky_slope = kDefaultLeakySlope;
  bool class_weights = false;
  ReFeatureConfig features;
  // Warn when minority / majority class count falls below this.
  double imbalance_warning_ratio = 0.1;

  nlohmann::json to_json() const;
  static ReConfig from_json(const nlohmann::json& j);
};

struct RelationPrediction {
  RelationLabel label = RelationLabel::kNegative;
  std::array<double, 2> probabilities{0.5, 0.5};
};

class ReModel {
 public:
  ReModel() = default;
  ReModel(Fcnn net, ReConfig config, std::size_t embedding_dim);
  static ReModel zeros(std::size_t embedding_dim, const ReConfig& config = {});

  std::size_t embedding_dim() const { return dim_; }
  const ReConfig& config() const { return config_; }

  RelationPrediction classify(const Document& doc, const EntitySpan& ade, const EntitySpan& drug,
                              const EmbeddingStore& store) const;
  RelationPrediction classify_features(std::span<const float> features) const;

  Bundle to_bundle() const;
  static ReModel from_bundle(const Bundle& bundle);

 private:
  Fcnn net_;
  ReConfig config_;
  std::size_t dim_ = 0;
};

RelationPrediction classify_relation(const ReModel& model, const RelationCandidate& candidate,
                                     const EmbeddingStore& store);

// Candidates must be labeled Positive or Negative and point at their documents.
// Returns the checkpoint with the best dev macro-F1 (training set when `dev`
// is empty).
ReModel train_re(std::span<const RelationCandidate> candidates, const EmbeddingStore& store,
                 const ReConfig& config = {}, std::span<const RelationCandidate> dev = {},
                 TrainReport* report = nullptr, EpochCallback on_epoch = {});

LabelScores evaluate_re(const ReModel& model, std::span<const RelationCandidate> candidates,
                        const EmbeddingStore& store);

}  // namespace ade
