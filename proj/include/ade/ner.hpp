#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ade/bundle.hpp"
#include "ade/document.hpp"
#include "ade/embeddings.hpp"
#include "ade/iob.hpp"
#include "ade/layers.hpp"
#include "ade/metrics.hpp"
#include "ade/optim.hpp"
#include "ade/training.hpp"

namespace ade {

struct NerConfig {
  TrainConfig train{.learning_rate = 0.001,
                    .decay_po = 0.005,
                    .batch_size = 8,
                    .epochs = 35,
                    .dropout_rate = 0.5,
                    .seed = 42};
  std::size_t lstm_state = 200;
  std::size_t char_dim = 16;
  std::size_t char_filters = 25;
  std::size_t char_kernel = 3;
  bool dropout_embeddings = true;    // after concat(word, char features)
  bool dropout_lstm_output = true;   // after the BiLSTM
  bool tune_word_embeddings = false;

  void validate() const;
  nlohmann::json to_json() const;
  static NerConfig from_json(const nlohmann::json& j);
};

/// Code point -> dense index. Index 0 is reserved for unknown characters.
class CharVocab {
 public:
  static constexpr std::size_t kUnknown = 0;

  CharVocab() = default;
  static CharVocab build(std::span<const Document> docs);
  static CharVocab from_code_points(std::span<const char32_t> chars);

  std::size_t id(char32_t c) const;
  std::size_t size() const { return chars_.size() + 1; }
  // Known characters in index order (index i + 1).
  const std::vector<char32_t>& chars() const { return chars_; }
  std::vector<std::size_t> encode(std::string_view token) const;

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, std::size_t> index_;
};

template <typename T>
struct NerWeights {
  BasicTensor<T> char_embeddings;  // [V_char × char_dim]
  BasicTensor<T> char_filters;     // [K × char_dim × F]
  LstmWeights<T> forward;
  LstmWeights<T> backward;
  DenseLayer<T> output;            // [2H × 5]
  std::optional<BasicTensor<T>> word_table;  // tuned word vectors, when enabled

  std::vector<std::pair<std::string, BasicTensor<T>>> named() const;

  template <typename U>
  NerWeights<U> cast() const {
    NerWeights<U> w{char_embeddings.template cast<U>(), char_filters.template cast<U>(),
                    forward.template cast<U>(), backward.template cast<U>(),
                    {output.weight.template cast<U>(), output.bias.template cast<U>()},
                    std::nullopt};
    if (word_table) w.word_table = word_table->template cast<U>();
    return w;
  }
};

// Precomputed per-document inputs, independent of the scalar type.
struct NerInput {
  std::size_t length = 0;
  std::size_t word_dim = 0;
  std::vector<float> word_vectors;                  // [L × word_dim]
  std::vector<std::optional<std::size_t>> tuned;    // row in word_table, if any
  std::vector<std::vector<std::size_t>> char_ids;
};

struct DropoutPlan {
  double rate = 0.0;
  bool embeddings = false;
  bool lstm_output = false;
  std::mt19937_64* rng = nullptr;
};

// Char embeddings -> conv1d -> max over time, giving [F].
template <typename T>
BasicTensor<T> char_feature_tensor(const NerWeights<T>& w, std::span<const std::size_t> char_ids);

// concat(word vector, char features) -> BiLSTM -> dense, giving [L × 5].
template <typename T>
BasicTensor<T> ner_forward(const NerWeights<T>& w, const NerInput& input,
                           const DropoutPlan& dropout = {});

class NerModel {
 public:
  NerModel() = default;
  static NerModel init(std::size_t word_dim, CharVocab vocab, const NerConfig& config,
                       std::mt19937_64& rng);
  static NerModel zeros(std::size_t word_dim, CharVocab vocab, const NerConfig& config = {});

  std::size_t word_dim() const { return word_dim_; }
  const NerConfig& config() const { return config_; }
  const CharVocab& vocab() const { return vocab_; }
  const NerWeights<float>& weights() const { return weights_; }
  NerWeights<float>& mutable_weights() { return weights_; }

  // Throws EmptySequenceError for an empty token.
  std::vector<float> char_features(std::string_view token) const;
  NerInput make_input(const Document& doc, const EmbeddingStore& store) const;
  // Infer-mode logits [L × 5]; throws EmptySequenceError when L = 0.
  Tensor tag_logits(const Document& doc, const EmbeddingStore& store) const;
  std::vector<EntitySpan> predict_entities(const Document& doc, const EmbeddingStore& store) const;

  // Creates a trainable copy of the store rows for these tokens.
  void enable_word_tuning(std::span<const std::string> tokens, const EmbeddingStore& store);

  ParamList params() const;
  NerModel clone() const;

  Bundle to_bundle() const;
  static NerModel from_bundle(const Bundle& bundle);

 private:
  NerConfig config_;
  CharVocab vocab_;
  std::size_t word_dim_ = 0;
  NerWeights<float> weights_;
  std::vector<std::string> tuned_tokens_;
  std::unordered_map<std::string, std::size_t> tuned_index_;
};

struct DecodeResult {
  std::vector<EntitySpan> spans;
  std::size_t repairs = 0;
};

// Per-token argmax (ties to the earlier tag), IOB repair, span extraction.
DecodeResult decode_tags(const Tensor& logits);

/// One optimizer step per call over a batch of sentences; the loss is the
/// mean token-level cross-entropy across the whole batch.
class NerTrainer {
 public:
  NerTrainer(NerModel& model, const EmbeddingStore& store, std::uint64_t seed);
  double step(std::span<const Document* const> batch, std::size_t epoch);

 private:
  NerModel& model_;
  const EmbeddingStore& store_;
  Adam adam_;
  std::mt19937_64 rng_;
};

std::vector<Tag> gold_tags(const Document& doc);

// Returns the checkpoint with the best dev strict micro-F1 (training set
// when `dev` is empty).
NerModel train_ner(std::span<const Document> docs, const EmbeddingStore& store,
                   const NerConfig& config = {}, std::span<const Document> dev = {},
                   TrainReport* report = nullptr, EpochCallback on_epoch = {});

EntityReport evaluate_ner(const NerModel& model, std::span<const Document> docs,
                          const EmbeddingStore& store, MatchMode mode);

}  // namespace ade
