#include "ade/ner.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ade/error.hpp"
#include "ade/utf8.hpp"

namespace ade {

void NerConfig::validate() const {
  train.validate();
  if (lstm_state == 0) throw ConfigError("lstm_state_size must be positive");
  if (char_dim == 0 || char_filters == 0) throw ConfigError("char feature sizes must be positive");
  if (char_kernel == 0 || char_kernel % 2 == 0) throw ConfigError("char_kernel_size must be odd");
}

nlohmann::json NerConfig::to_json() const {
  return {{"learning_rate", train.learning_rate},
          {"lr_decay_po", train.decay_po},
          {"batch_size", train.batch_size},
          {"epochs", train.epochs},
          {"dropout_rate", train.dropout_rate},
          {"seed", train.seed},
          {"lstm_state_size", lstm_state},
          {"char_embedding_dim", char_dim},
          {"char_filters", char_filters},
          {"char_kernel_size", char_kernel},
          {"dropout_embeddings", dropout_embeddings},
          {"dropout_lstm_output", dropout_lstm_output},
          {"tune_word_embeddings", tune_word_embeddings}};
}

NerConfig NerConfig::from_json(const nlohmann::json& j) {
  NerConfig c;
  c.train.learning_rate = j.at("learning_rate").get<double>();
  c.train.decay_po = j.at("lr_decay_po").get<double>();
  c.train.batch_size = j.at("batch_size").get<std::size_t>();
  c.train.epochs = j.at("epochs").get<std::size_t>();
  c.train.dropout_rate = j.at("dropout_rate").get<double>();
  c.train.seed = j.at("seed").get<std::uint64_t>();
  c.lstm_state = j.at("lstm_state_size").get<std::size_t>();
  c.char_dim = j.at("char_embedding_dim").get<std::size_t>();
  c.char_filters = j.at("char_filters").get<std::size_t>();
  c.char_kernel = j.at("char_kernel_size").get<std::size_t>();
  c.dropout_embeddings = j.at("dropout_embeddings").get<bool>();
  c.dropout_lstm_output = j.at("dropout_lstm_output").get<bool>();
  c.tune_word_embeddings = j.at("tune_word_embeddings").get<bool>();
  return c;
}

// ---- char vocabulary

CharVocab CharVocab::build(std::span<const Document> docs) {
  std::set<char32_t> seen;
  for (const auto& d : docs) {
    for (const auto& t : d.tokens) {
      for (auto c : utf8::decode(t.text).code_points) seen.insert(c);
    }
  }
  std::vector<char32_t> chars(seen.begin(), seen.end());
  return from_code_points(chars);
}

CharVocab CharVocab::from_code_points(std::span<const char32_t> chars) {
  CharVocab v;
  for (auto c : chars) {
    if (v.index_.emplace(c, v.chars_.size() + 1).second) v.chars_.push_back(c);
  }
  return v;
}

std::size_t CharVocab::id(char32_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? kUnknown : it->second;
}

std::vector<std::size_t> CharVocab::encode(std::string_view token) const {
  std::vector<std::size_t> ids;
  for (auto c : utf8::decode(token).code_points) ids.push_back(id(c));
  return ids;
}

// ---- templated forward

template <typename T>
std::vector<std::pair<std::string, BasicTensor<T>>> NerWeights<T>::named() const {
  std::vector<std::pair<std::string, BasicTensor<T>>> out{
      {"char_embeddings", char_embeddings},
      {"char_filters", char_filters},
      {"lstm_fw.w_input", forward.w_input},
      {"lstm_fw.w_hidden", forward.w_hidden},
      {"lstm_fw.bias", forward.bias},
      {"lstm_bw.w_input", backward.w_input},
      {"lstm_bw.w_hidden", backward.w_hidden},
      {"lstm_bw.bias", backward.bias},
      {"output.weight", output.weight},
      {"output.bias", output.bias},
  };
  if (word_table) out.emplace_back("word_table", *word_table);
  return out;
}

template <typename T>
BasicTensor<T> char_feature_tensor(const NerWeights<T>& w, std::span<const std::size_t> char_ids) {
  if (char_ids.empty()) throw EmptySequenceError("char features of an empty token");
  auto chars = gather_rows(w.char_embeddings, char_ids);
  return max_pool_over_time(conv1d(chars, w.char_filters));
}

template <typename T>
BasicTensor<T> ner_forward(const NerWeights<T>& w, const NerInput& input,
                           const DropoutPlan& plan) {
  const auto L = input.length;
  if (L == 0) throw EmptySequenceError("tagging an empty sentence");
  const auto d = input.word_dim;
  if (w.forward.input_dim() != d + w.char_filters.shape()[2]) {
    throw DimensionError("tagger input size does not match word dim " + std::to_string(d));
  }

  std::vector<BasicTensor<T>> rows;
  rows.reserve(L);
  for (std::size_t i = 0; i < L; ++i) {
    BasicTensor<T> word;
    if (input.tuned[i] && w.word_table) {
      word = row(*w.word_table, *input.tuned[i]);
    } else {
      std::vector<T> v(input.word_vectors.begin() + static_cast<std::ptrdiff_t>(i * d),
                       input.word_vectors.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
      word = BasicTensor<T>({1, d}, std::move(v));
    }
    auto chars = char_feature_tensor(w, input.char_ids[i]);
    auto chars_row = reshape(chars, {1, chars.size()});
    const BasicTensor<T> parts[] = {word, chars_row};
    rows.push_back(concat_cols<T>(parts));
  }
  auto x = concat_rows<T>(rows);
  const bool train = plan.rng && plan.rate > 0.0;
  if (train && plan.embeddings) x = dropout(x, plan.rate, Mode::kTrain, *plan.rng);
  auto h = bilstm(x, w.forward, w.backward);
  if (train && plan.lstm_output) h = dropout(h, plan.rate, Mode::kTrain, *plan.rng);
  return dense(h, w.output.weight, w.output.bias, Activation::kLinear);
}

template struct NerWeights<float>;
template struct NerWeights<double>;
template BasicTensor<float> char_feature_tensor(const NerWeights<float>&,
                                                std::span<const std::size_t>);
template BasicTensor<double> char_feature_tensor(const NerWeights<double>&,
                                                 std::span<const std::size_t>);
template BasicTensor<float> ner_forward(const NerWeights<float>&, const NerInput&,
                                        const DropoutPlan&);
template BasicTensor<double> ner_forward(const NerWeights<double>&, const NerInput&,
                                         const DropoutPlan&);

// ---- model

namespace {

Tensor copy_leaf(const Tensor& t) {
  auto out = t.detach();
  out.set_requires_grad(true);
  return out;
}

}  // namespace

NerModel NerModel::init(std::size_t word_dim, CharVocab vocab, const NerConfig& config,
                        std::mt19937_64& rng) {
  config.validate();
  if (word_dim == 0) throw ConfigError("word embedding dim must be positive");
  NerModel m;
  m.config_ = config;
  m.vocab_ = std::move(vocab);
  m.word_dim_ = word_dim;
  const auto V = m.vocab_.size(), C = config.char_dim, F = config.char_filters,
             K = config.char_kernel, H = config.lstm_state;
  auto& w = m.weights_;
  w.char_embeddings = glorot_uniform<float>({V, C}, C, C, rng);
  w.char_filters = glorot_uniform<float>({K, C, F}, K * C, F, rng);
  w.forward = make_lstm_weights<float>(word_dim + F, H, rng);
  w.backward = make_lstm_weights<float>(word_dim + F, H, rng);
  w.output = make_dense<float>(2 * H, kNumTags, rng);
  return m;
}

NerModel NerModel::zeros(std::size_t word_dim, CharVocab vocab, const NerConfig& config) {
  config.validate();
  NerModel m;
  m.config_ = config;
  m.vocab_ = std::move(vocab);
  m.word_dim_ = word_dim;
  const auto V = m.vocab_.size(), C = config.char_dim, F = config.char_filters,
             K = config.char_kernel, H = config.lstm_state;
  auto& w = m.weights_;
  w.char_embeddings = Tensor::zeros({V, C}, true);
  w.char_filters = Tensor::zeros({K, C, F}, true);
  w.forward = zero_lstm_weights<float>(word_dim + F, H);
  w.backward = zero_lstm_weights<float>(word_dim + F, H);
  w.output = {Tensor::zeros({2 * H, kNumTags}, true), Tensor::zeros({kNumTags}, true)};
  return m;
}

std::vector<float> NerModel::char_features(std::string_view token) const {
  if (token.empty()) throw EmptySequenceError("char features of an empty token");
  NoGradGuard guard;
  auto ids = vocab_.encode(token);
  auto t = char_feature_tensor(weights_, ids);
  return {t.data().begin(), t.data().end()};
}

NerInput NerModel::make_input(const Document& doc, const EmbeddingStore& store) const {
  if (store.dim() != word_dim_) {
    throw DimensionError("tagger expects embedding dim " + std::to_string(word_dim_) +
                         ", store has " + std::to_string(store.dim()));
  }
  NerInput in;
  in.length = doc.tokens.size();
  in.word_dim = word_dim_;
  in.word_vectors.resize(in.length * word_dim_);
  in.tuned.resize(in.length);
  for (std::size_t i = 0; i < in.length; ++i) {
    const auto& text = doc.tokens[i].text;
    if (text.empty()) throw EmptySequenceError("empty token in document '" + doc.doc_id + "'");
    store.lookup_into(text, std::span<float>(in.word_vectors).subspan(i * word_dim_, word_dim_));
    if (auto it = tuned_index_.find(text); it != tuned_index_.end()) in.tuned[i] = it->second;
    in.char_ids.push_back(vocab_.encode(text));
  }
  return in;
}

Tensor NerModel::tag_logits(const Document& doc, const EmbeddingStore& store) const {
  NoGradGuard guard;
  return ner_forward(weights_, make_input(doc, store));
}

std::vector<EntitySpan> NerModel::predict_entities(const Document& doc,
                                                   const EmbeddingStore& store) const {
  if (doc.tokens.empty()) return {};
  return decode_tags(tag_logits(doc, store)).spans;
}

void NerModel::enable_word_tuning(std::span<const std::string> tokens,
                                  const EmbeddingStore& store) {
  tuned_tokens_.clear();
  tuned_index_.clear();
  std::vector<float> table;
  for (const auto& t : tokens) {
    if (!tuned_index_.emplace(t, tuned_tokens_.size()).second) continue;
    tuned_tokens_.push_back(t);
    auto v = store.lookup(t);
    table.insert(table.end(), v.begin(), v.end());
  }
  if (tuned_tokens_.empty()) {
    weights_.word_table.reset();
    return;
  }
  weights_.word_table = Tensor({tuned_tokens_.size(), word_dim_}, std::move(table), true);
}

ParamList NerModel::params() const {
  ParamList out;
  for (auto& [name, t] : weights_.named()) out.push_back({name, t});
  return out;
}

NerModel NerModel::clone() const {
  NerModel m = *this;
  auto& w = m.weights_;
  w.char_embeddings = copy_leaf(w.char_embeddings);
  w.char_filters = copy_leaf(w.char_filters);
  for (auto* l : {&w.forward, &w.backward}) {
    l->w_input = copy_leaf(l->w_input);
    l->w_hidden = copy_leaf(l->w_hidden);
    l->bias = copy_leaf(l->bias);
  }
  w.output = {copy_leaf(w.output.weight), copy_leaf(w.output.bias)};
  if (w.word_table) w.word_table = copy_leaf(*w.word_table);
  return m;
}

Bundle NerModel::to_bundle() const {
  Bundle b;
  b.kind = StageKind::kNer;
  std::vector<std::string> tags;
  for (std::size_t i = 0; i < kNumTags; ++i) tags.emplace_back(to_string(static_cast<Tag>(i)));
  b.manifest = bundle_manifest(StageKind::kNer, word_dim_, config_.to_json(), tags);
  std::vector<std::uint32_t> chars(vocab_.chars().begin(), vocab_.chars().end());
  b.manifest["char_vocab"] = chars;
  b.manifest["tuned_tokens"] = tuned_tokens_;
  for (const auto& [name, t] : weights_.named()) b.add(name, t);
  return b;
}

NerModel NerModel::from_bundle(const Bundle& bundle) {
  if (bundle.kind != StageKind::kNer) {
    throw FormatError("expected an ner bundle, got " + std::string(to_string(bundle.kind)));
  }
  const auto& m = bundle.manifest;
  auto config = NerConfig::from_json(m.at("config"));
  const auto chars32 = m.at("char_vocab").get<std::vector<std::uint32_t>>();
  std::vector<char32_t> chars(chars32.begin(), chars32.end());
  auto model = zeros(bundle.embedding_dim(), CharVocab::from_code_points(chars), config);
  const auto tuned = m.value("tuned_tokens", std::vector<std::string>{});
  if (!tuned.empty()) {
    model.tuned_tokens_ = tuned;
    for (std::size_t i = 0; i < tuned.size(); ++i) model.tuned_index_.emplace(tuned[i], i);
    model.weights_.word_table = Tensor::zeros({tuned.size(), model.word_dim_}, true);
  }
  for (auto& [name, t] : model.weights_.named()) {
    const auto& src = bundle.tensor(name);
    if (src.shape() != t.shape()) {
      throw FormatError("tensor '" + name + "' has shape " + shape_str(src.shape()) +
                        ", expected " + shape_str(t.shape()));
    }
    std::copy(src.data().begin(), src.data().end(), t.mutable_data().begin());
  }
  return model;
}

// ---- decoding

DecodeResult decode_tags(const Tensor& logits) {
  if (logits.rank() != 2 || logits.cols() != kNumTags) {
    throw DimensionError("decode_tags expects [L×5] logits, got " + shape_str(logits.shape()));
  }
  std::vector<Tag> tags(logits.rows());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < kNumTags; ++k) {
      if (logits.at(i, k) > logits.at(i, best)) best = k;
    }
    tags[i] = static_cast<Tag>(best);
  }
  auto decoded = decode_iob(tags);
  return {std::move(decoded.spans), decoded.repairs};
}

// ---- training

std::vector<Tag> gold_tags(const Document& doc) {
  if (!doc.gold_spans) throw TrainingError("document '" + doc.doc_id + "' has no gold spans");
  return encode_iob(doc.tokens.size(), *doc.gold_spans);
}

NerTrainer::NerTrainer(NerModel& model, const EmbeddingStore& store, std::uint64_t seed)
    : model_(model), store_(store), rng_(seed) {}

double NerTrainer::step(std::span<const Document* const> batch, std::size_t epoch) {
  const auto& cfg = model_.config();
  DropoutPlan plan{cfg.train.dropout_rate, cfg.dropout_embeddings, cfg.dropout_lstm_output, &rng_};
  std::vector<Tensor> logits;
  std::vector<std::size_t> labels;
  for (const auto* doc : batch) {
    if (doc->tokens.empty()) continue;
    for (auto t : gold_tags(*doc)) labels.push_back(static_cast<std::size_t>(t));
    logits.push_back(ner_forward(model_.weights(), model_.make_input(*doc, store_), plan));
  }
  if (logits.empty()) return 0.0;
  auto params = model_.params();
  zero_grads(params);
  auto loss = softmax_cross_entropy(concat_rows<float>(logits), labels);
  const double value = loss.item();
  if (!std::isfinite(value)) throw NumericError("tagger loss is not finite");
  loss.backward();
  adam_.step(params, cfg.train, epoch);
  return value;
}

EntityReport evaluate_ner(const NerModel& model, std::span<const Document> docs,
                          const EmbeddingStore& store, MatchMode mode) {
  std::vector<std::vector<EntitySpan>> gold, pred;
  for (const auto& d : docs) {
    if (!d.gold_spans) throw EvaluationError("document '" + d.doc_id + "' has no gold spans");
    gold.push_back(*d.gold_spans);
    pred.push_back(model.predict_entities(d, store));
  }
  return evaluate_spans(gold, pred, mode);
}

NerModel train_ner(std::span<const Document> docs, const EmbeddingStore& store,
                   const NerConfig& config, std::span<const Document> dev, TrainReport* report,
                   EpochCallback on_epoch) {
  config.validate();
  std::vector<const Document*> usable;
  for (const auto& d : docs) {
    gold_tags(d);  // validates spans up front
    if (!d.tokens.empty()) usable.push_back(&d);
  }
  if (usable.empty()) throw TrainingError("tagger training corpus is empty");

  std::mt19937_64 rng(config.train.seed);
  auto model = NerModel::init(store.dim(), CharVocab::build(docs), config, rng);
  if (config.tune_word_embeddings) {
    std::vector<std::string> vocab;
    for (const auto* d : usable) {
      for (const auto& t : d->tokens) vocab.push_back(t.text);
    }
    model.enable_word_tuning(vocab, store);
  }
  NerTrainer trainer(model, store, rng());
  const auto selection = dev.empty() ? docs : dev;

  TrainReport local;
  std::optional<NerModel> best;
  double best_f1 = -1.0;
  for (std::size_t epoch = 0; epoch < config.train.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (const auto& idx : make_batches(usable.size(), config.train.batch_size, rng)) {
      std::vector<const Document*> batch;
      for (auto i : idx) batch.push_back(usable[i]);
      loss_sum += trainer.step(batch, epoch);
      ++n_batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = config.train.effective_lr(epoch);
    rec.train_loss = loss_sum / static_cast<double>(n_batches);
    const auto f1 = evaluate_ner(model, selection, store, MatchMode::kStrict).scores.micro.f1;
    rec.dev_score = f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best = model.clone();
      local.best_epoch = epoch;
    }
    local.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (report) *report = std::move(local);
  return best ? std::move(*best) : model;
}

}  // namespace ade
