#include "ade/relation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <string_view>

#include "ade/error.hpp"

namespace ade {

nlohmann::json ReFeatureConfig::to_json() const {
  return {{"vicinity_window", window},
          {"span_head", head == HeadRule::kLast ? "last" : "first"},
          {"feature_pad_multiple", pad_multiple}};
}

ReFeatureConfig ReFeatureConfig::from_json(const nlohmann::json& j) {
  ReFeatureConfig c;
  c.window = j.at("vicinity_window").get<std::size_t>();
  c.head = j.at("span_head").get<std::string>() == "first" ? HeadRule::kFirst : HeadRule::kLast;
  c.pad_multiple = j.at("feature_pad_multiple").get<std::size_t>();
  return c;
}

nlohmann::json ReConfig::to_json() const {
  auto j = features.to_json();
  j.update({{"learning_rate", train.learning_rate},
            {"lr_decay_po", train.decay_po},
            {"batch_size", train.batch_size},
            {"epochs", train.epochs},
            {"dropout_rate", train.dropout_rate},
            {"seed", train.seed},
            {"hidden_layers", hidden},
            {"leaky_slope", leaky_slope},
            {"class_weights", class_weights},
            {"imbalance_warning_ratio", imbalance_warning_ratio}});
  return j;
}

ReConfig ReConfig::from_json(const nlohmann::json& j) {
  ReConfig c;
  c.features = ReFeatureConfig::from_json(j);
  c.train.learning_rate = j.at("learning_rate").get<double>();
  c.train.decay_po = j.at("lr_decay_po").get<double>();
  c.train.batch_size = j.at("batch_size").get<std::size_t>();
  c.train.epochs = j.at("epochs").get<std::size_t>();
  c.train.dropout_rate = j.at("dropout_rate").get<double>();
  c.train.seed = j.at("seed").get<std::uint64_t>();
  c.hidden = j.at("hidden_layers").get<std::vector<std::size_t>>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.class_weights = j.at("class_weights").get<bool>();
  c.imbalance_warning_ratio = j.at("imbalance_warning_ratio").get<double>();
  return c;
}

std::size_t unpadded_feature_length(std::size_t dim) { return 6 * dim + 4; }

std::size_t feature_length(std::size_t dim, const ReFeatureConfig& config) {
  const auto raw = unpadded_feature_length(dim);
  const auto m = std::max<std::size_t>(config.pad_multiple, 1);
  return (raw + m - 1) / m * m;
}

namespace {

std::vector<float> mean_of(const Document& doc, std::size_t begin, std::size_t end,
                           const EmbeddingStore& store) {
  std::vector<float> acc(store.dim(), 0.0f);
  if (begin >= end) return acc;
  std::vector<float> row(store.dim());
  std::vector<double> sum(store.dim(), 0.0);
  for (std::size_t i = begin; i < end; ++i) {
    store.lookup_into(doc.tokens[i].text, row);
    for (std::size_t k = 0; k < row.size(); ++k) sum[k] += row[k];
  }
  const auto n = static_cast<double>(end - begin);
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] = static_cast<float>(sum[k] / n);
  return acc;
}

std::size_t head_of(const EntitySpan& s, HeadRule rule) {
  return rule == HeadRule::kLast ? s.end - 1 : s.start;
}

std::size_t boundary_gap(const EntitySpan& a, const EntitySpan& b) {
  if (a.overlaps(b)) return 0;
  return a.end <= b.start ? b.start - a.end : a.start - b.end;
}

}  // namespace

std::vector<float> span_embedding(const Document& doc, const EntitySpan& span,
                                  const EmbeddingStore& store) {
  check_span(span, doc.tokens.size());
  return mean_of(doc, span.start, span.end, store);
}

double semantic_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw DimensionError("similarity of vectors with different dims");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

SyntacticDistance syntactic_distance(const Document& doc, const EntitySpan& a,
                                     const EntitySpan& b, HeadRule head) {
  const auto L = doc.tokens.size();
  check_span(a, L);
  check_span(b, L);
  if (!doc.dep_heads) return {boundary_gap(a, b), false};
  const auto& heads = *doc.dep_heads;
  check_dep_heads(heads, L);

  std::vector<std::vector<std::size_t>> adj(L);
  for (std::size_t i = 0; i < L; ++i) {
    if (heads[i] >= 0) {
      const auto h = static_cast<std::size_t>(heads[i]);
      adj[i].push_back(h);
      adj[h].push_back(i);
    }
  }
  const auto from = head_of(a, head), to = head_of(b, head);
  std::vector<std::size_t> dist(L, SIZE_MAX);
  std::deque<std::size_t> queue{from};
  dist[from] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    if (u == to) return {dist[u], true};
    for (auto v : adj[u]) {
      if (dist[v] == SIZE_MAX) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return {boundary_gap(a, b), false};
}

std::vector<float> build_features(const Document& doc, const EntitySpan& ade,
                                  const EntitySpan& drug, const EmbeddingStore& store,
                                  const ReFeatureConfig& config) {
  const auto d = store.dim();
  const auto L = doc.tokens.size();
  std::vector<float> out;
  out.reserve(feature_length(d, config));
  const auto a = span_embedding(doc, ade, store);
  const auto b = span_embedding(doc, drug, store);
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  out.push_back(static_cast<float>(semantic_similarity(a, b)));
  out.push_back(static_cast<float>((static_cast<double>(drug.start) -
                                    static_cast<double>(ade.start)) /
                                   static_cast<double>(L)));
  const auto syn = syntactic_distance(doc, ade, drug, config.head);
  out.push_back(static_cast<float>(syn.distance));
  out.push_back(syn.dep_available ? 1.0f : 0.0f);
  const auto w = config.window;
  for (const auto* s : {&ade, &drug}) {
    const auto left = mean_of(doc, s->start > w ? s->start - w : 0, s->start, store);
    const auto right = mean_of(doc, s->end, std::min(L, s->end + w), store);
    out.insert(out.end(), left.begin(), left.end());
    out.insert(out.end(), right.begin(), right.end());
  }
  out.resize(feature_length(d, config), 0.0f);
  return out;
}

// ---- model

namespace {

FcnnConfig net_config(std::size_t dim, const ReConfig& c) {
  return {.input_dim = feature_length(dim, c.features),
          .hidden = c.hidden,
          .classes = 2,
          .leaky_slope = c.leaky_slope};
}

std::size_t label_index(const RelationCandidate& c) {
  switch (c.label) {
    case RelationLabel::kNegative:
      return 0;
    case RelationLabel::kPositive:
      return 1;
    default:
      throw TrainingError("relation candidate has no label");
  }
}

void collect(std::span<const RelationCandidate> cands, const EmbeddingStore& store,
             const ReFeatureConfig& fc, std::vector<std::vector<float>>& x,
             std::vector<std::size_t>& y) {
  for (const auto& c : cands) {
    if (!c.doc) throw TrainingError("relation candidate without a document");
    y.push_back(label_index(c));
    x.push_back(build_features(*c.doc, c.ade, c.drug, store, fc));
  }
}

}  // namespace

ReModel::ReModel(Fcnn net, ReConfig config, std::size_t embedding_dim)
    : net_(std::move(net)), config_(std::move(config)), dim_(embedding_dim) {}

ReModel ReModel::zeros(std::size_t embedding_dim, const ReConfig& config) {
  return ReModel(Fcnn::zeros(net_config(embedding_dim, config)), config, embedding_dim);
}

RelationPrediction ReModel::classify_features(std::span<const float> features) const {
  if (features.size() != net_.config().input_dim) {
    throw DimensionError("relation model expects " + std::to_string(net_.config().input_dim) +
                         " features, got " + std::to_string(features.size()));
  }
  const auto p = net_.probabilities(features);
  RelationPrediction out;
  out.probabilities = {p[0], p[1]};
  out.label = argmax(p) == 1 ? RelationLabel::kPositive : RelationLabel::kNegative;
  return out;
}

RelationPrediction ReModel::classify(const Document& doc, const EntitySpan& ade,
                                     const EntitySpan& drug, const EmbeddingStore& store) const {
  if (store.dim() != dim_) {
    throw DimensionError("relation model expects embedding dim " + std::to_string(dim_) +
                         ", store has " + std::to_string(store.dim()));
  }
  return classify_features(build_features(doc, ade, drug, store, config_.features));
}

RelationPrediction classify_relation(const ReModel& model, const RelationCandidate& candidate,
                                     const EmbeddingStore& store) {
  if (!candidate.doc) throw ConfigError("relation candidate without a document");
  return model.classify(*candidate.doc, candidate.ade, candidate.drug, store);
}

Bundle ReModel::to_bundle() const {
  Bundle b;
  b.kind = StageKind::kRe;
  b.manifest = bundle_manifest(StageKind::kRe, dim_, config_.to_json(),
                               nlohmann::json(kRelationNames));
  b.manifest["network"] = net_.config().to_json();
  b.manifest["feature_length"] = net_.config().input_dim;
  net_.write_to(b, "fcnn.");
  return b;
}

ReModel ReModel::from_bundle(const Bundle& bundle) {
  if (bundle.kind != StageKind::kRe) {
    throw FormatError("expected a re bundle, got " + std::string(to_string(bundle.kind)));
  }
  const auto& m = bundle.manifest;
  auto config = ReConfig::from_json(m.at("config"));
  const auto dim = bundle.embedding_dim();
  const auto net_cfg = FcnnConfig::from_json(m.at("network"));
  if (net_cfg.input_dim != feature_length(dim, config.features)) {
    throw FormatError("relation bundle feature length does not match its config");
  }
  return ReModel(Fcnn::read_from(bundle, "fcnn.", net_cfg), std::move(config), dim);
}

ReModel train_re(std::span<const RelationCandidate> candidates, const EmbeddingStore& store,
                 const ReConfig& config, std::span<const RelationCandidate> dev,
                 TrainReport* report, EpochCallback on_epoch) {
  if (candidates.empty()) throw TrainingError("relation training set is empty");
  std::vector<std::vector<float>> x, dx;
  std::vector<std::size_t> y, dy;
  collect(candidates, store, config.features, x, y);
  collect(dev, store, config.features, dx, dy);

  const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  const auto neg = y.size() - pos;
  if (pos == 0 || neg == 0) {
    throw TrainingError("relation training data has a single class (" + std::to_string(pos) +
                        " positive, " + std::to_string(neg) + " negative)");
  }
  TrainReport local;
  const double ratio = static_cast<double>(std::min(pos, neg)) / static_cast<double>(std::max(pos, neg));
  if (ratio < config.imbalance_warning_ratio) {
    auto msg = "class imbalance: " + std::to_string(pos) + " positive vs " + std::to_string(neg) +
               " negative candidates";
    std::clog << "warning: " << msg << '\n';
    local.warnings.push_back(std::move(msg));
  }

  FcnnTrainOptions opts;
  opts.train = config.train;
  opts.class_weights = config.class_weights;
  opts.class_names.assign(kRelationNames.begin(), kRelationNames.end());
  opts.select_best_dev = true;
  opts.on_epoch = std::move(on_epoch);
  auto net = train_fcnn(net_config(store.dim(), config), x, y, dx, dy, opts, &local);
  if (report) *report = std::move(local);
  return ReModel(std::move(net), config, store.dim());
}

LabelScores evaluate_re(const ReModel& model, std::span<const RelationCandidate> candidates,
                        const EmbeddingStore& store) {
  std::vector<std::size_t> gold, pred;
  for (const auto& c : candidates) {
    if (c.label == RelationLabel::kUnlabeled) throw EvaluationError("candidate has no gold label");
    gold.push_back(c.label == RelationLabel::kPositive ? 1 : 0);
    pred.push_back(classify_relation(model, c, store).label == RelationLabel::kPositive ? 1 : 0);
  }
  const std::array<std::string_view, 2> names{kRelationNames[0], kRelationNames[1]};
  return score_classification(gold, pred, names);
}

}  // namespace ade
