#include "ade/classifier.hpp"

#include <string_view>

#include "ade/error.hpp"

namespace ade {

nlohmann::json ClassifierConfig::to_json() const {
  return {{"learning_rate", train.learning_rate},
          {"lr_decay_po", train.decay_po},
          {"batch_size", train.batch_size},
          {"epochs", train.epochs},
          {"dropout_rate", train.dropout_rate},
          {"seed", train.seed},
          {"hidden_layers", hidden},
          {"leaky_slope", leaky_slope},
          {"class_weights", class_weights}};
}

namespace {

ClassifierConfig config_from_json(const nlohmann::json& j) {
  ClassifierConfig c;
  c.train.learning_rate = j.at("learning_rate").get<double>();
  c.train.decay_po = j.at("lr_decay_po").get<double>();
  c.train.batch_size = j.at("batch_size").get<std::size_t>();
  c.train.epochs = j.at("epochs").get<std::size_t>();
  c.train.dropout_rate = j.at("dropout_rate").get<double>();
  c.train.seed = j.at("seed").get<std::uint64_t>();
  c.hidden = j.at("hidden_layers").get<std::vector<std::size_t>>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.class_weights = j.at("class_weights").get<bool>();
  return c;
}

FcnnConfig net_config(std::size_t dim, const ClassifierConfig& c) {
  return {.input_dim = dim, .hidden = c.hidden, .classes = 2, .leaky_slope = c.leaky_slope};
}

}  // namespace

ClassifierModel::ClassifierModel(Fcnn net, ClassifierConfig config)
    : net_(std::move(net)), config_(std::move(config)) {}

ClassifierModel ClassifierModel::zeros(std::size_t embedding_dim, const ClassifierConfig& config) {
  return ClassifierModel(Fcnn::zeros(net_config(embedding_dim, config)), config);
}

std::vector<float> document_features(const Document& doc, const EmbeddingStore& store) {
  const auto tokens = doc.token_texts();
  return store.embed_tokens(tokens);
}

ClassPrediction ClassifierModel::classify_features(std::span<const float> features) const {
  if (features.size() != input_dim()) {
    throw DimensionError("classifier expects dim " + std::to_string(input_dim()) + ", got " +
                         std::to_string(features.size()));
  }
  const auto p = net_.probabilities(features);
  ClassPrediction out;
  out.probabilities = {p[0], p[1]};
  out.label = static_cast<DocClass>(argmax(p));
  return out;
}

ClassPrediction ClassifierModel::classify(const Document& doc, const EmbeddingStore& store) const {
  if (store.dim() != input_dim()) {
    throw DimensionError("classifier expects embedding dim " + std::to_string(input_dim()) +
                         ", store has " + std::to_string(store.dim()));
  }
  return classify_features(document_features(doc, store));
}

Bundle ClassifierModel::to_bundle() const {
  Bundle b;
  b.kind = StageKind::kClassifier;
  b.manifest = bundle_manifest(StageKind::kClassifier, input_dim(), config_.to_json(),
                               nlohmann::json(kClassNames));
  b.manifest["network"] = net_.config().to_json();
  net_.write_to(b, "fcnn.");
  return b;
}

ClassifierModel ClassifierModel::from_bundle(const Bundle& bundle) {
  if (bundle.kind != StageKind::kClassifier) {
    throw FormatError("expected a classifier bundle, got " + std::string(to_string(bundle.kind)));
  }
  const auto& m = bundle.manifest;
  auto config = config_from_json(m.at("config"));
  auto net = Fcnn::read_from(bundle, "fcnn.", FcnnConfig::from_json(m.at("network")));
  return ClassifierModel(std::move(net), std::move(config));
}

ClassifierModel train_classifier(std::span<const Document> docs, const EmbeddingStore& store,
                                 const ClassifierConfig& config, std::span<const Document> dev,
                                 TrainReport* report, EpochCallback on_epoch) {
  if (docs.empty()) throw TrainingError("classifier training corpus is empty");
  auto collect = [&](std::span<const Document> set, std::vector<std::vector<float>>& x,
                     std::vector<std::size_t>& y) {
    for (const auto& d : set) {
      if (!d.gold_class) throw TrainingError("document '" + d.doc_id + "' has no gold class");
      x.push_back(document_features(d, store));
      y.push_back(static_cast<std::size_t>(*d.gold_class));
    }
  };
  std::vector<std::vector<float>> x, dx;
  std::vector<std::size_t> y, dy;
  collect(docs, x, y);
  collect(dev, dx, dy);

  FcnnTrainOptions opts;
  opts.train = config.train;
  opts.class_weights = config.class_weights;
  opts.class_names.assign(kClassNames.begin(), kClassNames.end());
  opts.on_epoch = std::move(on_epoch);
  auto net = train_fcnn(net_config(store.dim(), config), x, y, dx, dy, opts, report);
  return ClassifierModel(std::move(net), config);
}

LabelScores evaluate_classifier(const ClassifierModel& model, std::span<const Document> docs,
                                const EmbeddingStore& store) {
  std::vector<std::size_t> gold, pred;
  for (const auto& d : docs) {
    if (!d.gold_class) throw EvaluationError("document '" + d.doc_id + "' has no gold class");
    gold.push_back(static_cast<std::size_t>(*d.gold_class));
    pred.push_back(static_cast<std::size_t>(model.classify(d, store).label));
  }
  const std::array<std::string_view, 2> names{kClassNames[0], kClassNames[1]};
  return score_classification(gold, pred, names);
}

}  // namespace ade
