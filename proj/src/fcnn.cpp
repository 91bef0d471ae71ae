#include "ade/fcnn.hpp"

#include <cmath>
#include <string_view>

#include "ade/error.hpp"
#include "ade/metrics.hpp"

namespace ade {

nlohmann::json FcnnConfig::to_json() const {
  return {{"input_dim", input_dim},
          {"hidden", hidden},
          {"classes", classes},
          {"leaky_slope", leaky_slope}};
}

FcnnConfig FcnnConfig::from_json(const nlohmann::json& j) {
  FcnnConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.classes = j.at("classes").get<std::size_t>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  return c;
}

namespace {

void check_config(const FcnnConfig& c) {
  if (c.input_dim == 0) throw ConfigError("network input dim must be positive");
  if (c.classes < 2) throw ConfigError("network needs at least two classes");
  for (auto h : c.hidden) {
    if (h == 0) throw ConfigError("hidden layer width must be positive");
  }
}

Tensor copy_leaf(const Tensor& t) {
  auto out = t.detach();
  out.set_requires_grad(t.requires_grad());
  return out;
}

}  // namespace

Fcnn Fcnn::init(const FcnnConfig& config, std::mt19937_64& rng) {
  check_config(config);
  Fcnn f;
  f.config_ = config;
  std::size_t in = config.input_dim;
  for (auto h : config.hidden) {
    f.hidden_.push_back(make_dense<float>(in, h, rng));
    f.norms_.push_back(make_batch_norm<float>(h));
    in = h;
  }
  f.output_ = make_dense<float>(in, config.classes, rng);
  return f;
}

Fcnn Fcnn::zeros(const FcnnConfig& config) {
  check_config(config);
  Fcnn f;
  f.config_ = config;
  std::size_t in = config.input_dim;
  for (auto h : config.hidden) {
    f.hidden_.push_back({Tensor::zeros({in, h}, true), Tensor::zeros({h}, true)});
    f.norms_.push_back(make_batch_norm<float>(h));
    in = h;
  }
  f.output_ = {Tensor::zeros({in, config.classes}, true), Tensor::zeros({config.classes}, true)};
  return f;
}

Tensor Fcnn::logits(const Tensor& x, Mode mode, double dropout_rate, std::mt19937_64* rng) {
  if (x.cols() != config_.input_dim) {
    throw DimensionError("network expects " + std::to_string(config_.input_dim) +
                         " features, got " + std::to_string(x.cols()));
  }
  Tensor h = x;
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    h = dense(h, hidden_[i].weight, hidden_[i].bias, Activation::kLinear);
    h = batch_norm(h, norms_[i], mode);
    h = leaky_relu(h, config_.leaky_slope);
    if (mode == Mode::kTrain && dropout_rate > 0.0) {
      if (!rng) throw ConfigError("dropout in train mode needs a random generator");
      h = dropout(h, dropout_rate, mode, *rng);
    }
  }
  return dense(h, output_.weight, output_.bias, Activation::kLinear);
}

Tensor Fcnn::infer_logits(const Tensor& x) const {
  NoGradGuard guard;
  // Copies share storage; infer mode never writes to the statistics.
  Fcnn view = *this;
  return view.logits(x, Mode::kInfer, 0.0, nullptr);
}

std::vector<double> Fcnn::probabilities(std::span<const float> features) const {
  Tensor x({1, features.size()}, std::vector<float>(features.begin(), features.end()));
  auto p = softmax(infer_logits(x));
  // Renormalize in double so the vector sums to 1 at double precision.
  std::vector<double> out(p.data().begin(), p.data().end());
  double total = 0.0;
  for (auto v : out) total += v;
  for (auto& v : out) v /= total;
  return out;
}

ParamList Fcnn::params() const {
  ParamList out;
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    const auto n = std::to_string(i);
    out.push_back({"hidden" + n + ".weight", hidden_[i].weight});
    out.push_back({"hidden" + n + ".bias", hidden_[i].bias});
    out.push_back({"bn" + n + ".gamma", norms_[i].gamma});
    out.push_back({"bn" + n + ".beta", norms_[i].beta});
  }
  out.push_back({"output.weight", output_.weight});
  out.push_back({"output.bias", output_.bias});
  return out;
}

ParamList Fcnn::state() const {
  auto out = params();
  for (std::size_t i = 0; i < norms_.size(); ++i) {
    const auto n = std::to_string(i);
    out.push_back({"bn" + n + ".running_mean", norms_[i].running_mean});
    out.push_back({"bn" + n + ".running_var", norms_[i].running_var});
  }
  return out;
}

Fcnn Fcnn::clone() const {
  Fcnn f;
  f.config_ = config_;
  for (const auto& d : hidden_) f.hidden_.push_back({copy_leaf(d.weight), copy_leaf(d.bias)});
  for (const auto& n : norms_) {
    f.norms_.push_back({copy_leaf(n.gamma), copy_leaf(n.beta), copy_leaf(n.running_mean),
                        copy_leaf(n.running_var)});
  }
  f.output_ = {copy_leaf(output_.weight), copy_leaf(output_.bias)};
  return f;
}

void Fcnn::write_to(Bundle& bundle, const std::string& prefix) const {
  for (const auto& [name, t] : state()) bundle.add(prefix + name, t);
}

Fcnn Fcnn::read_from(const Bundle& bundle, const std::string& prefix, const FcnnConfig& config) {
  auto f = zeros(config);
  for (auto& [name, t] : f.state()) {
    const auto& src = bundle.tensor(prefix + name);
    if (src.shape() != t.shape()) {
      throw FormatError("tensor '" + prefix + name + "' has shape " + shape_str(src.shape()) +
                        ", expected " + shape_str(t.shape()));
    }
    std::copy(src.data().begin(), src.data().end(), t.mutable_data().begin());
  }
  return f;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Tensor stack_rows(std::span<const std::vector<float>> rows, std::span<const std::size_t> index) {
  if (index.empty()) throw ConfigError("cannot stack zero rows");
  const auto d = rows[index[0]].size();
  std::vector<float> data;
  data.reserve(index.size() * d);
  for (auto i : index) {
    if (rows[i].size() != d) throw DimensionError("feature rows differ in length");
    data.insert(data.end(), rows[i].begin(), rows[i].end());
  }
  return Tensor({index.size(), d}, std::move(data));
}

namespace {

struct Evaluation {
  double loss = 0.0;
  double macro_f1 = 0.0;
};

Evaluation evaluate(const Fcnn& model, std::span<const std::vector<float>> features,
                    std::span<const std::size_t> labels, std::span<const std::string> names) {
  std::vector<std::size_t> all(features.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  NoGradGuard guard;
  auto logits = model.infer_logits(stack_rows(features, all));
  Evaluation e;
  e.loss = softmax_cross_entropy(logits, labels).item();
  auto probs = softmax(logits);
  const auto C = probs.cols();
  std::vector<std::size_t> pred(features.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::vector<double> row(probs.data().begin() + static_cast<std::ptrdiff_t>(i * C),
                            probs.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * C));
    pred[i] = argmax(row);
  }
  std::vector<std::string_view> views(names.begin(), names.end());
  e.macro_f1 = score_classification(labels, pred, views).macro.f1;
  return e;
}

}  // namespace

Fcnn train_fcnn(const FcnnConfig& config, std::span<const std::vector<float>> features,
                std::span<const std::size_t> labels,
                std::span<const std::vector<float>> dev_features,
                std::span<const std::size_t> dev_labels, const FcnnTrainOptions& options,
                TrainReport* report) {
  const auto& tc = options.train;
  tc.validate();
  if (features.empty()) throw TrainingError("training set is empty");
  if (features.size() != labels.size()) throw TrainingError("features and labels differ in count");
  if (features.size() < 2) throw TrainingError("training needs at least two examples");
  if (dev_features.size() != dev_labels.size()) {
    throw TrainingError("dev features and labels differ in count");
  }
  std::vector<std::size_t> class_counts(config.classes, 0);
  for (auto y : labels) {
    if (y >= config.classes) throw LabelError("label out of range");
    ++class_counts[y];
  }
  for (std::size_t c = 0; c < config.classes; ++c) {
    if (class_counts[c] == 0) {
      throw TrainingError("training data has no examples of class " +
                          (c < options.class_names.size() ? options.class_names[c]
                                                          : std::to_string(c)));
    }
  }
  for (const auto& f : features) {
    if (f.size() != config.input_dim) {
      throw DimensionError("feature length " + std::to_string(f.size()) + " does not match " +
                           std::to_string(config.input_dim));
    }
  }

  std::vector<double> weights;
  if (options.class_weights) {
    for (auto n : class_counts) {
      weights.push_back(static_cast<double>(labels.size()) /
                        (static_cast<double>(config.classes) * static_cast<double>(n)));
    }
  }
  std::vector<std::string> names = options.class_names;
  if (names.size() != config.classes) {
    names.clear();
    for (std::size_t c = 0; c < config.classes; ++c) names.push_back(std::to_string(c));
  }

  const bool has_dev = !dev_features.empty();
  const auto sel_features = has_dev ? dev_features : features;
  const auto sel_labels = has_dev ? dev_labels : labels;

  std::mt19937_64 rng(tc.seed);
  auto model = Fcnn::init(config, rng);
  Adam adam;
  std::optional<Fcnn> best;
  double best_score = -1.0;
  TrainReport local;

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : make_batches(features.size(), tc.batch_size, rng)) {
      auto params = model.params();
      zero_grads(params);
      std::vector<std::size_t> y;
      for (auto i : batch) y.push_back(labels[i]);
      auto logits = model.logits(stack_rows(features, batch), Mode::kTrain, tc.dropout_rate, &rng);
      auto loss = softmax_cross_entropy(logits, y, weights);
      if (!std::isfinite(loss.item())) throw NumericError("training loss is not finite");
      loss.backward();
      adam.step(params, tc, epoch);
      loss_sum += loss.item() * static_cast<double>(batch.size());
      seen += batch.size();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = tc.effective_lr(epoch);
    rec.train_loss = loss_sum / static_cast<double>(seen);
    const auto ev = evaluate(model, sel_features, sel_labels, names);
    if (has_dev) rec.dev_loss = ev.loss;
    rec.dev_score = ev.macro_f1;
    if (options.select_best_dev && ev.macro_f1 > best_score) {
      best_score = ev.macro_f1;
      best = model.clone();
      local.best_epoch = epoch;
    }
    local.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }
  if (!options.select_best_dev) local.best_epoch = tc.epochs - 1;
  if (report) {
    local.warnings.insert(local.warnings.begin(), report->warnings.begin(), report->warnings.end());
    *report = std::move(local);
  }
  return best ? std::move(*best) : model;
}

}  // namespace ade
