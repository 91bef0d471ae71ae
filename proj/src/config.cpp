#include "ade/config.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "ade/bundle.hpp"
#include "ade/error.hpp"

namespace ade {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(to_uint(key, item));
  return out;
}

const std::set<std::string> kNerOnly{"lstm_state_size",    "char_embedding_dim",
                                     "char_filters",       "char_kernel_size",
                                     "dropout_embeddings", "dropout_lstm_output",
                                     "tune_word_embeddings"};
const std::set<std::string> kFcnnOnly{"hidden_layers", "leaky_slope", "class_weights"};
const std::set<std::string> kReOnly{"vicinity_window", "span_head", "feature_pad_multiple",
                                    "imbalance_warning_ratio"};

}  // namespace

ConfigMap parse_config(std::string_view text) {
  ConfigMap out;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = trim(std::string_view(t).substr(0, eq));
    auto value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw FormatError("config line " + std::to_string(line_no) + ": empty key or value");
    }
    if (!out.emplace(key, value).second) {
      throw FormatError("config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    }
  }
  return out;
}

ConfigMap load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

void apply_config(const ConfigMap& values, Task task, ExperimentConfig& config) {
  TrainConfig* train = nullptr;
  switch (task) {
    case Task::kClassify:
      train = &config.classifier.train;
      break;
    case Task::kNer:
      train = &config.ner.train;
      break;
    case Task::kRe:
      train = &config.re.train;
      break;
  }
  for (const auto& [key, v] : values) {
    if (key == "learning_rate") {
      train->learning_rate = to_double(key, v);
    } else if (key == "lr_decay_po") {
      train->decay_po = to_double(key, v);
    } else if (key == "batch_size") {
      train->batch_size = to_uint(key, v);
    } else if (key == "epochs") {
      train->epochs = to_uint(key, v);
    } else if (key == "dropout_rate") {
      train->dropout_rate = to_double(key, v);
    } else if (key == "seed") {
      train->seed = to_uint(key, v);
    } else if (key == "k_folds") {
      config.k = to_uint(key, v);
    } else if (key == "dev_ratio") {
      config.dev_ratio = to_double(key, v);
    } else if (key == "cv_seed") {
      config.seed = to_uint(key, v);
    } else if (key == "cv_workers") {
      config.workers = to_uint(key, v);
    } else if (key == "match_modes") {
      config.modes.clear();
      for (const auto& m : split_list(v)) config.modes.push_back(parse_match_mode(m));
    } else if (kNerOnly.count(key)) {
      auto& n = config.ner;
      if (key == "lstm_state_size") n.lstm_state = to_uint(key, v);
      if (key == "char_embedding_dim") n.char_dim = to_uint(key, v);
      if (key == "char_filters") n.char_filters = to_uint(key, v);
      if (key == "char_kernel_size") n.char_kernel = to_uint(key, v);
      if (key == "dropout_embeddings") n.dropout_embeddings = to_bool(key, v);
      if (key == "dropout_lstm_output") n.dropout_lstm_output = to_bool(key, v);
      if (key == "tune_word_embeddings") n.tune_word_embeddings = to_bool(key, v);
    } else if (kFcnnOnly.count(key)) {
      if (task == Task::kNer) continue;
      auto& hidden = task == Task::kClassify ? config.classifier.hidden : config.re.hidden;
      auto& slope = task == Task::kClassify ? config.classifier.leaky_slope : config.re.leaky_slope;
      auto& weights =
          task == Task::kClassify ? config.classifier.class_weights : config.re.class_weights;
      if (key == "hidden_layers") hidden = to_sizes(key, v);
      if (key == "leaky_slope") slope = to_double(key, v);
      if (key == "class_weights") weights = to_bool(key, v);
    } else if (kReOnly.count(key)) {
      auto& r = config.re;
      if (key == "vicinity_window") r.features.window = to_uint(key, v);
      if (key == "feature_pad_multiple") r.features.pad_multiple = to_uint(key, v);
      if (key == "imbalance_warning_ratio") r.imbalance_warning_ratio = to_double(key, v);
      if (key == "span_head") {
        if (v == "last") {
          r.features.head = HeadRule::kLast;
        } else if (v == "first") {
          r.features.head = HeadRule::kFirst;
        } else {
          throw ConfigError("span_head must be 'last' or 'first'");
        }
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  train->validate();
  if (task == Task::kNer) config.ner.validate();
}

}  // namespace ade
