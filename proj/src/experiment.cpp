#include "ade/experiment.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "ade/corpus.hpp"
#include "ade/error.hpp"

namespace ade {

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kClassify:
      return "classify";
    case Task::kNer:
      return "ner";
    case Task::kRe:
      return "re";
  }
  return "ner";
}

Task parse_task(std::string_view name) {
  if (name == "classify" || name == "classifier") return Task::kClassify;
  if (name == "ner") return Task::kNer;
  if (name == "re") return Task::kRe;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

nlohmann::json ExperimentConfig::to_json(Task task) const {
  nlohmann::json j;
  switch (task) {
    case Task::kClassify:
      j = classifier.to_json();
      break;
    case Task::kNer:
      j = ner.to_json();
      break;
    case Task::kRe:
      j = re.to_json();
      break;
  }
  j["k_folds"] = k;
  j["cv_seed"] = seed;
  j["dev_ratio"] = dev_ratio;
  if (task == Task::kNer) {
    std::vector<std::string> names;
    for (auto m : modes) names.emplace_back(ade::to_string(m));
    j["match_modes"] = names;
  }
  return j;
}

std::vector<RelationCandidate> corpus_candidates(std::span<const Document> docs) {
  std::vector<RelationCandidate> out;
  for (const auto& d : docs) {
    if (!d.gold_spans) continue;
    auto c = labeled_relation_candidates(d);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Document> pick(std::span<const Document> corpus, const std::vector<std::size_t>& idx) {
  std::vector<Document> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(corpus[i]);
  return out;
}

// Score blocks of one trained-and-tested fold.
nlohmann::json run_fold(Task task, const std::vector<Document>& train,
                        const std::vector<Document>& dev, const std::vector<Document>& test,
                        const EmbeddingStore& store, const ExperimentConfig& cfg) {
  nlohmann::json blocks;
  switch (task) {
    case Task::kClassify: {
      auto model = train_classifier(train, store, cfg.classifier, dev);
      blocks["labels"] = evaluate_classifier(model, test, store).to_json();
      break;
    }
    case Task::kNer: {
      auto model = train_ner(train, store, cfg.ner, dev);
      std::vector<std::vector<EntitySpan>> gold, pred;
      for (const auto& d : test) {
        if (!d.gold_spans) throw EvaluationError("document '" + d.doc_id + "' has no gold spans");
        gold.push_back(*d.gold_spans);
        pred.push_back(model.predict_entities(d, store));
      }
      for (auto mode : cfg.modes) {
        blocks[std::string(to_string(mode))] = evaluate_spans(gold, pred, mode).to_json();
      }
      break;
    }
    case Task::kRe: {
      const auto tr = corpus_candidates(train);
      const auto dv = corpus_candidates(dev);
      const auto te = corpus_candidates(test);
      auto model = train_re(tr, store, cfg.re, dv);
      blocks["labels"] = evaluate_re(model, te, store).to_json();
      break;
    }
  }
  return blocks;
}

nlohmann::json mean_stdev(const std::vector<double>& xs) {
  double mean = 0.0;
  for (auto x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (auto x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {{"mean", mean}, {"stdev", std::sqrt(var)}};
}

}  // namespace

nlohmann::json run_cv_experiment(Task task, std::span<const Document> corpus,
                                 const EmbeddingStore& store, const ExperimentConfig& config) {
  if (config.modes.empty()) throw ConfigError("at least one match mode is required");
  const auto folds = kfold_split(corpus.size(), config.k, config.seed, config.dev_ratio);
  std::vector<nlohmann::json> results(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());

  auto work = [&](std::size_t f) {
    try {
      const auto train = pick(corpus, folds[f].train);
      const auto dev = pick(corpus, folds[f].dev);
      const auto test = pick(corpus, folds[f].test);
      nlohmann::json fold{{"fold", f},
                          {"n_train", train.size()},
                          {"n_dev", dev.size()},
                          {"n_test", test.size()}};
      std::vector<std::string> test_ids;
      for (const auto& d : test) test_ids.push_back(d.doc_id);
      fold["test_doc_ids"] = test_ids;
      fold["blocks"] = run_fold(task, train, dev, test, store, config);
      results[f] = std::move(fold);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };

  const auto workers = std::max<std::size_t>(1, std::min(config.workers, folds.size()));
  if (workers == 1) {
    for (std::size_t f = 0; f < folds.size(); ++f) work(f);
  } else {
    std::mutex mu;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t f;
          {
            std::lock_guard lock(mu);
            if (next >= folds.size()) return;
            f = next++;
          }
          work(f);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (!errors[f]) continue;
    try {
      std::rethrow_exception(errors[f]);
    } catch (const std::exception& e) {
      throw TrainingError("fold " + std::to_string(f) + ": " + e.what());
    }
  }

  nlohmann::json aggregate = nlohmann::json::object();
  for (const auto& [block, first] : results.front()["blocks"].items()) {
    for (const char* avg : {"macro", "micro"}) {
      for (const char* metric : {"precision", "recall", "f1"}) {
        std::vector<double> xs;
        for (const auto& r : results) xs.push_back(r["blocks"][block][avg][metric].get<double>());
        aggregate[block][avg][metric] = mean_stdev(xs);
      }
    }
  }
  return {{"task", std::string(to_string(task))},
          {"n_docs", corpus.size()},
          {"k", config.k},
          {"seed", config.seed},
          {"config", config.to_json(task)},
          {"folds", results},
          {"aggregate", aggregate}};
}

std::string cv_report_csv(const nlohmann::json& report) {
  std::ostringstream out;
  out << "block,average,precision_mean,precision_stdev,recall_mean,recall_stdev,f1_mean,f1_stdev\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& [block, scores] : report.at("aggregate").items()) {
    for (const char* avg : {"macro", "micro"}) {
      out << block << ',' << avg;
      for (const char* metric : {"precision", "recall", "f1"}) {
        const auto& m = scores.at(avg).at(metric);
        out << ',' << m.at("mean").get<double>() << ',' << m.at("stdev").get<double>();
      }
      out << '\n';
    }
  }
  return out.str();
}

// ---- timing

double time_inference(const NerModel& model, std::span<const Document> docs,
                      const EmbeddingStore& store) {
  const auto t0 = Clock::now();
  std::size_t sink = 0;
  for (const auto& d : docs) sink += model.predict_entities(d, store).size();
  const auto s = seconds_since(t0);
  static volatile std::size_t keep;
  keep = sink;
  (void)keep;
  return s;
}

double time_inference(const ClassifierModel& model, std::span<const Document> docs,
                      const EmbeddingStore& store) {
  const auto t0 = Clock::now();
  double sink = 0.0;
  for (const auto& d : docs) sink += model.classify(d, store).probabilities[1];
  const auto s = seconds_since(t0);
  static volatile double keep;
  keep = sink;
  (void)keep;
  return s;
}

double time_inference(const ReModel& model, std::span<const RelationCandidate> candidates,
                      const EmbeddingStore& store) {
  const auto t0 = Clock::now();
  double sink = 0.0;
  for (const auto& c : candidates) sink += classify_relation(model, c, store).probabilities[1];
  const auto s = seconds_since(t0);
  static volatile double keep;
  keep = sink;
  (void)keep;
  return s;
}

std::string hardware_descriptor() {
  std::string cpu = "unknown cpu";
  if (std::ifstream in("/proc/cpuinfo"); in) {
    for (std::string line; std::getline(in, line);) {
      if (line.rfind("model name", 0) == 0) {
        const auto colon = line.find(':');
        if (colon != std::string::npos) cpu = line.substr(line.find_first_not_of(' ', colon + 1));
        break;
      }
    }
  }
  std::string mem;
  if (std::ifstream in("/proc/meminfo"); in) {
    std::string key;
    std::size_t kb = 0;
    if (in >> key >> kb && key == "MemTotal:") {
      std::ostringstream s;
      s.precision(1);
      s << std::fixed << static_cast<double>(kb) / (1024.0 * 1024.0) << " GiB RAM";
      mem = s.str();
    }
  }
  auto out = cpu + ", " + std::to_string(std::thread::hardware_concurrency()) + " logical cores";
  if (!mem.empty()) out += ", " + mem;
  return out;
}

nlohmann::json TimingReport::to_json() const {
  return {{"task", std::string(to_string(task))},
          {"n_train", n_train},
          {"n_test", n_test},
          {"epochs", epochs},
          {"train_seconds", train_seconds},
          {"infer_seconds", infer_seconds},
          {"f1", f1},
          {"f1_micro", f1_micro},
          {"hardware", hardware}};
}

TimingReport benchmark_timing(Task task, std::span<const Document> train,
                              std::span<const Document> test, const EmbeddingStore& store,
                              const ExperimentConfig& config) {
  if (train.empty()) throw ConfigError("benchmark corpus is empty");
  if (test.empty()) test = train;
  TimingReport r;
  r.task = task;
  r.n_train = train.size();
  r.n_test = test.size();
  r.hardware = hardware_descriptor();
  switch (task) {
    case Task::kClassify: {
      r.epochs = config.classifier.train.epochs;
      auto t0 = Clock::now();
      auto model = train_classifier(train, store, config.classifier);
      r.train_seconds = seconds_since(t0);
      r.infer_seconds = time_inference(model, test, store);
      auto s = evaluate_classifier(model, test, store);
      r.f1 = s.macro.f1;
      r.f1_micro = s.micro.f1;
      break;
    }
    case Task::kNer: {
      r.epochs = config.ner.train.epochs;
      auto t0 = Clock::now();
      auto model = train_ner(train, store, config.ner);
      r.train_seconds = seconds_since(t0);
      r.infer_seconds = time_inference(model, test, store);
      auto s = evaluate_ner(model, test, store, MatchMode::kStrict).scores;
      r.f1 = s.macro.f1;
      r.f1_micro = s.micro.f1;
      break;
    }
    case Task::kRe: {
      r.epochs = config.re.train.epochs;
      const auto tr = corpus_candidates(train);
      const auto te = corpus_candidates(test);
      auto t0 = Clock::now();
      auto model = train_re(tr, store, config.re);
      r.train_seconds = seconds_since(t0);
      r.infer_seconds = time_inference(model, te, store);
      auto s = evaluate_re(model, te, store);
      r.f1 = s.macro.f1;
      r.f1_micro = s.micro.f1;
      break;
    }
  }
  return r;
}

}  // namespace ade
